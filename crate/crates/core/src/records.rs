//! Failure records, run manifests and their on-disk formats.
//!
//! A failure record is one evaluation instance: an opaque identifier plus the
//! number of wrong attempts the subject made before producing the reference
//! answer. Records are line oriented (JSONL or CSV with a header) so large
//! runs can be streamed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// One evaluated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRecord {
    pub instance_id: String,
    pub failure_count: u64,
    /// Positive multiplicity, 1 unless the producer says otherwise.
    pub weight: f64,
    /// Fields the toolkit does not interpret, kept for round trips.
    pub extra: BTreeMap<String, Value>,
}

impl FailureRecord {
    pub fn new(instance_id: impl Into<String>, failure_count: u64) -> Self {
        FailureRecord {
            instance_id: instance_id.into(),
            failure_count,
            weight: 1.0,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

impl Serialize for FailureRecord {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let default_weight = self.weight == 1.0;
        let len = 2 + usize::from(!default_weight) + self.extra.len();
        let mut map = serializer.serialize_map(Some(len))?;
        map.serialize_entry("instance_id", &self.instance_id)?;
        map.serialize_entry("failure_count", &self.failure_count)?;
        if !default_weight {
            map.serialize_entry("weight", &self.weight)?;
        }
        for (k, v) in &self.extra {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    /// `.csv` means CSV; anything else is read as JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => RecordFormat::Csv,
            _ => RecordFormat::Jsonl,
        }
    }
}

/// A record that was well-formed but violated a record invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

/// Result of ingesting a whole stream.
#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<FailureRecord>,
    pub rejects: Vec<Rejection>,
}

impl Ingested {
    /// Data rows seen: accepted plus rejected.
    pub fn rows(&self) -> usize {
        self.records.len() + self.rejects.len()
    }
}

/// Streams records from `source`. Each item is either a record, an
/// [`Error::Rejected`] for an invariant violation, or an [`Error::Malformed`]
/// for a line that cannot be parsed at all. Blank JSONL lines are skipped.
pub fn read_records<'a, R: Read + 'a>(
    source: R,
    format: RecordFormat,
) -> Box<dyn Iterator<Item = Result<FailureRecord>> + 'a> {
    match format {
        RecordFormat::Jsonl => Box::new(JsonlRecords {
            lines: BufReader::new(source).lines(),
            line: 0,
        }),
        RecordFormat::Csv => Box::new(CsvRecords::new(source)),
    }
}

/// Reads a whole stream, collecting rejected rows instead of failing on them.
/// Malformed rows and I/O failures abort ingestion.
pub fn ingest_records<R: Read>(source: R, format: RecordFormat) -> Result<Ingested> {
    let mut out = Ingested::default();
    for item in read_records(source, format) {
        match item {
            Ok(rec) => out.records.push(rec),
            Err(Error::Rejected { line, reason }) => out.rejects.push(Rejection { line, reason }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn ingest_file(path: &Path) -> Result<Ingested> {
    let file = File::open(path)?;
    ingest_records(file, RecordFormat::from_path(path))
}

struct JsonlRecords<B> {
    lines: std::io::Lines<B>,
    line: usize,
}

impl<B: BufRead> Iterator for JsonlRecords<B> {
    type Item = Result<FailureRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            return Some(parse_json_line(&text, self.line));
        }
    }
}

fn parse_json_line(text: &str, line: usize) -> Result<FailureRecord> {
    let malformed = |reason: String| Error::Malformed { line, reason };
    let rejected = |reason: String| Error::Rejected { line, reason };

    let value: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let Value::Object(mut obj) = value else {
        return Err(malformed("expected a JSON object".into()));
    };

    let instance_id = match obj.remove("instance_id") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(malformed("instance_id must be a string".into())),
        None => return Err(malformed("missing instance_id".into())),
    };
    let failure_count = match obj.remove("failure_count") {
        Some(Value::Number(n)) => match n.as_u64() {
            Some(c) => c,
            None => {
                return Err(rejected(format!(
                    "failure_count {n} is not a non-negative integer"
                )))
            }
        },
        Some(_) => return Err(malformed("failure_count must be a number".into())),
        None => return Err(malformed("missing failure_count".into())),
    };
    let weight = match obj.remove("weight") {
        None | Some(Value::Null) => 1.0,
        Some(Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
        Some(_) => return Err(malformed("weight must be a number".into())),
    };
    check_weight(weight).map_err(rejected)?;

    Ok(FailureRecord {
        instance_id,
        failure_count,
        weight,
        extra: into_btree(obj),
    })
}

fn into_btree(obj: Map<String, Value>) -> BTreeMap<String, Value> {
    obj.into_iter().collect()
}

fn check_weight(weight: f64) -> std::result::Result<(), String> {
    if weight.is_finite() && weight > 0.0 {
        Ok(())
    } else {
        Err(format!("weight {weight} is not a positive number"))
    }
}

struct CsvRecords<R> {
    reader: csv::Reader<R>,
    headers: Option<std::result::Result<csv::StringRecord, ()>>,
    record: csv::StringRecord,
}

impl<R: Read> CsvRecords<R> {
    fn new(source: R) -> Self {
        let reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        CsvRecords {
            reader,
            headers: None,
            record: csv::StringRecord::new(),
        }
    }
}

impl<R: Read> Iterator for CsvRecords<R> {
    type Item = Result<FailureRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.headers.is_none() {
            let headers = match self.reader.headers() {
                Ok(h) => h.clone(),
                Err(e) => {
                    self.headers = Some(Err(()));
                    return Some(Err(e.into()));
                }
            };
            for required in ["instance_id", "failure_count"] {
                if !headers.iter().any(|h| h == required) {
                    self.headers = Some(Err(()));
                    return Some(Err(Error::Malformed {
                        line: 1,
                        reason: format!("header is missing column `{required}`"),
                    }));
                }
            }
            self.headers = Some(Ok(headers));
        }
        let headers = match self.headers.as_ref()? {
            Ok(h) => h,
            Err(()) => return None,
        };

        match self.reader.read_record(&mut self.record) {
            Ok(false) => None,
            Ok(true) => {
                let line = self
                    .record
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or_default();
                Some(parse_csv_row(headers, &self.record, line))
            }
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or_default();
                Some(Err(Error::Malformed {
                    line,
                    reason: e.to_string(),
                }))
            }
        }
    }
}

fn parse_csv_row(
    headers: &csv::StringRecord,
    row: &csv::StringRecord,
    line: usize,
) -> Result<FailureRecord> {
    let mut instance_id = None;
    let mut failure_count = None;
    let mut weight = 1.0;
    let mut extra = BTreeMap::new();

    for (name, field) in headers.iter().zip(row.iter()) {
        match name {
            "instance_id" => instance_id = Some(field.to_string()),
            "failure_count" => {
                failure_count = Some(match field.parse::<u64>() {
                    Ok(c) => c,
                    Err(_) if field.parse::<f64>().is_ok() => {
                        return Err(Error::Rejected {
                            line,
                            reason: format!("failure_count {field} is not a non-negative integer"),
                        })
                    }
                    Err(_) => {
                        return Err(Error::Malformed {
                            line,
                            reason: format!("failure_count `{field}` is not a number"),
                        })
                    }
                })
            }
            "weight" if field.is_empty() => {}
            "weight" => {
                weight = field.parse::<f64>().map_err(|_| Error::Malformed {
                    line,
                    reason: format!("weight `{field}` is not a number"),
                })?;
                check_weight(weight).map_err(|reason| Error::Rejected { line, reason })?;
            }
            other => {
                extra.insert(other.to_string(), Value::String(field.to_string()));
            }
        }
    }

    match (instance_id, failure_count) {
        (Some(instance_id), Some(failure_count)) => Ok(FailureRecord {
            instance_id,
            failure_count,
            weight,
            extra,
        }),
        _ => Err(Error::Malformed {
            line,
            reason: "row is shorter than the header".into(),
        }),
    }
}

pub fn write_jsonl<W: Write>(records: &[FailureRecord], mut out: W) -> Result<()> {
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `instance_id,failure_count,weight` plus one column per extra field
/// seen in any record (sorted by name).
pub fn write_csv<W: Write>(records: &[FailureRecord], out: W) -> Result<()> {
    let extra_cols: std::collections::BTreeSet<&str> = records
        .iter()
        .flat_map(|r| r.extra.keys().map(String::as_str))
        .collect();
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["instance_id", "failure_count", "weight"];
    header.extend(extra_cols.iter().copied());
    writer.write_record(&header)?;
    for rec in records {
        let mut row = vec![
            rec.instance_id.clone(),
            rec.failure_count.to_string(),
            rec.weight.to_string(),
        ];
        for col in &extra_cols {
            row.push(match rec.extra.get(*col) {
                None => String::new(),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
            });
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Metadata for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    #[serde(default)]
    pub subject_name: String,
    /// Model parameter count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_count: Option<u64>,
    #[serde(default)]
    pub task: String,
    #[serde(default)]
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<i64>,
}

impl RunManifest {
    pub fn new(run_id: impl Into<String>) -> Self {
        RunManifest {
            run_id: run_id.into(),
            subject_name: String::new(),
            param_count: None,
            task: String::new(),
            dataset: String::new(),
            shots: None,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.run_id.is_empty() {
            return Err(Error::InvalidManifest("run_id is empty".into()));
        }
        if self.param_count == Some(0) {
            return Err(Error::InvalidManifest(format!(
                "run `{}`: param_count must be positive",
                self.run_id
            )));
        }
        Ok(())
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let manifest: RunManifest =
            serde_json::from_reader(reader).map_err(|e| Error::InvalidManifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub manifest: RunManifest,
    pub records: Vec<FailureRecord>,
}

/// In-memory collection of runs keyed by run id.
#[derive(Debug, Clone, Default)]
pub struct RunStore {
    runs: BTreeMap<String, Run>,
}

impl RunStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, manifest: RunManifest, records: Vec<FailureRecord>) -> Result<()> {
        manifest.validate()?;
        if self.runs.contains_key(&manifest.run_id) {
            return Err(Error::DuplicateRun(manifest.run_id));
        }
        if records.is_empty() {
            return Err(Error::EmptyRun(manifest.run_id));
        }
        self.runs
            .insert(manifest.run_id.clone(), Run { manifest, records });
        Ok(())
    }

    pub fn get(&self, run_id: &str) -> Option<&Run> {
        self.runs.get(run_id)
    }

    pub fn records(&self, run_id: &str) -> Option<&[FailureRecord]> {
        self.runs.get(run_id).map(|r| r.records.as_slice())
    }

    pub fn manifest(&self, run_id: &str) -> Option<&RunManifest> {
        self.runs.get(run_id).map(|r| &r.manifest)
    }

    /// Runs in run_id order.
    pub fn runs(&self) -> impl Iterator<Item = &Run> {
        self.runs.values()
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jsonl(text: &str) -> Ingested {
        ingest_records(text.as_bytes(), RecordFormat::Jsonl).unwrap()
    }

    #[test]
    fn parses_minimal_line_with_default_weight() {
        let got = jsonl(r#"{"instance_id":"a","failure_count":0}"#);
        assert_eq!(got.records, vec![FailureRecord::new("a", 0)]);
        assert!(got.rejects.is_empty());
    }

    #[test]
    fn negative_count_is_rejected_with_line_number() {
        let got = jsonl("{\"instance_id\":\"a\",\"failure_count\":3}\n{\"instance_id\":\"b\",\"failure_count\":-1}\n");
        assert_eq!(got.records.len(), 1);
        assert_eq!(got.rejects.len(), 1);
        assert_eq!(got.rejects[0].line, 2);
        assert_eq!(got.rows(), 2);
    }

    #[test]
    fn preserves_input_order() {
        let text = "{\"instance_id\":\"x\",\"failure_count\":0}\n\
                    {\"instance_id\":\"y\",\"failure_count\":7}\n\
                    {\"instance_id\":\"z\",\"failure_count\":7}\n";
        let got = jsonl(text);
        let ids: Vec<_> = got.records.iter().map(|r| r.instance_id.as_str()).collect();
        let counts: Vec<_> = got.records.iter().map(|r| r.failure_count).collect();
        assert_eq!(ids, ["x", "y", "z"]);
        assert_eq!(counts, [0, 7, 7]);
    }

    #[test]
    fn malformed_line_aborts_with_line_number() {
        let text = "{\"instance_id\":\"a\",\"failure_count\":1}\n\n{not json}\n";
        let err = ingest_records(text.as_bytes(), RecordFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 3, .. }), "{err}");
    }

    #[test]
    fn missing_count_is_malformed() {
        let err =
            ingest_records(r#"{"instance_id":"a"}"#.as_bytes(), RecordFormat::Jsonl).unwrap_err();
        assert_eq!(err.line(), Some(1));
    }

    #[test]
    fn fractional_count_and_bad_weight_are_rejected() {
        let text = "{\"instance_id\":\"a\",\"failure_count\":2.5}\n\
                    {\"instance_id\":\"b\",\"failure_count\":2,\"weight\":0}\n\
                    {\"instance_id\":\"c\",\"failure_count\":2,\"weight\":-3}\n";
        let got = jsonl(text);
        assert!(got.records.is_empty());
        assert_eq!(
            got.rejects.iter().map(|r| r.line).collect::<Vec<_>>(),
            [1, 2, 3]
        );
    }

    #[test]
    fn unknown_fields_survive_a_round_trip() {
        let text =
            r#"{"instance_id":"q1","failure_count":4,"weight":0.5,"token":"the","pos":{"doc":3}}"#;
        let got = jsonl(text);
        let mut buf = Vec::new();
        write_jsonl(&got.records, &mut buf).unwrap();
        let again = jsonl(std::str::from_utf8(&buf).unwrap());
        assert_eq!(again.records, got.records);
        assert_eq!(got.records[0].extra["pos"]["doc"], 3);
    }

    #[test]
    fn csv_with_and_without_weight() {
        let text = "instance_id,failure_count\na,0\nb,12\n";
        let got = ingest_records(text.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(
            got.records,
            vec![FailureRecord::new("a", 0), FailureRecord::new("b", 12)]
        );

        let text = "instance_id,failure_count,weight\na,0,3\nb,-2,1\nc,1,\n";
        let got = ingest_records(text.as_bytes(), RecordFormat::Csv).unwrap();
        assert_eq!(got.records[0].weight, 3.0);
        assert_eq!(got.records[1], FailureRecord::new("c", 1));
        assert_eq!(
            got.rejects,
            vec![Rejection {
                line: 3,
                reason: got.rejects[0].reason.clone()
            }]
        );
    }

    #[test]
    fn csv_missing_column_is_malformed() {
        let err =
            ingest_records("id,failure_count\na,1\n".as_bytes(), RecordFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn csv_garbage_count_is_malformed() {
        let err = ingest_records(
            "instance_id,failure_count\na,many\n".as_bytes(),
            RecordFormat::Csv,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
    }

    #[test]
    fn store_registers_and_rejects_duplicates() {
        let mut store = RunStore::new();
        let recs: Vec<_> = (0..10)
            .map(|i| FailureRecord::new(i.to_string(), i))
            .collect();
        store
            .register(RunManifest::new("r1"), recs.clone())
            .unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.records("r1").unwrap().len(), 10);

        let err = store
            .register(RunManifest::new("r1"), recs.clone())
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateRun(ref id) if id == "r1"));

        store
            .register(RunManifest::new("r2"), recs[..3].to_vec())
            .unwrap();
        assert_eq!(store.records("r1").unwrap().len(), 10);
        assert_eq!(store.records("r2").unwrap().len(), 3);
    }

    #[test]
    fn store_rejects_empty_runs_and_bad_manifests() {
        let mut store = RunStore::new();
        assert!(matches!(
            store.register(RunManifest::new("r"), vec![]),
            Err(Error::EmptyRun(_))
        ));
        let mut m = RunManifest::new("r");
        m.param_count = Some(0);
        assert!(store.register(m, vec![FailureRecord::new("a", 1)]).is_err());
        assert!(store
            .register(RunManifest::new(""), vec![FailureRecord::new("a", 1)])
            .is_err());
    }

    #[test]
    fn manifest_param_count_must_be_an_integer() {
        let ok = RunManifest::from_reader(r#"{"run_id":"m","param_count":500000000}"#.as_bytes())
            .unwrap();
        assert_eq!(ok.param_count, Some(500_000_000));
        assert!(
            RunManifest::from_reader(r#"{"run_id":"m","param_count":5e8}"#.as_bytes()).is_err()
        );
        assert!(
            RunManifest::from_reader(r#"{"run_id":"m","param_count":"5e8"}"#.as_bytes()).is_err()
        );
    }
}

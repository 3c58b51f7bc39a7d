use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_survival"))
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sample-a17.jsonl")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn points_csv(dir: &Path) -> PathBuf {
    // Points on log10(alpha) = s * (log10 N - 12) with s = log10(3) / 14:
    // alpha = 1 at 1e12, alpha = 3 at 1e26.
    let path = dir.join("points.csv");
    let s = 3f64.log10() / 14.0;
    let mut text = String::from("run_id,param_count,alpha\n");
    for (id, exp) in [("small", 12), ("mid", 15), ("large", 18)] {
        let alpha = 10f64.powf(s * (exp as f64 - 12.0));
        text.push_str(&format!("{id},{},{alpha}\n", 10u64.pow(exp)));
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn bundled_run_classifies_as_limited() {
    let fixture = fixture();
    let out = run(&["classify", fixture.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let report = &v["classifications"][0];
    assert_eq!(report["run_id"], "sample-a17");
    assert_eq!(report["level"], "Limited");
    assert_eq!(report["param_count"], 7_000_000_000u64);
    let alpha = report["alpha"].as_f64().unwrap();
    assert!((alpha - 1.7).abs() < 0.2, "alpha {alpha}");
    assert_eq!(v["provenance"]["assumptions"]["fit"]["range"]["x_min"], 10);
    assert_eq!(v["provenance"]["inputs"].as_object().unwrap().len(), 1);
}

#[test]
fn malformed_run_is_a_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.jsonl");
    fs::write(
        &bad,
        "{\"instance_id\": \"a\", \"failure_count\": 3}\nnot json\n",
    )
    .unwrap();
    let fixture = fixture();
    let out = run(&["classify", fixture.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["classifications"].as_array().unwrap().len(), 1);
    let errors = v["errors"].as_array().unwrap();
    assert_eq!(errors.len(), 1);
    assert_eq!(errors[0]["run_id"], "broken");
    assert!(errors[0]["error"].as_str().unwrap().contains("line 2"));

    let only_bad = run(&["classify", bad.to_str().unwrap()]);
    assert_eq!(only_bad.status.code(), Some(1));
}

#[test]
fn explicit_default_fit_range_changes_nothing() {
    let fixture = fixture();
    let a = run(&["classify", fixture.to_str().unwrap()]);
    let b = run(&[
        "classify",
        fixture.to_str().unwrap(),
        "--fit-range",
        "10",
        "100",
    ]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "classify",
        fixture.to_str().unwrap(),
        "--fit-range",
        "5",
        "50",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn projection_reproduces_headline_values() {
    let dir = tempfile::tempdir().unwrap();
    let points = points_csv(dir.path());
    let out = run(&["project", "--points", points.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let p = &json(&out)["projection"]["projection"];
    let required = p["required_params"].as_f64().unwrap();
    assert!((required / 1e26 - 1.0).abs() < 1e-6, "required {required}");
    assert!((p["years_until"].as_f64().unwrap() - 69.8).abs() <= 0.5);
    assert!((p["gpu_count"].as_f64().unwrap() / 5e15 - 1.0).abs() <= 0.01);
    assert!((p["cost_ratio"].as_f64().unwrap() / 4.05e7 - 1.0).abs() <= 0.05);
    assert!((p["neuron_ratio"].as_f64().unwrap() / 1e5 - 1.0).abs() < 1e-6);
    let assumptions = &json(&out)["provenance"]["assumptions"];
    assert_eq!(assumptions["hardware"]["bytes_per_param"], 4.0);
    assert_eq!(assumptions["target_alpha"], 3.0);
}

#[test]
fn target_alpha_two_projects_to_capable_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let points = points_csv(dir.path());
    let out = run(&[
        "project",
        "--points",
        points.to_str().unwrap(),
        "--target-alpha",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let p = &json(&out)["projection"]["projection"];
    let s = 3f64.log10() / 14.0;
    let expected = 10f64.powf(12.0 + 2f64.log10() / s);
    let required = p["required_params"].as_f64().unwrap();
    assert!((required / expected - 1.0).abs() < 1e-6);
    assert_eq!(p["target_alpha"], 2.0);
}

#[test]
fn single_size_cannot_be_projected() {
    let fixture = fixture();
    let out = run(&["project", fixture.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    let err = v["errors"][0]["error"].as_str().unwrap();
    assert!(err.contains("need at least 2"), "{err}");
    assert!(v.get("projection").is_none());
}

#[test]
fn falling_line_is_marked_non_extrapolable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("falling.csv");
    fs::write(
        &path,
        "run_id,param_count,alpha\na,1000000000,2.0\nb,10000000000,1.5\n",
    )
    .unwrap();
    let out = run(&["project", "--points", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["projection"]["extrapolable"], false);
    assert!(v["projection"].get("projection").is_none());
}

#[test]
fn identical_invocations_are_byte_identical() {
    let fixture = fixture();
    let dir = tempfile::tempdir().unwrap();
    let points = points_csv(dir.path());
    let invocations: Vec<Vec<&str>> = vec![
        vec!["classify", fixture.to_str().unwrap()],
        vec!["classify", fixture.to_str().unwrap(), "--format", "csv"],
        vec!["classify", fixture.to_str().unwrap(), "--method", "mle"],
        vec![
            "report",
            fixture.to_str().unwrap(),
            "--points",
            points.to_str().unwrap(),
            "--k",
            "7",
        ],
        vec![
            "sandpile", "--dim", "2", "--side", "16", "--drives", "2000", "--seed", "5",
        ],
        vec![
            "sandpile", "--dim", "2", "3", "--side", "8", "4", "--drives", "500", "--format", "csv",
        ],
    ];
    for args in invocations {
        let a = run(&args);
        let b = run(&args);
        assert!(
            a.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn out_dir_files_are_deterministic() {
    let fixture = fixture();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = run(&[
            "classify",
            fixture.to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in ["report.json", "summary.csv", "sample-a17.plot.csv"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn svg_plot_has_regions_and_reference_lines() {
    let fixture = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "classify",
        fixture.to_str().unwrap(),
        "--format",
        "svg",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let svg = fs::read_to_string(dir.path().join("sample-a17.plot.svg")).unwrap();
    assert_eq!(svg.matches("class=\"region\"").count(), 3);
    for name in ["subject", "fit", "reference_x^-2", "reference_x^-3"] {
        assert!(svg.contains(name), "missing {name}");
    }
    let csv = fs::read_to_string(dir.path().join("sample-a17.plot.csv")).unwrap();
    assert!(csv.starts_with("x,y,series\n"));
    let svg_without_out = run(&["classify", fixture.to_str().unwrap(), "--format", "svg"]);
    assert_eq!(svg_without_out.status.code(), Some(1));
}

#[test]
fn ingest_counts_rejected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.jsonl");
    fs::write(
        &path,
        "{\"instance_id\": \"a\", \"failure_count\": 3}\n\
         {\"instance_id\": \"b\", \"failure_count\": -1}\n\
         {\"instance_id\": \"c\", \"failure_count\": 2, \"weight\": 0}\n\
         {\"instance_id\": \"d\", \"failure_count\": 0, \"task\": \"lm\"}\n",
    )
    .unwrap();
    let out = run(&["ingest", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let f = &json(&out)["files"][0];
    assert_eq!(
        (
            f["rows"].as_u64(),
            f["accepted"].as_u64(),
            f["rejected"].as_u64()
        ),
        (Some(4), Some(2), Some(2))
    );
    assert_eq!(f["rejects"][0]["line"], 2);
}

#[test]
fn scale_invariance_subcommand() {
    let fixture = fixture();
    let out = run(&[
        "check-scale-invariance",
        fixture.to_str().unwrap(),
        "--k",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let e = &json(&out)["scale_invariance"][0];
    assert_eq!(e["k"], 7);
    assert!(e["delta"].as_f64().unwrap() <= 0.05);
    assert_eq!(e["levels_match"], true);
    assert!(e["scope"].as_str().unwrap().contains("not tested"));
}

#[test]
fn sandpile_writes_sizes_distribution_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let sizes = dir.path().join("sizes.txt");
    let dist = dir.path().join("dist.csv");
    let meta = dir.path().join("meta.json");
    let out = run(&[
        "sandpile",
        "--dim",
        "2",
        "--side",
        "16",
        "--drives",
        "3000",
        "--seed",
        "2",
        "--out",
        sizes.to_str().unwrap(),
        "--emit-distribution",
        dist.to_str().unwrap(),
        "--metadata",
        meta.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let lines: Vec<u64> = fs::read_to_string(&sizes)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(lines.len(), 3000);
    assert!(fs::read_to_string(&dist).unwrap().starts_with("x,mass\n"));
    let m: Value = serde_json::from_str(&fs::read_to_string(&meta).unwrap()).unwrap();
    assert_eq!(m["conservation_ok"], true);
    assert_eq!(m["avalanche_unit"], "topplings");
    assert_eq!(m["config"]["burn_in_drives"], 50 * 256);

    let sweep = dir.path().join("sweep");
    let out = run(&[
        "sandpile",
        "--dim",
        "2",
        "3",
        "--side",
        "8",
        "4",
        "--drives",
        "500",
        "--out",
        sweep.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(sweep.join("sandpile_d2_L8.txt").exists());
    assert!(sweep.join("sandpile_d3_L4.txt").exists());
}

#[test]
fn synth_round_trips_through_classify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "synth",
        "--alpha",
        "3.5",
        "--n",
        "20000",
        "--x-min",
        "10",
        "--x-max",
        "10000",
        "--run-id",
        "steep",
        "--seed",
        "4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let records = dir.path().join("steep.jsonl");
    let out = run(&["classify", records.to_str().unwrap()]);
    assert_eq!(json(&out)["classifications"][0]["level"], "Autonomous");
}

#[test]
fn bad_arguments_exit_with_one() {
    let out = run(&["classify"]);
    assert_eq!(out.status.code(), Some(1));
    let fixture = fixture();
    let out = run(&[
        "classify",
        fixture.to_str().unwrap(),
        "--fit-range",
        "100",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["error"].is_string());
}

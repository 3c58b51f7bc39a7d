//! Plot data and static log-log rendering.
//!
//! Every plot is a set of named `(x, y)` series. CSV (`x,y,series`) is the
//! primary output; SVG is a plain static chart with optional shaded level
//! regions.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassificationRegions, RegionPlot};
use crate::error::{Error, Result};
use crate::pipeline::{ProjectionReport, TOOL_VERSION};
use crate::scaling::moores_law_years;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesStyle {
    Points,
    Line,
    Dashed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub style: SeriesStyle,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: &str, style: SeriesStyle, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.to_string(),
            style,
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotData {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<ClassificationRegions>,
    /// Labels for a secondary axis along the top, at given x positions.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub top_ticks: Vec<(f64, String)>,
}

impl PlotData {
    pub fn classification(run_id: &str, plot: &RegionPlot) -> Self {
        PlotData {
            title: format!("{run_id}: failure-count distribution"),
            x_label: "failure count".into(),
            y_label: "probability".into(),
            series: vec![
                Series::new("subject", SeriesStyle::Points, plot.scatter.clone()),
                Series::new("fit", SeriesStyle::Line, plot.fitted.clone()),
                Series::new(
                    "reference_x^-2",
                    SeriesStyle::Dashed,
                    plot.capable_reference.clone(),
                ),
                Series::new(
                    "reference_x^-3",
                    SeriesStyle::Dashed,
                    plot.autonomous_reference.clone(),
                ),
            ],
            regions: Some(plot.regions.clone()),
            top_ticks: Vec::new(),
        }
    }

    /// Observed decay rates, the fitted line, its extrapolation to the
    /// required size, and the target level. The top axis shows the
    /// Moore's-law year offset for each decade of parameters.
    pub fn projection(report: &ProjectionReport) -> Option<Self> {
        let line = report.line?;
        let observed: Vec<(f64, f64)> = report
            .points
            .iter()
            .map(|p| (p.param_count as f64, p.alpha))
            .collect();
        let x_lo = observed.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let x_hi = observed.iter().map(|p| p.0).fold(0.0, f64::max);
        let mut series = vec![
            Series::new("observed", SeriesStyle::Points, observed),
            Series::new(
                "fit",
                SeriesStyle::Line,
                geometric_grid(x_lo, x_hi, 20)
                    .into_iter()
                    .map(|x| (x, line.alpha_at(x)))
                    .collect(),
            ),
        ];
        let mut top_ticks = Vec::new();
        if let Some(p) = &report.projection {
            let x_end = p.required_params.max(x_hi);
            series.push(Series::new(
                "extrapolated",
                SeriesStyle::Dashed,
                geometric_grid(x_hi, x_end, 40)
                    .into_iter()
                    .map(|x| (x, line.alpha_at(x)))
                    .collect(),
            ));
            series.push(Series::new(
                "target",
                SeriesStyle::Dashed,
                vec![(x_lo, p.target_alpha), (x_end, p.target_alpha)],
            ));
            let first = p.assumptions.current_max_params.log10().ceil() as i32;
            for decade in first..=x_end.log10().floor() as i32 {
                let x = 10f64.powi(decade);
                let years = moores_law_years(x, &p.assumptions);
                top_ticks.push((x, format!("+{years:.0}y")));
            }
        }
        Some(PlotData {
            title: "decay rate vs model size".into(),
            x_label: "parameters".into(),
            y_label: "decay rate".into(),
            series,
            regions: None,
            top_ticks,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.series.iter().all(|s| s.points.is_empty())
    }
}

fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotFormat {
    Csv,
    Svg,
}

/// Writes `x,y,series` rows in series order.
pub fn write_csv<W: Write>(plot: &PlotData, out: W) -> Result<()> {
    if plot.is_empty() {
        return Err(Error::EmptyInput("plot has no data"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y", "series"])?;
    for s in &plot.series {
        for (x, y) in &s.points {
            w.write_record([x.to_string(), y.to_string(), s.name.clone()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<(f64, f64, String)>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<(f64, f64, String)>()
        .map(|row| row.map_err(Error::from))
        .collect()
}

/// Writes `<stem>.csv`, plus `<stem>.svg` when asked for SVG.
pub fn emit_plot(
    plot: &PlotData,
    format: PlotFormat,
    dir: &Path,
    stem: &str,
) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(plot, std::fs::File::create(&csv_path)?)?;
    let mut written = vec![csv_path];
    if format == PlotFormat::Svg {
        let svg_path = dir.join(format!("{stem}.svg"));
        std::fs::write(&svg_path, render_svg(plot)?)?;
        written.push(svg_path);
    }
    Ok(written)
}

/// Logarithmic axis mapping whole decades onto a pixel span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAxis {
    pub lo_decade: f64,
    pub hi_decade: f64,
    pub start_px: f64,
    pub span_px: f64,
}

impl LogAxis {
    /// Smallest whole-decade axis covering `[min, max]`.
    pub fn covering(min: f64, max: f64, start_px: f64, span_px: f64) -> Self {
        let mut lo = min.log10().floor();
        let mut hi = max.log10().ceil();
        if hi <= lo {
            lo -= 1.0;
            hi += 1.0;
        }
        LogAxis {
            lo_decade: lo,
            hi_decade: hi,
            start_px,
            span_px,
        }
    }

    pub fn decade_px(&self) -> f64 {
        self.span_px / (self.hi_decade - self.lo_decade)
    }

    pub fn map(&self, v: f64) -> f64 {
        self.start_px + (v.log10() - self.lo_decade) * self.decade_px()
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555",
];

pub fn render_svg(plot: &PlotData) -> Result<String> {
    let pts: Vec<(f64, f64)> = plot
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyInput("plot has no positive data"));
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64| {
        pts.iter().map(sel).fold(init, f)
    };
    let (x_min, x_max) = (
        fold(f64::min, f64::INFINITY, |p| p.0),
        fold(f64::max, 0.0, |p| p.0),
    );
    let (y_min, y_max) = (
        fold(f64::min, f64::INFINITY, |p| p.1),
        fold(f64::max, 0.0, |p| p.1),
    );

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xa = LogAxis::covering(x_min, x_max, LEFT, plot_w);
    // y grows upwards: map onto a negative span from the bottom edge.
    let ya = LogAxis::covering(y_min, y_max, TOP + plot_h, -plot_h);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, "<metadata>survival {TOOL_VERSION}</metadata>");
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="area"><rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&plot.title)
    );

    if let Some(regions) = &plot.regions {
        shade_regions(&mut svg, regions, &xa, &ya);
    }

    // Frame and decade ticks.
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for d in xa.lo_decade as i32..=xa.hi_decade as i32 {
        let px = xa.map(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">1e{d}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    for d in ya.lo_decade as i32..=ya.hi_decade as i32 {
        let py = ya.map(10f64.powi(d));
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 8.0,
            py + 4.0
        );
    }
    for (x, label) in &plot.top_ticks {
        if *x < 10f64.powf(xa.lo_decade) || *x > 10f64.powf(xa.hi_decade) {
            continue;
        }
        let px = xa.map(*x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            TOP - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle" font-size="9">{}</text>"#,
            TOP - 8.0,
            escape(label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{0}" text-anchor="middle" transform="rotate(-90 15 {0})">{1}</text>"#,
        TOP + plot_h / 2.0,
        escape(&plot.y_label)
    );

    let _ = writeln!(svg, r#"<g clip-path="url(#area)">"#);
    for (i, s) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mapped: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .map(|&(x, y)| (xa.map(x), ya.map(y)))
            .collect();
        match s.style {
            SeriesStyle::Points => {
                for (px, py) in mapped {
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#
                    );
                }
            }
            SeriesStyle::Line | SeriesStyle::Dashed => {
                let dash = if s.style == SeriesStyle::Dashed {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                };
                let path: Vec<String> = mapped
                    .iter()
                    .map(|(x, y)| format!("{x:.2},{y:.2}"))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    path.join(" ")
                );
            }
        }
    }
    let _ = writeln!(svg, "</g>");

    for (i, s) in plot.series.iter().enumerate() {
        let y = TOP + 10.0 + 16.0 * i as f64;
        let x = LEFT + plot_w + 10.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/>"#,
            y - 8.0,
            COLORS[i % COLORS.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}">{}</text>"#,
            x + 14.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Fills the three level regions right of the anchor, clipped to the plot area.
fn shade_regions(svg: &mut String, regions: &ClassificationRegions, xa: &LogAxis, ya: &LogAxis) {
    let (x0, y0) = regions.anchor;
    let x_right = 10f64.powf(xa.hi_decade);
    let (ax, ay) = (xa.map(x0), ya.map(y0));
    let right = xa.map(x_right);
    let cap = ya.map(regions.capable_line.at(x_right));
    let aut = ya.map(regions.autonomous_line.at(x_right));
    let (top, bottom) = (
        ya.map(10f64.powf(ya.hi_decade)) - 1000.0,
        ya.map(10f64.powf(ya.lo_decade)) + 1000.0,
    );
    let polys = [
        (
            "Limited",
            "#f4cccc",
            vec![(ax, ay), (right, cap), (right, top), (ax, top)],
        ),
        (
            "Capable",
            "#fff2cc",
            vec![(ax, ay), (right, cap), (right, aut)],
        ),
        (
            "Autonomous",
            "#d9ead3",
            vec![(ax, ay), (right, aut), (right, bottom), (ax, bottom)],
        ),
    ];
    let _ = writeln!(svg, r#"<g clip-path="url(#area)">"#);
    for (name, fill, pts) in polys {
        let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            svg,
            r#"<polygon class="region" data-level="{name}" points="{}" fill="{fill}"/>"#,
            p.join(" ")
        );
    }
    let _ = writeln!(svg, "</g>");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::ConvergenceReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "scenario_id,epsilon,probe_index,direct_value,predicted_value,abs_error,slope,flag";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(format!("unknown report format '{other}' (csv or json)"))),
        }
    }
}

/// One line of a report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub scenario_id: String,
    pub epsilon: f64,
    pub probe_index: usize,
    pub direct_value: f64,
    pub predicted_value: f64,
    pub abs_error: f64,
    pub slope: f64,
    pub flag: String,
}

/// One line per (ε, probe); floats carry 17 significant digits so that
/// parsing reproduces them exactly.
pub fn render_csv(r: &ConvergenceReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &r.rows {
        for p in &row.probes {
            writeln!(
                out,
                "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                r.scenario_id,
                row.epsilon,
                p.probe_index,
                p.direct_value,
                p.predicted_value,
                p.abs_error,
                r.slope,
                r.flag.as_str()
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn parse_report_csv(text: &str) -> Result<Vec<CsvRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: "missing report header".into() }),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let bad = |what: &str| Error::Parse { line: line_no, message: format!("invalid {what}") };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad("field count"));
        }
        let num = |k: usize, what: &str| f[k].parse::<f64>().map_err(|_| bad(what));
        out.push(CsvRecord {
            scenario_id: f[0].to_string(),
            epsilon: num(1, "epsilon")?,
            probe_index: f[2].parse().map_err(|_| bad("probe_index"))?,
            direct_value: num(3, "direct_value")?,
            predicted_value: num(4, "predicted_value")?,
            abs_error: num(5, "abs_error")?,
            slope: num(6, "slope")?,
            flag: f[7].to_string(),
        });
    }
    Ok(out)
}

pub fn render_json(r: &ConvergenceReport) -> String {
    serde_json::to_string_pretty(r).expect("reports contain only finite numbers and strings")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn emit_report(r: &ConvergenceReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => render_csv(r),
        ReportFormat::Json => render_json(r),
    };
    write_file(path, &text)
}

pub fn emit_plot(r: &ConvergenceReport, path: &Path) -> Result<()> {
    write_file(path, &render_svg(r))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Decade range `[10^lo, 10^hi]` covering the values.
fn decades(values: impl Iterator<Item = f64>) -> (i32, i32) {
    let (mn, mx) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let lo = mn.log10().floor() as i32;
    let hi = (mx.log10().ceil() as i32).max(lo + 1);
    (lo, hi)
}

/// Log-log plot of error against ε with the fitted line.
pub fn render_svg(r: &ConvergenceReport) -> String {
    let (xlo, xhi) = decades(r.rows.iter().map(|row| row.epsilon));
    let (ylo, yhi) = decades(r.rows.iter().map(|row| row.error).filter(|e| *e > 0.0));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x.log10() - xlo as f64) / (xhi - xlo) as f64 * pw;
    let sy = |y: f64| TOP + (yhi as f64 - y.log10()) / (yhi - ylo) as f64 * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} ({}): slope {:.3}, threshold {:.2}, {}</text>"#,
        WIDTH / 2.0,
        xml_escape(&r.scenario_id),
        r.kind.as_str(),
        r.slope,
        r.threshold,
        r.flag.as_str()
    );
    for d in xlo..=xhi {
        let x = sx(10f64.powi(d));
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 6.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{d}</text>"#, TOP + ph + 20.0);
        if d < xhi {
            for m in 2..10 {
                let x = sx(m as f64 * 10f64.powi(d));
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 3.0);
            }
        }
    }
    for d in ylo..=yhi {
        let y = sy(10f64.powi(d));
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 6.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 9.0, y + 4.0);
        if d < yhi {
            for m in 2..10 {
                let y = sy(m as f64 * 10f64.powi(d));
                let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 3.0);
            }
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">epsilon</text>
<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">max abs error</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    let pts: Vec<(f64, f64)> = r.rows.iter().filter(|row| row.error > 0.0).map(|row| (row.epsilon, row.error)).collect();
    if let (Some(first), Some(last)) = (pts.first(), pts.last()) {
        // fitted line through the centroid of the log data
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        let line = |x: f64| (my + r.slope * (x.ln() - mx)).exp();
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="steelblue" stroke-width="1.5" stroke-dasharray="6 3"/>"#,
            sx(first.0),
            sy(line(first.0)),
            sx(last.0),
            sy(line(last.0))
        );
        let poly: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="firebrick"/>"#, poly.join(" "));
        for &(x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="firebrick"/>"#, sx(x), sy(y));
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{ConvergenceRow, ProbeResult, ReportFlag, ScenarioKind};

    fn sample() -> ConvergenceReport {
        let rows = [0.04, 0.02, 0.01]
            .iter()
            .map(|&e: &f64| ConvergenceRow {
                epsilon: e,
                error: 0.1 * e * e + 1.0 / 3.0 * 1e-9,
                probes: vec![ProbeResult {
                    probe_index: 0,
                    z: [0.1, 0.2],
                    w: [0.0, 0.0],
                    direct_value: -0.1 - e / 7.0,
                    predicted_value: -0.1 - e / 7.0 + 0.1 * e * e,
                    abs_error: 0.1 * e * e + 1.0 / 3.0 * 1e-9,
                }],
            })
            .collect();
        ConvergenceReport {
            scenario_id: "demo".into(),
            kind: ScenarioKind::Helmholtz,
            analytic: false,
            rows,
            slope: 2.0 - 1.0 / 3.0 * 1e-3,
            slope_residual: 1e-4,
            slope_without_largest: 1.99,
            threshold: 1.9,
            floor_check: None,
            flag: ReportFlag::Pass,
        }
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let r = sample();
        let recs = parse_report_csv(&render_csv(&r)).unwrap();
        assert_eq!(recs.len(), 3);
        for (rec, row) in recs.iter().zip(&r.rows) {
            let p = &row.probes[0];
            assert_eq!(rec.epsilon, row.epsilon);
            assert_eq!(rec.direct_value, p.direct_value);
            assert_eq!(rec.predicted_value, p.predicted_value);
            assert_eq!(rec.abs_error, p.abs_error);
            assert_eq!(rec.slope, r.slope);
            assert_eq!(rec.flag, "pass");
        }
        assert!(parse_report_csv("nonsense\n").is_err());
    }

    #[test]
    fn json_slope_matches_csv() {
        let r = sample();
        let v: serde_json::Value = serde_json::from_str(&render_json(&r)).unwrap();
        let slope = v["slope"].as_f64().unwrap();
        assert_eq!(slope, parse_report_csv(&render_csv(&r)).unwrap()[0].slope);
        assert_eq!(v["flag"], "pass");
    }

    #[test]
    fn plot_has_log_ticks_spanning_schedule() {
        let svg = render_svg(&sample());
        assert!(svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(">1e-2<") && svg.contains(">1e-1<"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(!svg.contains("href"));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let r = sample();
        let err = emit_report(&r, ReportFormat::Csv, Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}

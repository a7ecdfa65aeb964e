//! Result persistence: NDJSON records, CSV summaries and traces, and
//! self-contained SVG charts (plain XML, no rendering dependency).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::harness::{ExperimentRecord, SummaryTable};
use crate::solver::Trace;

/// Write bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// One JSON record per line, stable field order.
pub fn render_ndjson(records: &[ExperimentRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_ndjson(path: &Path, records: &[ExperimentRecord]) -> Result<()> {
    write_atomic(path, render_ndjson(records).as_bytes())
}

/// Summary table as CSV: UTF-8, header row, '.' decimal separator.
pub fn render_summary_csv(table: &SummaryTable) -> String {
    let mut out = String::new();
    out.push_str("n,k,m,noise_variance,method,trials,failures,support_exact_count");
    for field in ["s_hat_ratio", "final_residual", "runtime_seconds", "iterations"] {
        for stat in ["median", "q1", "q3", "min", "max"] {
            let _ = write!(out, ",{field}_{stat}");
        }
    }
    out.push('\n');
    for g in &table.groups {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            g.n, g.k, g.m, g.noise_variance, g.method, g.trials, g.failures,
            g.support_exact_count
        );
        for f in [&g.s_hat_ratio, &g.final_residual, &g.runtime_seconds, &g.iterations] {
            let _ = write!(out, ",{},{},{},{},{}", f.median, f.q1, f.q3, f.min, f.max);
        }
        out.push('\n');
    }
    out
}

pub fn write_summary_csv(path: &Path, table: &SummaryTable) -> Result<()> {
    write_atomic(path, render_summary_csv(table).as_bytes())
}

/// Per-iteration trace as CSV with columns iteration, eta, rho, residual,
/// cost (empty when the cost was undefined that iteration).
pub fn render_trace_csv(trace: &Trace) -> String {
    let mut out = String::from("iteration,eta,rho,residual,cost\n");
    for r in &trace.records {
        let cost = r.cost.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{},{}", r.iteration, r.eta, r.rho, r.residual, cost);
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<()> {
    write_atomic(path, render_trace_csv(trace).as_bytes())
}

// ---------------------------------------------------------------------
// SVG charts
// ---------------------------------------------------------------------

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_y: bool,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (v - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log_y {
            (v.max(1e-300).log10(), self.y_min, self.y_max)
        } else {
            (v, self.y_min, self.y_max)
        };
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (v - lo) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" ",
            "font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{cx}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = WIDTH / 2.0,
        title = xml_escape(title),
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    let _ = write!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    );
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label)
    );
    let _ = write!(
        out,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(y_label)
    );
    // Five y ticks.
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let value = frame.y_min + frac * (frame.y_max - frame.y_min);
        let display = if frame.log_y {
            format!("1e{value:.0}")
        } else {
            format!("{value:.3}")
        };
        let y = HEIGHT - MARGIN_BOTTOM - frac * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
        let _ = write!(
            out,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{display}</text>\n",
            x0 - 4.0,
            x0 - 7.0,
            y + 4.0,
        );
    }
}

/// Line chart of (x, y) points, optionally with a log10 y-axis. Used for
/// residual-vs-iteration traces.
pub fn svg_line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    log_y: bool,
) -> String {
    let mut out = svg_open(title);
    if points.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points
        .iter()
        .map(|p| if log_y { p.1.max(1e-300).log10() } else { p.1 })
        .collect();
    let frame = Frame {
        x_min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        x_max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        y_min: ys.iter().copied().fold(f64::INFINITY, f64::min),
        y_max: ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        log_y,
    };
    axes(&mut out, &frame, x_label, y_label);
    let mut path = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(
            path,
            "{}{:.2},{:.2} ",
            if i == 0 { "M" } else { "L" },
            frame.x(p.0),
            frame.y(p.1)
        );
    }
    let _ = write!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
        path.trim_end()
    );
    out.push_str("</svg>\n");
    out
}

/// Median line with a quartile band over a numeric x-axis. Used for the
/// ratio-versus-measurements charts.
pub fn svg_median_band_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64, f64, f64)], // (x, q1, median, q3)
) -> String {
    let mut out = svg_open(title);
    if points.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let frame = Frame {
        x_min: points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        x_max: points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        y_min: points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0),
        y_max: points.iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max) * 1.05,
        log_y: false,
    };
    axes(&mut out, &frame, x_label, y_label);
    let mut band = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(
            band,
            "{}{:.2},{:.2} ",
            if i == 0 { "M" } else { "L" },
            frame.x(p.0),
            frame.y(p.1)
        );
    }
    for p in points.iter().rev() {
        let _ = write!(band, "L{:.2},{:.2} ", frame.x(p.0), frame.y(p.3));
    }
    let _ = write!(
        out,
        "<path d=\"{}Z\" fill=\"lightsteelblue\" opacity=\"0.6\" stroke=\"none\"/>\n",
        band.trim_end()
    );
    let mut line = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(
            line,
            "{}{:.2},{:.2} ",
            if i == 0 { "M" } else { "L" },
            frame.x(p.0),
            frame.y(p.2)
        );
    }
    let _ = write!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n",
        line.trim_end()
    );
    for p in points {
        let _ = write!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n",
            frame.x(p.0),
            frame.y(p.2)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Box chart over categorical labels (five-number summaries), optionally
/// log-scaled. Used for the method-comparison panels.
pub fn svg_box_chart(
    title: &str,
    y_label: &str,
    entries: &[(String, [f64; 5])], // label, [min, q1, median, q3, max]
    log_y: bool,
) -> String {
    let mut out = svg_open(title);
    if entries.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let transform = |v: f64| if log_y { v.max(1e-300).log10() } else { v };
    let y_min = entries
        .iter()
        .map(|e| transform(e.1[0]))
        .fold(f64::INFINITY, f64::min);
    let y_max = entries
        .iter()
        .map(|e| transform(e.1[4]))
        .fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (y_max - y_min).max(1e-12);
    let frame = Frame {
        x_min: 0.0,
        x_max: entries.len() as f64,
        y_min: y_min - pad,
        y_max: y_max + pad,
        log_y,
    };
    axes(&mut out, &frame, "", y_label);
    let slot = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / entries.len() as f64;
    for (i, (label, five)) in entries.iter().enumerate() {
        let cx = MARGIN_LEFT + (i as f64 + 0.5) * slot;
        let half = slot * 0.28;
        let [min, q1, median, q3, max] = *five;
        let (ymin, yq1, ymed, yq3, ymax) = (
            frame.y(min),
            frame.y(q1),
            frame.y(median),
            frame.y(q3),
            frame.y(max),
        );
        let _ = write!(
            out,
            "<line x1=\"{cx}\" y1=\"{ymin}\" x2=\"{cx}\" y2=\"{ymax}\" stroke=\"black\"/>\n\
             <rect x=\"{}\" y=\"{yq3}\" width=\"{}\" height=\"{}\" fill=\"lightsteelblue\" stroke=\"black\"/>\n\
             <line x1=\"{}\" y1=\"{ymed}\" x2=\"{}\" y2=\"{ymed}\" stroke=\"black\" stroke-width=\"2\"/>\n\
             <text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            cx - half,
            2.0 * half,
            (yq1 - yq3).max(1.0),
            cx - half,
            cx + half,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            xml_escape(label),
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TraceRecord;

    #[test]
    fn trace_csv_has_header_and_rows() {
        let trace = Trace {
            records: vec![TraceRecord {
                iteration: 0,
                eta: 1.0,
                rho: 3,
                residual: 0.5,
                cost: None,
                elapsed_seconds: 0.1,
            }],
        };
        let csv = render_trace_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "iteration,eta,rho,residual,cost");
        assert_eq!(lines.next().unwrap(), "0,1,3,0.5,");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = svg_line_chart("t", "x", "y", &[(0.0, 1.0), (1.0, 0.1)], true);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<path"));
        let svg = svg_box_chart(
            "b",
            "y",
            &[("a".into(), [0.1, 0.2, 0.3, 0.4, 0.5])],
            false,
        );
        assert!(svg.contains("<rect"));
    }

    #[test]
    fn atomic_write_leaves_no_tmp(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        assert!(!dir.path().join("out.tmp").exists());
    }
}

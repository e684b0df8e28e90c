//! Post-run report from a matrix output directory: a fixed-width table of
//! `summary.csv` and, optionally, one SVG per trace.

use super::matrix::{SUMMARY_FILE, SUMMARY_HEADER, TRACE_DIR};
use super::trial::TraceRow;
use crate::error::{Error, Result};
use crate::thermal_field::TissueTimeConstantCheck;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const PLOT_DIR: &str = "plots";

#[derive(Debug, Clone)]
pub struct Report {
    pub table: String,
    /// SVG files written, in trace-name order.
    pub plots: Vec<PathBuf>,
}

/// Columns shown in the table: header name, display title, scale to display units.
const COLUMNS: [(&str, &str, f64); 7] = [
    ("success_rate", "success", 1.0),
    ("mean_peak_deflection_m", "peak defl mm", 1e3),
    ("mean_deflection_m", "mean defl mm", 1e3),
    ("mean_width_m", "width mm", 1e3),
    ("d_deflection", "D defl", 1.0),
    ("d_width", "D width", 1.0),
    ("mean_velocity_m_s", "v mm/s", 1e3),
];

fn parse_num(s: &str) -> Result<f64> {
    if s == "nan" {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|_| Error::Config(format!("not a number: {s:?}")))
}

fn summary_table(text: &str) -> Result<String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config(format!("{SUMMARY_FILE} is empty")))?;
    if header != SUMMARY_HEADER {
        return Err(Error::Config(format!("unexpected {SUMMARY_FILE} header")));
    }
    let names: Vec<&str> = header.split(',').collect();
    let col = |n: &str| names.iter().position(|&h| h == n).expect("column in header");

    let mut rows = vec![{
        let mut r = vec!["controller".to_string(), "phantom".into(), "ok/n".into()];
        r.extend(COLUMNS.iter().map(|c| c.1.to_string()));
        r
    }];
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != names.len() {
            return Err(Error::Config(format!("malformed {SUMMARY_FILE} row: {line}")));
        }
        let mut r = vec![
            f[col("controller")].to_string(),
            f[col("phantom")].to_string(),
            format!("{}/{}", f[col("successes")], f[col("trials")]),
        ];
        for (name, _, scale) in COLUMNS {
            let v = parse_num(f[col(name)])?;
            r.push(if v.is_finite() { format!("{:.3}", v * scale) } else { "-".into() });
        }
        rows.push(r);
    }

    let widths: Vec<usize> = (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    Ok(out)
}

fn read_trace(path: &Path) -> Result<Vec<[f64; 19]>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(TraceRow::HEADER) {
        return Err(Error::Config(format!("{}: unexpected trace header", path.display())));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let vals = l.split(',').map(parse_num).collect::<Result<Vec<f64>>>()?;
            vals.try_into().map_err(|_| Error::Config(format!("{}: malformed row", path.display())))
        })
        .collect()
}

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 160.0;
const PAD: f64 = 48.0;

/// Three stacked panels against position: velocity, true and estimated
/// deflection, measured and predicted width. Everything in mm.
fn trace_svg(title: &str, rows: &[[f64; 19]]) -> String {
    // Column indices into TraceRow::values().
    const POS: usize = 1;
    const VEL: usize = 2;
    const DEFL: usize = 3;
    const DEFL_HAT: usize = 4;
    const WIDTH: usize = 5;
    const WIDTH_HAT: usize = 6;
    let panels: [(&str, &[(usize, &str)]); 3] = [
        ("velocity mm/s", &[(VEL, "#1f77b4")]),
        ("deflection mm", &[(DEFL, "#d62728"), (DEFL_HAT, "#ff9896")]),
        ("width mm", &[(WIDTH, "#2ca02c"), (WIDTH_HAT, "#98df8a")]),
    ];
    let x: Vec<f64> = rows.iter().map(|r| r[POS] * 1e3).collect();
    let (x0, x1) = bounds(x.iter().copied());
    let height = 3.0 * (PANEL_H + PAD) + PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{height}" font-family="sans-serif" font-size="11">"#,
        w = PANEL_W + 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="20" font-size="13">{title}</text>"#);
    for (k, (label, series)) in panels.iter().enumerate() {
        let top = PAD + k as f64 * (PANEL_H + PAD);
        let (y0, y1) = bounds(series.iter().flat_map(|&(c, _)| rows.iter().map(move |r| r[c] * 1e3)));
        let _ = writeln!(
            s,
            r##"<rect x="{PAD}" y="{top}" width="{PANEL_W}" height="{PANEL_H}" fill="none" stroke="#888"/>"##
        );
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}">{label}</text>"#, top - 6.0);
        let _ = writeln!(s, r#"<text x="4" y="{}">{y1:.2}</text>"#, top + 10.0);
        let _ = writeln!(s, r#"<text x="4" y="{}">{y0:.2}</text>"#, top + PANEL_H);
        for &(c, colour) in series.iter() {
            let mut pts = String::new();
            for (xi, r) in x.iter().zip(rows) {
                let y = r[c] * 1e3;
                if !y.is_finite() {
                    continue;
                }
                let px = PAD + (xi - x0) / (x1 - x0) * PANEL_W;
                let py = top + PANEL_H - (y - y0) / (y1 - y0) * PANEL_H;
                let _ = write!(pts, "{px:.1},{py:.1} ");
            }
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#,
                pts.trim_end()
            );
        }
    }
    let bottom = height - PAD + 14.0;
    let _ = writeln!(s, r#"<text x="{PAD}" y="{bottom}">{x0:.0} mm</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{bottom}" text-anchor="end">{x1:.0} mm position</text>"#,
        PAD + PANEL_W
    );
    s.push_str("</svg>\n");
    s
}

/// Finite range of `v`, widened so that it is never empty.
fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

/// Reads `dir/summary.csv` into a table. With `svg`, also plots every trace
/// under `dir/traces` into `dir/plots`.
pub fn report(dir: &Path, svg: bool) -> Result<Report> {
    let text = std::fs::read_to_string(dir.join(SUMMARY_FILE))?;
    let mut table = summary_table(&text)?;
    let _ = writeln!(table, "{}", TissueTimeConstantCheck::tongue().summary());

    let mut plots = Vec::new();
    if svg {
        let mut traces: Vec<PathBuf> = std::fs::read_dir(dir.join(TRACE_DIR))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        traces.retain(|p| p.extension().is_some_and(|e| e == "csv"));
        traces.sort();
        let out = dir.join(PLOT_DIR);
        std::fs::create_dir_all(&out)?;
        for path in traces {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace").to_string();
            let rows = read_trace(&path)?;
            let target = out.join(format!("{stem}.svg"));
            std::fs::write(&target, trace_svg(&stem, &rows))?;
            plots.push(target);
        }
    }
    Ok(Report { table, plots })
}

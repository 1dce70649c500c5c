use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::report::{RunReport, SeriesRow, StateDump};
use super::ExperimentError;

pub const SERIES_HEADER: [&str; 7] = ["t", "x_norm", "l1_cell", "mass", "dev_plus", "dev_minus", "r"];

fn io(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn series_csv(rows: &[SeriesRow]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| ExperimentError::Io(format!("series: {e}"));
    w.write_record(SERIES_HEADER).map_err(err)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            cell(r.x_norm),
            cell(r.l1_cell),
            cell(r.mass),
            cell(r.dev_plus),
            cell(r.dev_minus),
            cell(r.r),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(format!("series: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses `series.csv` back into rows.
pub fn read_series(text: &str) -> Result<Vec<SeriesRow>, ExperimentError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let parse = |s: &str| -> Result<Option<f64>, ExperimentError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|e| ExperimentError::Io(format!("series value {s:?}: {e}")))
        }
    };
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| ExperimentError::Io(format!("series: {e}")))?;
        let f: Vec<&str> = rec.iter().collect();
        if f.len() != SERIES_HEADER.len() {
            return Err(ExperimentError::Io(format!("series row with {} fields", f.len())));
        }
        rows.push(SeriesRow {
            t: parse(f[0])?.unwrap_or(f64::NAN),
            x_norm: parse(f[1])?,
            l1_cell: parse(f[2])?,
            mass: parse(f[3])?,
            dev_plus: parse(f[4])?,
            dev_minus: parse(f[5])?,
            r: parse(f[6])?,
        });
    }
    Ok(rows)
}

fn state_csv(state: &StateDump) -> String {
    let dim = state.centers.first().map(Vec::len).unwrap_or(1);
    let mut out = String::new();
    let names = ["x", "y"];
    out.push_str(&names[..dim].join(","));
    out.push_str(",u\n");
    for (c, v) in state.centers.iter().zip(&state.values) {
        for x in c {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

/// A minimal line plot. With `log_log` nonpositive points are dropped.
pub fn svg_plot(title: &str, x_label: &str, lines: &[(&str, Vec<(f64, f64)>)], log_log: bool) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 56.0;
    let tf = |p: (f64, f64)| if log_log { (p.0.log10(), p.1.log10()) } else { p };
    let lines: Vec<(&str, Vec<(f64, f64)>)> = lines
        .iter()
        .map(|(name, pts)| {
            let kept = pts
                .iter()
                .copied()
                .filter(|p| !log_log || (p.0 > 0.0 && p.1 > 0.0))
                .map(tf)
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .collect();
            (*name, kept)
        })
        .collect();
    let all = lines.iter().flat_map(|l| l.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(p.1);
        y1 = y1.max(p.1);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<polyline points="{PAD},{PAD} {PAD},{} {},{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let fmt_tick = |v: f64| if log_log { format!("1e{v:.1}") } else { format!("{v:.3}") };
    for (v, x, y, anchor) in [
        (x0, sx(x0), H - PAD + 18.0, "start"),
        (x1, sx(x1), H - PAD + 18.0, "end"),
        (y0, PAD - 6.0, sy(y0), "end"),
        (y1, PAD - 6.0, sy(y1) + 4.0, "end"),
    ] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(&if log_log { format!("log10 {x_label}") } else { x_label.to_string() })
    );
    for (i, (name, pts)) in lines.iter().enumerate() {
        let colour = colours[i % colours.len()];
        // thin very long series to at most ~2000 vertices
        let step = (pts.len() / 2000).max(1);
        let mut path = String::new();
        for p in pts.iter().step_by(step).chain(pts.last()) {
            let _ = write!(path, "{:.2},{:.2} ", sx(p.0), sy(p.1));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            path.trim_end()
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{colour}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// File stem, title, named lines and whether the axes are logarithmic.
type Plot<'a> = (&'a str, &'a str, Vec<(&'a str, Vec<(f64, f64)>)>, bool);

fn column(rows: &[SeriesRow], get: impl Fn(&SeriesRow) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter().filter_map(|r| get(r).map(|v| (r.t, v))).collect()
}

/// Writes `report.json`, `series.csv`, `plots/*.svg` and `states/*.csv`.
pub fn write_outputs(report: &RunReport, out_dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(out_dir).map_err(|e| io(out_dir, e))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| ExperimentError::Io(format!("report: {e}")))?;
    let p = out_dir.join("report.json");
    fs::write(&p, json + "\n").map_err(|e| io(&p, e))?;
    let p = out_dir.join("series.csv");
    fs::write(&p, series_csv(&report.series)?).map_err(|e| io(&p, e))?;

    if report.config.outputs.plots && !report.series.is_empty() {
        let dir = out_dir.join("plots");
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        let mut scales: Vec<Option<f64>> = report.series.iter().map(|r| r.r).collect();
        scales.dedup();
        for scale in scales {
            let rows: Vec<SeriesRow> = report.series.iter().filter(|r| r.r == scale).cloned().collect();
            let suffix = scale.map(|r| format!("_r{r}")).unwrap_or_default();
            let plots: [Plot; 3] = [
                ("x_norm", "X-norm", vec![("x_norm", column(&rows, |r| r.x_norm))], true),
                (
                    "l1_cell",
                    "local L1",
                    vec![("l1_cell", column(&rows, |r| r.l1_cell)), ("mass", column(&rows, |r| r.mass))],
                    false,
                ),
                (
                    "deviations",
                    "deviations",
                    vec![
                        ("dev_plus", column(&rows, |r| r.dev_plus)),
                        ("dev_minus", column(&rows, |r| r.dev_minus)),
                    ],
                    false,
                ),
            ];
            for (file, title, lines, log_log) in plots {
                if lines.iter().all(|l| l.1.is_empty()) {
                    continue;
                }
                let p = dir.join(format!("{file}{suffix}.svg"));
                fs::write(&p, svg_plot(title, "t", &lines, log_log)).map_err(|e| io(&p, e))?;
            }
        }
    }

    if !report.states.is_empty() {
        let dir = out_dir.join("states");
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        for s in &report.states {
            let p = dir.join(format!("{}.csv", s.name));
            fs::write(&p, state_csv(s)).map_err(|e| io(&p, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_round_trip_keeps_empty_columns() {
        let rows = vec![
            SeriesRow {
                t: 0.0,
                x_norm: Some(1.0),
                mass: Some(0.1 + 0.2),
                ..Default::default()
            },
            SeriesRow {
                t: 0.5,
                dev_plus: Some(1e-300),
                r: Some(4.0),
                ..Default::default()
            },
        ];
        let text = series_csv(&rows).unwrap();
        assert!(text.starts_with("t,x_norm,l1_cell,mass,dev_plus,dev_minus,r\n"));
        assert_eq!(read_series(&text).unwrap(), rows);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_plot("a < b", "t", &[("x", vec![(1.0, 1.0), (10.0, 0.3), (0.0, 5.0)])], true);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<polyline").count(), 2);
    }
}

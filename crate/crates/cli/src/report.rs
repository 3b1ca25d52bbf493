//! CSV, SVG and plain-text outputs.

use crate::analyze::{transitions, CurveAnalysis};
use anyhow::Result;
use negscale::analysis::Simulation;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

struct LinePlot {
    title: String,
    x_label: String,
    y_label: String,
    /// Tick positions with labels; evenly spaced numeric ticks when empty.
    x_ticks: Vec<(f64, String)>,
    series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl LinePlot {
    fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| MARGIN_TOP + (1.0 - y.clamp(0.0, 1.0)) * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        for i in 0..=5 {
            let y = i as f64 / 5.0;
            let py = sy(y);
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#e0e0e0"/>"##,
                MARGIN_LEFT + plot_w
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.1}</text>"#,
                MARGIN_LEFT - 6.0,
                py + 4.0
            );
        }
        let ticks: Vec<(f64, String)> = if self.x_ticks.is_empty() {
            (0..=5)
                .map(|i| {
                    let x = x0 + (x1 - x0) * i as f64 / 5.0;
                    (x, format!("{x:.2}"))
                })
                .collect()
        } else {
            self.x_ticks.clone()
        };
        let axis_y = MARGIN_TOP + plot_h;
        for (x, label) in &ticks {
            let px = sx(*x);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.1}" y1="{axis_y:.1}" x2="{px:.1}" y2="{:.1}" stroke="#333"/>"##,
                axis_y + 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                axis_y + 18.0,
                escape(label)
            );
        }
        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#333"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 10.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
            if s.points.len() <= 12 {
                for &(x, y) in &s.points {
                    let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
            let ly = MARGIN_TOP + 10.0 + i as f64 * 18.0;
            let lx = MARGIN_LEFT + plot_w + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
                lx + 18.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 24.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// File-name-safe version of a family name.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per curve: `family,method,shape,acc_0,acc_1,...`.
pub fn accuracy_csv(analyses: &[CurveAnalysis]) -> String {
    let width = analyses.iter().map(|a| a.curve.points.len()).max().unwrap_or(0);
    let mut out = String::from("family,method,shape");
    for i in 0..width {
        let _ = write!(out, ",acc_{i}");
    }
    out.push('\n');
    for a in analyses {
        let _ = write!(out, "{},{},{}", csv_field(&a.curve.family), csv_field(&a.curve.method), a.shape);
        for i in 0..width {
            out.push(',');
            if let Some(p) = a.curve.points.get(i) {
                let _ = write!(out, "{}", p.accuracy);
            }
        }
        out.push('\n');
    }
    out
}

pub fn summary_text(analyses: &[CurveAnalysis]) -> Result<String> {
    let mut out = String::new();
    for a in analyses {
        let d = &a.diagnostics;
        let _ = write!(
            out,
            "{} / {}: {} (drop {:.3}, recovery {:.3}, end-to-end {:+.3})",
            a.curve.family, a.curve.method, a.shape, d.drop, d.recovery, d.endpoint_delta
        );
        if let Some(f) = a.fits.linear {
            let _ = write!(out, "; linear slope {:.4}", f.slope);
        }
        if let Some(f) = a.fits.sigmoid {
            let _ = write!(out, "; sigmoid mu {:.3} tau {:.3}", f.mu, f.tau);
        }
        if let Some(p) = &a.predicted_composed {
            let _ = write!(
                out,
                "; predicted from task1+{}: {} (mean abs error {:.3})",
                p.task2_method, p.shape, p.mean_abs_error
            );
        }
        out.push('\n');
    }
    for (family, ordering) in transitions(analyses)? {
        let order: Vec<String> = ordering.ordered.iter().map(|(m, f)| format!("{m} (mu {:.3})", f.mu)).collect();
        let _ = writeln!(out, "{family}: transition order {}", order.join(" < "));
    }
    Ok(out)
}

/// Writes `accuracies.csv`, `summary.txt` and one `scaling_<family>.svg`
/// per family into `out_dir`. Returns the paths written.
pub fn emit_report(analyses: &[CurveAnalysis], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let csv = out_dir.join("accuracies.csv");
    std::fs::write(&csv, accuracy_csv(analyses))?;
    written.push(csv);

    let summary = out_dir.join("summary.txt");
    std::fs::write(&summary, summary_text(analyses)?)?;
    written.push(summary);

    let mut families: BTreeMap<&str, Vec<&CurveAnalysis>> = BTreeMap::new();
    for a in analyses {
        families.entry(a.curve.family.as_str()).or_default().push(a);
    }
    for (family, members) in families {
        let max_rank = members
            .iter()
            .flat_map(|a| a.curve.points.iter().map(|p| p.scale_rank))
            .max()
            .unwrap_or(0);
        let plot = LinePlot {
            title: family.to_string(),
            x_label: "model scale (rank within family)".into(),
            y_label: "accuracy".into(),
            x_ticks: (0..=max_rank).map(|r| (r as f64, r.to_string())).collect(),
            series: members
                .iter()
                .map(|a| Series {
                    name: format!("{} ({})", a.curve.method, a.shape),
                    points: a
                        .curve
                        .points
                        .iter()
                        .map(|p| (p.scale_rank as f64, p.accuracy))
                        .collect(),
                })
                .collect(),
        };
        let path = out_dir.join(format!("scaling_{}.svg", slug(family)));
        std::fs::write(&path, plot.render())?;
        written.push(path);
    }
    Ok(written)
}

/// Three-line plot of simulated task-1, task-2 and composed accuracy.
pub fn emit_simulation_plot(sim: &Simulation, shape: &str, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let series = [("task 1", &sim.t1), ("task 2", &sim.t2), ("composed", &sim.composed)]
        .into_iter()
        .map(|(name, curve)| Series {
            name: name.to_string(),
            points: sim.grid.iter().copied().zip(curve.accuracies()).collect(),
        })
        .collect();
    let plot = LinePlot {
        title: format!("Simulated decomposition (composed: {shape})"),
        x_label: "model scale".into(),
        y_label: "accuracy".into(),
        x_ticks: Vec::new(),
        series,
    };
    let path = out_dir.join("simulation.svg");
    std::fs::write(&path, plot.render())?;
    Ok(path)
}

// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::io::Write;

use super::rate::RateReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = ["n", "replication", "excess", "est_error", "approx_error", "L_n", "N_n", "S_n", "B_n"];

/// One row per completed `(n, replication)` cell.
pub fn write_csv<W: Write>(report: &RateReport, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Experiment(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for c in &report.cells {
        let p = report.per_n.iter().find(|p| p.n == c.n).expect("cell n is on the grid");
        let k = &p.class_params;
        w.write_record([
            c.n.to_string(),
            c.replication.to_string(),
            c.excess.to_string(),
            c.est_error.to_string(),
            c.approx_error.to_string(),
            k.depth.to_string(),
            k.width.to_string(),
            k.sparsity.to_string(),
            k.max_abs.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Experiment(format!("csv flush failed: {e}")))
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;

struct Axes {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Axes {
    fn px(&self, lx: f64) -> f64 {
        PAD + (lx - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }
    fn py(&self, ly: f64) -> f64 {
        H - PAD - (ly - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn polyline(svg: &mut String, ax: &Axes, pts: &[(f64, f64)], style: &str) {
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", ax.px(x), ax.py(y))).collect();
    let _ = writeln!(svg, r#"<polyline fill="none" {style} points="{}"/>"#, coords.join(" "));
}

/// Self-contained log–log plot of median excess risk against `n`, with the
/// fitted line and the uncalibrated reference curve.
pub fn render_svg(report: &RateReport) -> String {
    let med: Vec<(f64, f64)> = report
        .per_n
        .iter()
        .filter(|p| p.excess_risk_median > 0.0)
        .map(|p| ((p.n as f64).log10(), p.excess_risk_median.log10()))
        .collect();
    let refc: Vec<(f64, f64)> = report
        .per_n
        .iter()
        .zip(&report.bound_eval)
        .filter(|(_, b)| **b > 0.0)
        .map(|(p, b)| ((p.n as f64).log10(), b.log10()))
        .collect();
    let xs: Vec<f64> = report.per_n.iter().map(|p| (p.n as f64).log10()).collect();
    let ys: Vec<f64> = med.iter().chain(&refc).map(|p| p.1).collect();
    let (mut x0, mut x1) = (xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (mut y0, mut y1) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    if !(x1 > x0) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !y0.is_finite() {
        (y0, y1) = (-1.0, 0.0);
    }
    if !(y1 > y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let ax = Axes { x0: x0 - 0.05, x1: x1 + 0.05, y0: y0.floor(), y1: y1.ceil() };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for &x in &xs {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ax.px(x),
            H - PAD + 18.0,
            10f64.powf(x).round()
        );
    }
    let mut e = ax.y0 as i32;
    while e as f64 <= ax.y1 {
        let y = ax.py(e as f64);
        let _ = writeln!(svg, r#"<line x1="{PAD}" x2="{:.2}" y1="{y:.2}" y2="{y:.2}" stroke="lightgray"/>"#, W - PAD);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, PAD - 6.0, y + 4.0);
        e += 1;
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">n</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">median excess risk</text>"#,
        H / 2.0,
        H / 2.0
    );

    polyline(&mut svg, &ax, &refc, r#"stroke="gray" stroke-dasharray="6 4""#);
    if let Some(slope) = report.fitted_slope {
        let mx = crate::stats::mean(&med.iter().map(|p| p.0).collect::<Vec<_>>());
        let my = crate::stats::mean(&med.iter().map(|p| p.1).collect::<Vec<_>>());
        let line: Vec<(f64, f64)> = [x0, x1].iter().map(|&x| (x, my + slope * (x - mx))).collect();
        polyline(&mut svg, &ax, &line, r#"stroke="firebrick""#);
    }
    polyline(&mut svg, &ax, &med, r#"stroke="steelblue" stroke-width="2""#);
    for &(x, y) in &med {
        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="steelblue"/>"#, ax.px(x), ax.py(y));
    }
    let slope_txt = report.fitted_slope.map_or("n/a".to_string(), |s| format!("{s:.3}"));
    let legend = [
        ("steelblue", format!("median excess risk ({})", report.estimator)),
        ("firebrick", format!("OLS fit, slope {slope_txt} (target {:.3})", report.target_slope)),
        ("gray", format!("bound, {}", report.bound_label)),
    ];
    for (i, (color, text)) in legend.iter().enumerate() {
        let y = PAD - 40.0 + 13.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{PAD}" x2="{:.2}" y1="{y:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#, PAD + 20.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, PAD + 26.0, y + 4.0, escape(text));
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::RateExperimentConfig;
    use crate::Exec;

    #[test]
    fn csv_and_svg_render() {
        let mut c = RateExperimentConfig::canonical();
        c.n_grid = vec![64, 128];
        c.replications = 2;
        c.mc_samples = 1000;
        c.train.restarts = 1;
        c.train.epochs = 50;
        let r = crate::harness::rate_experiment(&c, Exec::Serial).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 1 + 4);
        let svg = render_svg(&r);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("uncalibrated"));
        assert_eq!(svg, render_svg(&r));
    }
}

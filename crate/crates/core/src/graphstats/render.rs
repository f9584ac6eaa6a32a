//! Self-contained SVG renderers. Output is a pure function of the input:
//! coordinates are printed with fixed precision and no timestamps or ids
//! are generated.

use std::fmt::Write;

use super::{ccdf, fit_log_log, tail_exponent, DegreeDistribution, StatsError, TailMethod};
use crate::netbuild::Adjacency;

const PLOT: f64 = 600.0;
const MARGIN: f64 = 40.0;
const BAR_WIDTH: f64 = 18.0;

// viridis, sampled at five points
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.00, [0x44, 0x01, 0x54]),
    (0.25, [0x3b, 0x52, 0x8b]),
    (0.50, [0x21, 0x91, 0x8c]),
    (0.75, [0x5e, 0xc9, 0x62]),
    (1.00, [0xfd, 0xe7, 0x25]),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let i = STOPS
        .iter()
        .rposition(|(p, _)| *p <= t)
        .unwrap_or(0)
        .min(STOPS.len() - 2);
    let (p0, c0) = STOPS[i];
    let (p1, c1) = STOPS[i + 1];
    let f = (t - p0) / (p1 - p0);
    let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(c0[0], c1[0]),
        mix(c0[1], c1[1]),
        mix(c0[2], c1[2])
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heatmap of an adjacency matrix with a color bar. Zero cells are left as
/// background; with `log_scale` the color encodes `ln(1 + w)`.
pub fn render_matrix(adj: &Adjacency, log_scale: bool) -> Result<String, StatsError> {
    let n = adj.size();
    if n == 0 {
        return Err(StatsError::EmptyMatrix);
    }
    let max = adj.max_weight();
    let scale = |w: u64| -> f64 {
        if max == 0 {
            0.0
        } else if log_scale {
            (w as f64).ln_1p() / (max as f64).ln_1p()
        } else {
            w as f64 / max as f64
        }
    };
    let cell = PLOT / n as f64;
    let width = MARGIN + PLOT + 90.0;
    let height = MARGIN * 2.0 + PLOT;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN:.0}" y="24">Adjacency matrix, {n} x {n} ({} color scale)</text>"#,
        if log_scale { "log" } else { "linear" }
    );
    let _ = writeln!(
        svg,
        r##"<rect class="background" x="{MARGIN:.0}" y="{MARGIN:.0}" width="{PLOT:.0}" height="{PLOT:.0}" fill="#ffffff" stroke="#888888"/>"##
    );
    for row in 0..n {
        for (col, &w) in adj.row(row).iter().enumerate() {
            if w == 0 {
                continue;
            }
            let _ = writeln!(
                svg,
                r#"<rect class="cell" x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"><title>{} -> {}: {w}</title></rect>"#,
                MARGIN + col as f64 * cell,
                MARGIN + row as f64 * cell,
                color(scale(w)),
                escape(&adj.labels[row]),
                escape(&adj.labels[col]),
            );
        }
    }

    // color bar, max at the top
    let bar_x = MARGIN + PLOT + 20.0;
    svg.push_str("<defs><linearGradient id=\"colorbar\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">");
    for k in 0..=10 {
        let t = k as f64 / 10.0;
        let _ = write!(svg, r#"<stop offset="{t:.1}" stop-color="{}"/>"#, color(t));
    }
    svg.push_str("</linearGradient></defs>\n");
    let _ = writeln!(
        svg,
        r##"<rect class="colorbar" x="{bar_x:.0}" y="{MARGIN:.0}" width="{BAR_WIDTH:.0}" height="{PLOT:.0}" fill="url(#colorbar)" stroke="#888888"/>"##
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let value = if log_scale {
            ((max as f64).ln_1p() * t).exp_m1()
        } else {
            max as f64 * t
        };
        let y = MARGIN + PLOT * (1.0 - t);
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.0}" y="{:.1}">{}</text>"#,
            bar_x + BAR_WIDTH + 4.0,
            y + 4.0,
            format_value(value)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Placeholder heatmap for a graph with no nodes left to draw.
pub fn render_empty_matrix(message: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" height=\"120\" font-family=\"sans-serif\" font-size=\"12\">\n<text x=\"{MARGIN:.0}\" y=\"60\">{}</text>\n</svg>\n",
        escape(message)
    )
}

fn format_value(v: f64) -> String {
    if v >= 100.0 || v == v.round() {
        format!("{:.0}", v)
    } else {
        format!("{:.1}", v)
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(min: f64, max: f64, log: bool) -> Axis {
        if log {
            let lo = min.log10().floor();
            let mut hi = max.log10().ceil();
            if hi <= lo {
                hi = lo + 1.0;
            }
            Axis { lo, hi, log }
        } else {
            let hi = if max > 0.0 { nice_ceil(max) } else { 1.0 };
            Axis { lo: 0.0, hi, log }
        }
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            (self.lo as i32..=self.hi as i32)
                .map(|k| (10f64.powi(k), format!("1e{k}")))
                .collect()
        } else {
            (0..=5)
                .map(|k| {
                    let v = self.lo + (self.hi - self.lo) * k as f64 / 5.0;
                    (v, format_value(v))
                })
                .collect()
        }
    }
}

fn nice_ceil(x: f64) -> f64 {
    let mag = 10f64.powf(x.log10().floor());
    for m in [1.0, 2.0, 5.0, 10.0] {
        if m * mag >= x {
            return m * mag;
        }
    }
    10.0 * mag
}

/// CCDF scatter plot annotated with the default tail-exponent fit.
pub fn render_degree_plot(dist: &DegreeDistribution, log_log: bool) -> Result<String, StatsError> {
    let points = ccdf(dist)?;
    let tail = tail_exponent(dist, None, TailMethod::Regression)?;
    let shown: Vec<(f64, f64)> = points
        .iter()
        .filter(|(d, _)| !log_log || *d > 0)
        .map(|&(d, p)| (d as f64, p))
        .collect();

    let (w, h) = (640.0, 480.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let xmax = shown.iter().map(|p| p.0).fold(1.0, f64::max);
    let xmin = shown.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let pmin = shown.iter().map(|p| p.1).fold(1.0, f64::min);
    let xa = Axis::new(if xmin.is_finite() { xmin } else { 1.0 }, xmax, log_log);
    let ya = if log_log {
        let lo = pmin.log10().floor().min(-1.0);
        Axis {
            lo,
            hi: 0.0,
            log: true,
        }
    } else {
        Axis {
            lo: 0.0,
            hi: 1.0,
            log: false,
        }
    };
    let px = |x: f64| left + xa.frac(x) * pw;
    let py = |p: f64| top + (1.0 - ya.frac(p)) * ph;

    let what = if dist.weighted { "strength" } else { "degree" };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left:.0}" y="24">CCDF of {} {what} ({} nodes{})</text>"#,
        dist.kind,
        dist.n_nodes,
        if log_log { ", log-log" } else { "" }
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{left:.0}" y="{top:.0}" width="{pw:.0}" height="{ph:.0}" fill="none" stroke="#444444"/>"##
    );
    for (v, label) in xa.ticks() {
        let x = px(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.0}" x2="{x:.2}" y2="{:.0}" stroke="#444444"/><text class="xtick" x="{x:.2}" y="{:.0}" text-anchor="middle">{label}</text>"##,
            top + ph,
            top + ph + 5.0,
            top + ph + 18.0
        );
    }
    for (v, label) in ya.ticks() {
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.0}" y1="{y:.2}" x2="{left:.0}" y2="{y:.2}" stroke="#444444"/><text class="ytick" x="{:.0}" y="{:.2}" text-anchor="end">{label}</text>"##,
            left - 5.0,
            left - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.0}" y="{:.0}" text-anchor="middle">{what}</text>"#,
        left + pw / 2.0,
        h - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.0}" text-anchor="middle" transform="rotate(-90 18 {:.0})">P(X &gt;= {what})</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for &(x, p) in &shown {
        let _ = writeln!(
            svg,
            r##"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="#3b528b"/>"##,
            px(x),
            py(p)
        );
    }
    if log_log && tail.reliable {
        let tail_pts: Vec<(f64, f64)> = shown
            .iter()
            .copied()
            .filter(|(d, _)| *d >= tail.xmin as f64)
            .collect();
        let (alpha, intercept, _) = fit_log_log(&tail_pts);
        let x0 = tail.xmin as f64;
        let fit = |x: f64| (intercept - alpha * x.ln()).exp();
        let _ = writeln!(
            svg,
            r##"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d1495b" stroke-dasharray="6 4"/>"##,
            px(x0),
            py(fit(x0)),
            px(xmax),
            py(fit(xmax))
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="annotation" x="{:.0}" y="{:.0}" text-anchor="end">alpha = {:.3} (xmin = {}, n = {}, r2 = {:.3}{})</text>"#,
        left + pw - 8.0,
        top + 18.0,
        tail.exponent,
        tail.xmin,
        tail.n_tail,
        tail.r2,
        if tail.reliable { "" } else { ", unreliable" }
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

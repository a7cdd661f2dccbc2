//! Self-contained SVG line plots of summary rows: one polyline of means per method
//! with a translucent ±1 std band, and a dashed ground-truth rule. The x axis is
//! logarithmic when the sample sizes span more than a factor of ten.

use std::fmt::Write as _;

use crate::experiment::SummaryRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_x: bool,
}

impl Axes {
    fn x(&self, n: f64) -> f64 {
        let (v, lo, hi) = if self.log_x { (n.ln(), self.x_min.ln(), self.x_max.ln()) } else { (n, self.x_min, self.x_max) };
        let span = if hi > lo { hi - lo } else { 1.0 };
        let offset = if hi > lo { (v - lo) / span } else { 0.5 };
        LEFT + offset * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (self.y_max - v) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(summary: &[SummaryRow]) -> Axes {
    let ns = summary.iter().map(|s| s.n as f64);
    let x_min = ns.clone().fold(f64::INFINITY, f64::min);
    let x_max = ns.fold(f64::NEG_INFINITY, f64::max);
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in summary {
        for v in [s.mean - s.std, s.mean + s.std].into_iter().chain(s.ground_truth) {
            if v.is_finite() {
                y_min = y_min.min(v);
                y_max = y_max.max(v);
            }
        }
    }
    if !(y_min.is_finite() && y_max.is_finite()) {
        (y_min, y_max) = (0.0, 1.0);
    }
    let pad = ((y_max - y_min) * 0.08).max(1e-3);
    Axes { x_min, x_max, y_min: y_min - pad, y_max: y_max + pad, log_x: x_max > 10.0 * x_min }
}

pub fn render_svg(title: &str, summary: &[SummaryRow]) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (WIDTH - RIGHT + LEFT) / 2.0, escape(title));
    if summary.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let ax = axes(summary);
    let (plot_right, plot_bottom) = (WIDTH - RIGHT, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        plot_right - LEFT,
        plot_bottom - TOP
    );

    let mut ns: Vec<usize> = summary.iter().map(|s| s.n).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        let x = ax.x(n as f64);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{plot_bottom}" x2="{x:.2}" y2="{}" stroke="black"/>"#, plot_bottom + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{n}</text>"#, plot_bottom + 18.0);
    }
    for i in 0..=5 {
        let v = ax.y_min + (ax.y_max - ax.y_min) * i as f64 / 5.0;
        let y = ax.y(v);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{plot_right}" y2="{y:.2}" stroke="#dddddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let x_label = if ax.log_x { "n (log scale)" } else { "n" };
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, (LEFT + plot_right) / 2.0, HEIGHT - 15.0);

    let mut truth: Vec<(usize, f64)> = Vec::new();
    for &n in &ns {
        if let Some(t) = summary.iter().find(|s| s.n == n).and_then(|s| s.ground_truth) {
            truth.push((n, t));
        }
    }
    if !truth.is_empty() {
        let points: Vec<String> = if truth.len() == 1 {
            vec![format!("{LEFT},{:.2}", ax.y(truth[0].1)), format!("{plot_right},{:.2}", ax.y(truth[0].1))]
        } else {
            truth.iter().map(|&(n, t)| format!("{:.2},{:.2}", ax.x(n as f64), ax.y(t))).collect()
        };
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="6,4"/>"#, points.join(" "));
    }

    let mut methods: Vec<&str> = Vec::new();
    for s in summary {
        if !methods.contains(&s.method.as_str()) {
            methods.push(&s.method);
        }
    }
    for (index, method) in methods.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let rows: Vec<&SummaryRow> = summary.iter().filter(|s| s.method == *method).collect();
        let upper = rows.iter().map(|s| format!("{:.2},{:.2}", ax.x(s.n as f64), ax.y(s.mean + s.std)));
        let lower = rows.iter().rev().map(|s| format!("{:.2},{:.2}", ax.x(s.n as f64), ax.y(s.mean - s.std)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> = rows.iter().map(|s| format!("{:.2},{:.2}", ax.x(s.n as f64), ax.y(s.mean))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for s in &rows {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, ax.x(s.n as f64), ax.y(s.mean));
        }
        let y = TOP + 12.0 + 20.0 * index as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, plot_right + 12.0, plot_right + 36.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, plot_right + 42.0, y + 4.0, escape(method));
    }
    if !truth.is_empty() {
        let y = TOP + 12.0 + 20.0 * methods.len() as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="black" stroke-dasharray="6,4"/>"#, plot_right + 12.0, plot_right + 36.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">ground truth</text>"#, plot_right + 42.0, y + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}

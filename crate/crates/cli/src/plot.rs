//! Minimal SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
/// Points kept per series; longer series are thinned by striding.
const MAX_POINTS: usize = 5000;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Draw with equal scales on both axes.
    pub equal_aspect: bool,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        if hi - lo <= 1e-12 * lo.abs().max(1.0) {
            let pad = 0.5 * lo.abs().max(1e-3);
            return Range { lo: lo - pad, hi: hi + pad };
        }
        Range { lo, hi }
    }

    fn span(&self) -> f64 {
        self.hi - self.lo
    }

    fn widen_to(&mut self, span: f64) {
        let mid = 0.5 * (self.lo + self.hi);
        self.lo = mid - 0.5 * span;
        self.hi = mid + 0.5 * span;
    }
}

/// Round tick positions covering `range`, roughly `target` of them.
fn ticks(range: Range, target: usize) -> Vec<f64> {
    let raw = range.span() / target as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * magnitude);
    let first = (range.lo / step).ceil() as i64;
    let last = (range.hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(value: f64) -> String {
    let a = value.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{value:.2e}")
    } else {
        let s = format!("{value:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let mut xr = Range::of(all().map(|p| p.0));
        let mut yr = Range::of(all().map(|p| p.1));
        if self.equal_aspect {
            let scale = (xr.span() / plot_w).max(yr.span() / plot_h);
            xr.widen_to(scale * plot_w);
            yr.widen_to(scale * plot_h);
        }
        let sx = |x: f64| MARGIN_LEFT + (x - xr.lo) / xr.span() * plot_w;
        let sy = |y: f64| MARGIN_TOP + plot_h - (y - yr.lo) / yr.span() * plot_h;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        );

        let bottom = MARGIN_TOP + plot_h;
        for x in ticks(xr, 8) {
            let px = sx(x);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.2}" y1="{MARGIN_TOP}" x2="{px:.2}" y2="{bottom}" stroke="#e0e0e0"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
                bottom + 18.0,
                tick_label(x)
            );
        }
        for y in ticks(yr, 6) {
            let py = sy(y);
            let right = MARGIN_LEFT + plot_w;
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_LEFT}" y1="{py:.2}" x2="{right}" y2="{py:.2}" stroke="#e0e0e0"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                MARGIN_LEFT - 6.0,
                py + 4.0,
                tick_label(y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        );

        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let stride = series.points.len().div_ceil(MAX_POINTS).max(1);
            let mut points = String::new();
            let last = series.points.len().saturating_sub(1);
            for (j, &(x, y)) in series.points.iter().enumerate() {
                if (j % stride == 0 || j == last) && x.is_finite() && y.is_finite() {
                    let _ = write!(points, "{:.2},{:.2} ", sx(x), sy(y));
                }
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                points.trim_end()
            );
            let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
            let lx = MARGIN_LEFT + plot_w + 12.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}">{}</text>"#,
                lx + 26.0,
                ly + 4.0,
                escape(&series.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

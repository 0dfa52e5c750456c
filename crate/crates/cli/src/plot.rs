//! Minimal SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use fdakit::io::Provenance;
use fdakit::{FdaError, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// One polyline; curves sharing a group share a colour.
pub struct Series {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub group: usize,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Legend text per group; empty for no legend.
    pub groups: Vec<String>,
    pub series: Vec<Series>,
}

fn extent<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        return (lo - 1.0, hi + 1.0);
    }
    (lo, hi)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(chart: &Chart, prov: &Provenance) -> String {
    let (x_lo, x_hi) = extent(chart.series.iter().flat_map(|s| s.xs.iter()));
    let (y_min, y_max) = extent(chart.series.iter().flat_map(|s| s.ys.iter()));
    let pad = 0.05 * (y_max - y_min);
    let (y_lo, y_hi) = (y_min - pad, y_max + pad);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let prov_json = serde_json::to_string(prov).expect("provenance serializes");
    let _ = writeln!(svg, "<!-- provenance: {prov_json} -->");
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(chart.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = x_lo + f * (x_hi - x_lo);
        let y = y_lo + f * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="#333"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4:.4}</text>"##,
            sx(x),
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 18.0,
            x
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{1}" y1="{0:.2}" x2="{2}" y2="{0:.2}" stroke="#333"/><text x="{3}" y="{0:.2}" text-anchor="end" dominant-baseline="middle">{4:.4}</text>"##,
            sy(y),
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT,
            MARGIN_LEFT - 8.0,
            y
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        escape(chart.y_label)
    );
    for s in &chart.series {
        let mut points = String::new();
        for (x, y) in s.xs.iter().zip(&s.ys) {
            let _ = write!(points, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2" stroke-opacity="0.75"/>"#,
            points.trim_end(),
            PALETTE[s.group % PALETTE.len()]
        );
    }
    for (g, name) in chart.groups.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * g as f64;
        let x = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{}" y="{y}" dominant-baseline="middle">{}</text>"#,
            x + 20.0,
            PALETTE[g % PALETTE.len()],
            x + 26.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn save(path: &Path, chart: &Chart, prov: &Provenance) -> Result<()> {
    std::fs::write(path, render(chart, prov)).map_err(|source| FdaError::Io {
        path: path.display().to_string(),
        source,
    })
}

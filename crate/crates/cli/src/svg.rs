//! Small SVG emitter: axes with ticks, polylines, markers and a legend.

use std::fmt::Write as _;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    /// Index into the palette.
    pub color: usize,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style, color: usize) -> Self {
        Self { label: label.into(), points, style, color }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Shown instead of data when the panel has nothing to plot.
    pub note: Option<String>,
}

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 340.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 32.0;
const MARGIN_B: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let pts: Vec<&(f64, f64)> =
        series.iter().flat_map(|s| &s.points).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    if pts.is_empty() {
        return None;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &&(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a - 0.05 * (b - a), b + 0.05 * (b - a)) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    Some((x0, x1, y0, y1))
}

fn render_panel(out: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let w = PANEL_W - MARGIN_L - MARGIN_R;
    let h = PANEL_H - MARGIN_T - MARGIN_B;
    let (left, top) = (ox + MARGIN_L, oy + MARGIN_T);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
        left + w / 2.0,
        oy + 20.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"#,
        left + w / 2.0,
        top + h + 38.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 16.0,
        top + h / 2.0,
        ox + 16.0,
        top + h / 2.0,
        escape(&panel.y_label)
    );

    let Some((x0, x1, y0, y1)) = bounds(&panel.series) else {
        let note = panel.note.as_deref().unwrap_or("no data");
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13" fill="#888">{}</text>"##,
            left + w / 2.0,
            top + h / 2.0,
            escape(note)
        );
        return;
    };
    let px = |x: f64| left + (x - x0) / (x1 - x0) * w;
    let py = |y: f64| top + h - (y - y0) / (y1 - y0) * h;

    for t in ticks(x0, x1) {
        let _ = writeln!(
            out,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="#333"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle" font-size="10">{4}</text>"##,
            px(t),
            top + h,
            top + h + 4.0,
            top + h + 16.0,
            tick_label(t)
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            out,
            r##"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="#333"/><text x="{3:.1}" y="{4:.1}" text-anchor="end" font-size="10">{5}</text>"##,
            left - 4.0,
            py(t),
            left,
            left - 6.0,
            py(t) + 3.5,
            tick_label(t)
        );
    }

    for s in &panel.series {
        let color = PALETTE[s.color % PALETTE.len()];
        let pts = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite());
        match s.style {
            Style::Line => {
                let coords: Vec<String> = pts.map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    coords.join(" ")
                );
            }
            Style::Markers => {
                for &(x, y) in pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
                        px(x),
                        py(y)
                    );
                }
            }
        }
    }

    for (i, s) in panel.series.iter().enumerate() {
        let color = PALETTE[s.color % PALETTE.len()];
        let (lx, ly) = (left + 10.0, top + 14.0 + 16.0 * i as f64);
        match s.style {
            Style::Line => {
                let _ = writeln!(
                    out,
                    r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="1.5"/>"#,
                    lx + 18.0
                );
            }
            Style::Markers => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.1}" cy="{ly:.1}" r="3" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
                    lx + 9.0
                );
            }
        }
        let _ =
            writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#, lx + 24.0, ly + 4.0, escape(&s.label));
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Panels laid out row-major on a grid with `columns` columns.
pub fn figure(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let (width, height) = (PANEL_W * columns as f64, PANEL_H * rows as f64);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        let (r, c) = (i / columns, i % columns);
        render_panel(&mut out, panel, c as f64 * PANEL_W, r as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}

//! Minimal SVG line plots of shell curves.
//!
//! The x axis runs from DC to Nyquist, labelled as a fraction of Nyquist at
//! the bottom and in absolute spatial frequency (1/Å) at the top.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fscinfo::Curve64;

use crate::error::{CliError, Result};

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 360.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 64.0;
const MARGIN_B: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Point where a curve meets its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    /// Absolute spatial frequency.
    pub frequency: f64,
    pub value: f64,
}

/// One plotting area.
#[derive(Debug, Clone)]
pub struct Panel<'a> {
    pub title: String,
    pub y_label: String,
    pub curves: Vec<&'a Curve64>,
    /// Drawn dashed, in grey.
    pub threshold: Option<&'a Curve64>,
    pub marker: Option<Marker>,
}

impl<'a> Panel<'a> {
    pub fn new(title: impl Into<String>, curves: Vec<&'a Curve64>) -> Self {
        Self {
            title: title.into(),
            y_label: String::new(),
            curves,
            threshold: None,
            marker: None,
        }
    }

    pub fn y_label(mut self, label: impl Into<String>) -> Self {
        self.y_label = label.into();
        self
    }

    pub fn threshold(mut self, t: &'a Curve64) -> Self {
        self.threshold = Some(t);
        self
    }

    pub fn marker(mut self, m: Marker) -> Self {
        self.marker = Some(m);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick spacing covering `span` with about `target` intervals.
fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.0 {
        2.0
    } else if r < 7.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e4 || x.abs() < 1e-3 {
        format!("{x:.2e}")
    } else {
        let s = format!("{x:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn px(&self, frac: f64) -> f64 {
        self.x0 + frac * self.w
    }

    fn py(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.ymin) / (self.ymax - self.ymin) * self.h
    }
}

fn y_range(panel: &Panel) -> (f64, f64) {
    let vals = panel
        .curves
        .iter()
        .chain(panel.threshold.iter())
        .flat_map(|c| c.values.iter().copied())
        .filter(|v| v.is_finite());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Polyline point lists, split where values are undefined.
fn segments(c: &Curve64, f: &Frame) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for s in 0..c.n_shells() {
        let v = c.values[s];
        if v.is_finite() {
            let _ = write!(cur, "{:.2},{:.2} ", f.px(c.fraction_of_nyquist(s)), f.py(v));
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn render_panel(svg: &mut String, p: &Panel, ox: f64, oy: f64) -> Result<()> {
    let first = p.curves.first().ok_or_else(|| CliError::Data("plot panel has no curves".into()))?;
    for c in p.curves.iter().skip(1).chain(p.threshold.iter()) {
        first.ensure_same_axis(c)?;
    }
    let (ymin, ymax) = y_range(p);
    let f = Frame {
        x0: ox + MARGIN_L,
        y0: oy + MARGIN_T,
        w: PANEL_W - MARGIN_L - MARGIN_R,
        h: PANEL_H - MARGIN_T - MARGIN_B,
        ymin,
        ymax,
    };
    let nyq = first.nyquist;
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle" class="title">{}</text>"#,
        ox + PANEL_W / 2.0,
        oy + 16.0,
        escape(&p.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
        f.x0, f.y0, f.w, f.h
    );
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let x = f.px(frac);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##,
            f.y0 + f.h,
            f.y0 + f.h + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            f.y0 + f.h + 16.0,
            fmt_num(frac)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle" class="abs-tick">{}</text>"#,
            f.y0 - 5.0,
            fmt_num(frac * nyq)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">spatial frequency (fraction of Nyquist)</text>"#,
        f.x0 + f.w / 2.0,
        f.y0 + f.h + 36.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">spatial frequency (1/Å), Nyquist {}</text>"#,
        f.x0 + f.w / 2.0,
        f.y0 - 20.0,
        fmt_num(nyq)
    );
    let ystep = nice_step(ymax - ymin, 5);
    let mut t = (ymin / ystep).ceil() * ystep;
    while t <= ymax + 1e-12 * ystep {
        let y = f.py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000"/>"##,
            f.x0 - 4.0,
            f.x0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
            f.x0 - 6.0,
            y + 4.0,
            fmt_num(t)
        );
        t += ystep;
    }
    if ymin < 0.0 && ymax > 0.0 {
        let y = f.py(0.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#bbb"/>"##,
            f.x0,
            f.x0 + f.w
        );
    }
    if !p.y_label.is_empty() {
        let (x, y) = (ox + 16.0, f.y0 + f.h / 2.0);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 {x:.2} {y:.2})">{}</text>"#,
            escape(&p.y_label)
        );
    }

    let mut legend: Vec<(String, String, bool)> = Vec::new();
    for (i, c) in p.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for pts in segments(c, &f) {
            let _ = writeln!(
                svg,
                r#"<polyline class="curve" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                escape(&c.label),
                pts.trim_end()
            );
        }
        legend.push((c.label.clone(), color.to_string(), false));
    }
    if let Some(th) = p.threshold {
        for pts in segments(th, &f) {
            let _ = writeln!(
                svg,
                r##"<polyline class="threshold" data-label="{}" fill="none" stroke="#555" stroke-width="1.2" stroke-dasharray="6,4" points="{}"/>"##,
                escape(&th.label),
                pts.trim_end()
            );
        }
        legend.push((th.label.clone(), "#555".into(), true));
    }
    if let Some(m) = p.marker {
        let (x, y) = (f.px(m.frequency / nyq), f.py(m.value));
        let res = if m.frequency > 0.0 {
            format!(" ({} Å)", fmt_num(1.0 / m.frequency))
        } else {
            String::new()
        };
        let _ = writeln!(
            svg,
            r##"<circle class="crossing" cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="#000" stroke-width="1.5"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}{}</text>"#,
            x + 6.0,
            y - 6.0,
            fmt_num(m.frequency),
            escape(&res)
        );
    }
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let lx = f.x0 + f.w - 170.0;
        let ly = f.y0 + 14.0 + 15.0 * i as f64;
        let dash = if *dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line class="legend" x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            lx + 25.0,
            ly + 4.0,
            escape(label)
        );
    }
    Ok(())
}

/// Renders panels on a grid with `columns` panels per row.
pub fn render_svg(panels: &[Panel], columns: usize) -> Result<String> {
    if panels.is_empty() {
        return Err(CliError::Data("nothing to plot".into()));
    }
    let cols = columns.clamp(1, panels.len());
    let rows = panels.len().div_ceil(cols);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * rows as f64);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r##"<rect width="{w}" height="{h}" fill="#fff"/>"##);
    for (i, p) in panels.iter().enumerate() {
        let ox = (i % cols) as f64 * PANEL_W;
        let oy = (i / cols) as f64 * PANEL_H;
        let _ = writeln!(svg, r#"<g class="panel" data-index="{i}">"#);
        render_panel(&mut svg, p, ox, oy)?;
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes; no file is created when rendering fails.
pub fn write_svg(panels: &[Panel], columns: usize, path: &Path) -> Result<()> {
    let svg = render_svg(panels, columns)?;
    fs::write(path, svg).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

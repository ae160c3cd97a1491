//! Minimal SVG line plots: stacked panels sharing an x axis, and an
//! equal-aspect x-y plot. Plots only draw points taken from the series they
//! are given; long series are thinned by keeping each bucket's extremes.

use std::fmt::Write;

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const PANEL_GAP: f64 = 50.0;
const MAX_POINTS: usize = 4000;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#7f7f7f"];

pub struct Series<'a> {
    pub label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub color: &'a str,
}

pub struct Panel<'a> {
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub log_y: bool,
}

/// Indices of a thinned series: first, last and each bucket's min and max.
fn thin(ys: &[f64]) -> Vec<usize> {
    let n = ys.len();
    if n <= MAX_POINTS {
        return (0..n).collect();
    }
    let buckets = MAX_POINTS / 2;
    let mut idx = Vec::with_capacity(MAX_POINTS + 2);
    for b in 0..buckets {
        let (lo, hi) = (b * n / buckets, ((b + 1) * n / buckets).min(n));
        if lo >= hi {
            continue;
        }
        let (mut imin, mut imax) = (lo, lo);
        for i in lo..hi {
            if ys[i] < ys[imin] {
                imin = i;
            }
            if ys[i] > ys[imax] {
                imax = i;
            }
        }
        idx.push(imin.min(imax));
        if imin != imax {
            idx.push(imin.max(imax));
        }
    }
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil().max(lo.floor() + 1.0));
        } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            (lo, hi) = (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0));
        } else {
            let pad = 0.05 * (hi - lo);
            (lo, hi) = (lo - pad, hi + pad);
        }
        Scale { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let step = ((self.hi - self.lo) / 8.0).ceil().max(1.0) as i32;
            (self.lo as i32..=self.hi as i32)
                .step_by(step as usize)
                .map(|e| ((e as f64 - self.lo) / (self.hi - self.lo), format!("1e{e}")))
                .collect()
        } else {
            (0..=4)
                .map(|k| {
                    let v = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
                    (k as f64 / 4.0, fmt_tick(v))
                })
                .collect()
        }
    }
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

fn draw_axes(svg: &mut String, f: &Frame, xs: &Scale, ys: &Scale, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        f.x0, f.y0, f.w, f.h
    );
    for (t, label) in xs.ticks() {
        let x = f.x0 + t * f.w;
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#dddddd"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            f.y0,
            f.y0 + f.h,
            f.y0 + f.h + 16.0,
            escape(&label)
        );
    }
    for (t, label) in ys.ticks() {
        let y = f.y0 + f.h - t * f.h;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            f.x0,
            f.x0 + f.w,
            f.x0 - 6.0,
            y + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        f.x0 + f.w / 2.0,
        f.y0 + f.h + 34.0,
        escape(x_label)
    );
    let (lx, ly) = (f.x0 - 70.0, f.y0 + f.h / 2.0);
    let _ = writeln!(
        svg,
        r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
        escape(y_label)
    );
}

fn draw_series(svg: &mut String, f: &Frame, xs: &Scale, ys: &Scale, s: &Series) {
    let mut run = String::new();
    let flush = |run: &mut String, svg: &mut String| {
        if !run.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
                s.color,
                run.trim_end()
            );
            run.clear();
        }
    };
    let idx = if s.xs.len() == s.ys.len() { thin(s.ys) } else { Vec::new() };
    for i in idx {
        match (xs.frac(s.xs[i]), ys.frac(s.ys[i])) {
            (Some(fx), Some(fy)) => {
                let _ = write!(run, "{:.2},{:.2} ", f.x0 + fx * f.w, f.y0 + f.h - fy * f.h);
            }
            // gaps (e.g. zeros on a log axis) split the line
            _ => flush(&mut run, svg),
        }
    }
    flush(&mut run, svg);
}

fn draw_legend(svg: &mut String, f: &Frame, series: &[Series]) {
    for (k, s) in series.iter().enumerate() {
        let x = f.x0 + 10.0 + 130.0 * k as f64;
        let y = f.y0 - 8.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            x + 20.0,
            s.color,
            x + 25.0,
            y + 4.0,
            escape(s.label)
        );
    }
}

fn open(width: f64, height: f64, title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    svg
}

/// Panels stacked top to bottom over a shared x range.
pub fn stacked(title: &str, x_label: &str, panels: &[Panel]) -> String {
    let height = MARGIN_TOP + panels.len() as f64 * (PANEL_HEIGHT + PANEL_GAP);
    let mut svg = open(WIDTH, height, title);
    let xs = Scale::new(panels.iter().flat_map(|p| p.series.iter().flat_map(|s| s.xs.iter().copied())), false);
    let xs = Scale { lo: xs.lo.max(panel_x_min(panels)), hi: xs.hi.min(panel_x_max(panels)), log: false };
    for (k, p) in panels.iter().enumerate() {
        let frame = Frame {
            x0: MARGIN_LEFT,
            y0: MARGIN_TOP + k as f64 * (PANEL_HEIGHT + PANEL_GAP),
            w: WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            h: PANEL_HEIGHT,
        };
        let ys = Scale::new(p.series.iter().flat_map(|s| s.ys.iter().copied()), p.log_y);
        draw_axes(&mut svg, &frame, &xs, &ys, x_label, p.y_label);
        for s in &p.series {
            draw_series(&mut svg, &frame, &xs, &ys, s);
        }
        draw_legend(&mut svg, &frame, &p.series);
    }
    svg.push_str("</svg>\n");
    svg
}

fn panel_x_min(panels: &[Panel]) -> f64 {
    panels.iter().flat_map(|p| p.series.iter().filter_map(|s| s.xs.first().copied())).fold(f64::INFINITY, f64::min)
}

fn panel_x_max(panels: &[Panel]) -> f64 {
    panels.iter().flat_map(|p| p.series.iter().filter_map(|s| s.xs.last().copied())).fold(f64::NEG_INFINITY, f64::max)
}

/// Equal-aspect x-y plot, e.g. a scan trajectory against its reference.
pub fn xy(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let side = 600.0;
    let mut svg = open(side + MARGIN_LEFT + MARGIN_RIGHT, side + MARGIN_TOP + 50.0, title);
    let frame = Frame { x0: MARGIN_LEFT, y0: MARGIN_TOP, w: side, h: side };
    let xs = Scale::new(series.iter().flat_map(|s| s.xs.iter().copied()), false);
    let ys = Scale::new(series.iter().flat_map(|s| s.ys.iter().copied()), false);
    let half = 0.5 * (xs.hi - xs.lo).max(ys.hi - ys.lo);
    let (cx, cy) = (0.5 * (xs.lo + xs.hi), 0.5 * (ys.lo + ys.hi));
    let xs = Scale { lo: cx - half, hi: cx + half, log: false };
    let ys = Scale { lo: cy - half, hi: cy + half, log: false };
    draw_axes(&mut svg, &frame, &xs, &ys, x_label, y_label);
    for s in series {
        // pair x and y samples directly; thinning would break the pairing
        let mut run = String::new();
        for (x, y) in s.xs.iter().zip(s.ys) {
            if let (Some(fx), Some(fy)) = (xs.frac(*x), ys.frac(*y)) {
                let _ = write!(run, "{:.2},{:.2} ", frame.x0 + fx * frame.w, frame.y0 + frame.h - fy * frame.h);
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="0.6" points="{}"/>"#,
            s.color,
            run.trim_end()
        );
    }
    draw_legend(&mut svg, &frame, series);
    svg.push_str("</svg>\n");
    svg
}

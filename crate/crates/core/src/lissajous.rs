//! Lissajous scan planning.
//!
//! Each axis follows `c + a cos(w t)` with `w_x / w_y = 2N / (2N - 1)`. Both
//! frequencies are integer multiples of `pi f`, so the ratio is carried exactly
//! as a pair of integers. The whole curve is drawn once per frame `1/f`; since
//! `w_y / (2 pi f)` is a half-integer, the second frame retraces the first in
//! reverse and the axis signals repeat with period `2/f`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::reference::{ReferenceSpec, SineTerm};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LissajousError {
    #[error("amplitudes must be positive (ax = {ax}, ay = {ay})")]
    NonPositiveAmplitude { ax: f64, ay: f64 },
    #[error("N must be at least 1")]
    ZeroN,
    #[error("frame rate must be positive, got {0}")]
    NonPositiveFrameRate(f64),
    #[error("target resolution must be positive, got {0}")]
    NonPositiveResolution(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LissajousSpec {
    pub x0: f64,
    pub y0: f64,
    pub ax: f64,
    pub ay: f64,
    #[serde(rename = "N")]
    pub n: u32,
    /// Frame rate, Hz.
    pub f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyPlan {
    /// `w_x = kx * pi * f`
    pub kx: u64,
    /// `w_y = ky * pi * f`
    pub ky: u64,
    pub omega_x: f64,
    pub omega_y: f64,
    /// Time to draw the curve once, `1/f`, s.
    pub frame_time: f64,
    /// Common period of both axis signals, `2/f`, s.
    pub period: f64,
}

impl LissajousSpec {
    pub fn new(x0: f64, y0: f64, ax: f64, ay: f64, n: u32, f: f64) -> Result<Self, LissajousError> {
        let spec = LissajousSpec { x0, y0, ax, ay, n, f };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), LissajousError> {
        if !(self.ax > 0.0 && self.ay > 0.0) {
            return Err(LissajousError::NonPositiveAmplitude { ax: self.ax, ay: self.ay });
        }
        if self.n == 0 {
            return Err(LissajousError::ZeroN);
        }
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(LissajousError::NonPositiveFrameRate(self.f));
        }
        Ok(())
    }

    pub fn plan_frequencies(&self) -> FrequencyPlan {
        let kx = 2 * self.n as u64;
        let ky = kx - 1;
        FrequencyPlan {
            kx,
            ky,
            omega_x: kx as f64 * PI * self.f,
            omega_y: ky as f64 * PI * self.f,
            frame_time: 1.0 / self.f,
            period: 2.0 / self.f,
        }
    }

    /// Approximate maximum gap between adjacent passes,
    /// `pi ax ay / (N sqrt(ax^2 + ay^2))`.
    pub fn scan_resolution(&self) -> f64 {
        scan_resolution(self.ax, self.ay, self.n)
    }

    /// Per-axis references `c + a cos(w t)` over their common period `2/f`.
    pub fn axis_references(&self) -> (ReferenceSpec, ReferenceSpec) {
        let plan = self.plan_frequencies();
        let make = |c: f64, a: f64, w: f64| {
            ReferenceSpec::new(true, c, vec![SineTerm::cosine(a, w)], plan.period)
                .expect("validated Lissajous spec yields a periodic reference")
        };
        (make(self.x0, self.ax, plan.omega_x), make(self.y0, self.ay, plan.omega_y))
    }

    pub fn point(&self, t: f64) -> (f64, f64) {
        let plan = self.plan_frequencies();
        (
            self.x0 + self.ax * (plan.omega_x * t).cos(),
            self.y0 + self.ay * (plan.omega_y * t).cos(),
        )
    }
}

pub fn scan_resolution(ax: f64, ay: f64, n: u32) -> f64 {
    PI * ax * ay / (n as f64 * ax.hypot(ay))
}

/// Smallest `N` whose scan resolution does not exceed `h_target`.
pub fn required_n(ax: f64, ay: f64, h_target: f64) -> Result<u32, LissajousError> {
    if !(ax > 0.0 && ay > 0.0) {
        return Err(LissajousError::NonPositiveAmplitude { ax, ay });
    }
    if !(h_target > 0.0) {
        return Err(LissajousError::NonPositiveResolution(h_target));
    }
    let guess = (PI * ax * ay / (h_target * ax.hypot(ay))).ceil().max(1.0) as u32;
    let mut n = guess.max(1);
    while n > 1 && scan_resolution(ax, ay, n - 1) <= h_target {
        n -= 1;
    }
    while scan_resolution(ax, ay, n) > h_target {
        n += 1;
    }
    Ok(n)
}

/// Brute-force largest gap between adjacent same-direction passes of the
/// curve, measured along the vertical line through the center.
///
/// The frame is sampled at `samples` points; every pass through `x = x0` is
/// located by linear interpolation and tagged with the sign of its slope.
/// Passes of one sign are sorted by height and each adjacent gap is projected
/// onto the pass normal.
pub fn measured_scan_gap(spec: &LissajousSpec, samples: usize, exec: Execution) -> f64 {
    const CHUNK: usize = 1 << 14;
    let period = spec.plan_frequencies().frame_time;
    let at = |k: usize| spec.point(period * k as f64 / samples as f64);
    let chunks = samples.div_ceil(CHUNK);
    let passes: Vec<(f64, bool, f64)> = exec::map_range(exec, chunks, |c| {
        let mut out = Vec::new();
        let end = ((c + 1) * CHUNK).min(samples);
        let mut prev = at(c * CHUNK);
        for k in c * CHUNK + 1..=end {
            let cur = at(k);
            let (u0, u1) = (prev.0 - spec.x0, cur.0 - spec.x0);
            if u0 * u1 < 0.0 {
                let s = u0 / (u0 - u1);
                let y = prev.1 + s * (cur.1 - prev.1);
                let (dx, dy) = (cur.0 - prev.0, cur.1 - prev.1);
                out.push((y, dx * dy > 0.0, dx.abs() / dx.hypot(dy)));
            }
            prev = cur;
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();

    let mut widest: f64 = 0.0;
    for rising in [true, false] {
        let mut family: Vec<(f64, f64)> = passes
            .iter()
            .filter(|p| p.1 == rising)
            .map(|p| (p.0, p.2))
            .collect();
        family.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in family.windows(2) {
            widest = widest.max((w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1));
        }
    }
    widest
}

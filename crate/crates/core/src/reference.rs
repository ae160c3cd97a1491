//! Periodic multi-sine references and their quantization-level crossings.
//!
//! A reference `r(t) = delta0 * a0 + sum_i a_i sin(w_i t + theta_i)` is linear
//! in the parameter vector `rho` over the basis row
//! `phi(t) = [1, sin(w_1 t), cos(w_1 t), ..., sin(w_m t), cos(w_m t)]`.
//! Every instant where `r` passes from one quantization region to the next
//! pins `phi(t_k) rho` to a known boundary value, so the reference is
//! determined by its quantized image whenever the stacked rows have full
//! column rank.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantization::UniformQuantizer;

/// Minimum grid samples per period for crossing detection.
pub const CROSSING_GRID: usize = 4096;
/// Minimum grid samples per cycle of the fastest term.
pub const SAMPLES_PER_CYCLE: usize = 64;
/// Bisection stops at `period * CROSSING_TIME_TOL`.
pub const CROSSING_TIME_TOL: f64 = 1e-10;
/// Rank decision threshold relative to the largest singular value, further
/// multiplied by `max(p, 2m + 1)`.
pub const RANK_TOL: f64 = 1e-8;

const PERIOD_TOL: f64 = 1e-9;
const MAX_SPLIT_DEPTH: usize = 80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("reference needs at least one sinusoidal term")]
    NoTerms,
    #[error("term {index}: amplitude must be nonzero and finite")]
    ZeroAmplitude { index: usize },
    #[error("term {index}: frequency must be positive and finite")]
    NonPositiveFrequency { index: usize },
    #[error("terms {0} and {1} share the same frequency")]
    DuplicateFrequency(usize, usize),
    #[error("period must be positive and finite")]
    InvalidPeriod,
    #[error("term {index}: omega = {omega} rad/s is not a multiple of 2*pi/T for T = {period} s")]
    NotPeriodic { index: usize, omega: f64, period: f64 },
    #[error("reference never leaves one quantization region")]
    NoCrossings,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SineTerm {
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
    /// rad
    pub phase: f64,
}

impl SineTerm {
    pub fn new(amplitude: f64, omega: f64, phase: f64) -> Self {
        SineTerm { amplitude, omega, phase }
    }

    /// `a cos(w t)` written as `a sin(w t + pi/2)`.
    pub fn cosine(amplitude: f64, omega: f64) -> Self {
        SineTerm::new(amplitude, omega, PI / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReference", into = "RawReference")]
pub struct ReferenceSpec {
    delta0: bool,
    a0: f64,
    terms: Vec<SineTerm>,
    period: f64,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    delta0: bool,
    a0: f64,
    terms: Vec<SineTerm>,
    period: f64,
}

impl TryFrom<RawReference> for ReferenceSpec {
    type Error = ReferenceError;
    fn try_from(r: RawReference) -> Result<Self, ReferenceError> {
        ReferenceSpec::new(r.delta0, r.a0, r.terms, r.period)
    }
}

impl From<ReferenceSpec> for RawReference {
    fn from(r: ReferenceSpec) -> Self {
        RawReference { delta0: r.delta0, a0: r.a0, terms: r.terms, period: r.period }
    }
}

impl ReferenceSpec {
    pub fn new(delta0: bool, a0: f64, terms: Vec<SineTerm>, period: f64) -> Result<Self, ReferenceError> {
        if terms.is_empty() {
            return Err(ReferenceError::NoTerms);
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(ReferenceError::InvalidPeriod);
        }
        for (index, term) in terms.iter().enumerate() {
            if term.amplitude == 0.0 || !term.amplitude.is_finite() {
                return Err(ReferenceError::ZeroAmplitude { index });
            }
            if !(term.omega > 0.0 && term.omega.is_finite()) {
                return Err(ReferenceError::NonPositiveFrequency { index });
            }
            let cycles = term.omega * period / (2.0 * PI);
            if (cycles - cycles.round()).abs() > PERIOD_TOL * cycles.max(1.0) || cycles.round() < 1.0 {
                return Err(ReferenceError::NotPeriodic { index, omega: term.omega, period });
            }
            for (other, prev) in terms[..index].iter().enumerate() {
                if prev.omega == term.omega {
                    return Err(ReferenceError::DuplicateFrequency(other, index));
                }
            }
        }
        Ok(ReferenceSpec { delta0, a0, terms, period })
    }

    pub fn delta0(&self) -> bool {
        self.delta0
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn terms(&self) -> &[SineTerm] {
        &self.terms
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of sinusoidal terms `m`.
    pub fn m(&self) -> usize {
        self.terms.len()
    }

    /// Length of the basis row, `2m + 1`.
    pub fn basis_len(&self) -> usize {
        2 * self.terms.len() + 1
    }

    /// Same reference with the offset term switched on at `a0`.
    pub fn with_offset(&self, a0: f64) -> Self {
        ReferenceSpec { delta0: true, a0, ..self.clone() }
    }

    /// Same signal over a different (common) period.
    pub fn with_period(&self, period: f64) -> Result<Self, ReferenceError> {
        ReferenceSpec::new(self.delta0, self.a0, self.terms.clone(), period)
    }

    pub fn offset(&self) -> f64 {
        if self.delta0 {
            self.a0
        } else {
            0.0
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.offset()
            + self
                .terms
                .iter()
                .map(|s| s.amplitude * (s.omega * t + s.phase).sin())
                .sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|s| s.amplitude * s.omega * (s.omega * t + s.phase).cos())
            .sum()
    }

    /// Upper bound on `|r(t)|`.
    pub fn magnitude_bound(&self) -> f64 {
        self.offset().abs() + self.terms.iter().map(|s| s.amplitude.abs()).sum::<f64>()
    }

    pub fn basis_row(&self, t: f64) -> BasisRow {
        let mut v = Vec::with_capacity(self.basis_len());
        v.push(1.0);
        for s in &self.terms {
            let (sin, cos) = (s.omega * t).sin_cos();
            v.push(sin);
            v.push(cos);
        }
        BasisRow(v)
    }

    /// Coordinates of `r` in the basis: `a sin(wt + th) = a cos(th) sin(wt) + a sin(th) cos(wt)`.
    pub fn rho(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.basis_len());
        v.push(self.offset());
        for s in &self.terms {
            let (sin, cos) = s.phase.sin_cos();
            v.push(s.amplitude * cos);
            v.push(s.amplitude * sin);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisRow(pub Vec<f64>);

impl BasisRow {
    pub fn dot(&self, rho: &[f64]) -> f64 {
        self.0.iter().zip(rho).map(|(a, b)| a * b).sum()
    }
}

/// Basis rows of a reference at every quantization-level crossing in one period.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingMatrix {
    pub times: Vec<f64>,
    pub rows: Vec<BasisRow>,
    /// Boundary value the reference passes through at each instant.
    pub boundaries: Vec<f64>,
}

impl CrossingMatrix {
    pub fn p(&self) -> usize {
        self.times.len()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let cols = self.rows.first().map_or(0, |r| r.0.len());
        DMatrix::from_fn(self.rows.len(), cols, |i, j| self.rows[i].0[j])
    }

    /// Least-squares `rho` from the crossing constraints `phi(t_k) rho = boundary_k`.
    pub fn recover_rho(&self) -> Option<Vec<f64>> {
        let m = self.to_matrix();
        let b = DVector::from_column_slice(&self.boundaries);
        let cols = m.ncols();
        let svd = m.svd(true, true);
        let tol = svd.singular_values.max() * f64::EPSILON * self.p().max(cols) as f64;
        svd.solve(&b, tol).ok().map(|x| x.iter().copied().collect())
    }
}

/// Finds every instant in `[0, T)` where the reference changes quantization
/// region.
///
/// A uniform grid flags sign changes of the region index; each flagged
/// interval is refined by bisection to `T * CROSSING_TIME_TOL`.
pub fn find_crossings(spec: &ReferenceSpec, q: &UniformQuantizer) -> Result<CrossingMatrix, ReferenceError> {
    let period = spec.period;
    let fastest = spec.terms.iter().map(|s| s.omega).fold(0.0, f64::max);
    let cycles = (fastest * period / (2.0 * PI)).round() as usize;
    let samples = CROSSING_GRID.max(SAMPLES_PER_CYCLE * cycles);
    let t_tol = period * CROSSING_TIME_TOL;
    let index = |t: f64| q.region_index(spec.eval(t));

    let mut found: Vec<(f64, f64)> = Vec::new();
    let mut t_prev = 0.0;
    let mut j_prev = index(0.0);
    for k in 1..=samples {
        let t = period * k as f64 / samples as f64;
        let j = index(t);
        if j != j_prev {
            locate(&index, q, t_prev, j_prev, t, j, t_tol, 0, &mut found);
        }
        t_prev = t;
        j_prev = j;
    }

    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut times: Vec<f64> = Vec::with_capacity(found.len());
    let mut boundaries = Vec::with_capacity(found.len());
    for (t, b) in found {
        let t = if t >= period { t - period } else { t };
        if times.last().is_some_and(|&last| t - last < 2.0 * t_tol) {
            continue;
        }
        times.push(t);
        boundaries.push(b);
    }
    // a crossing at t = 0 can show up again just below T
    if times.len() > 1 && times[0] + period - times[times.len() - 1] < 2.0 * t_tol {
        times.pop();
        boundaries.pop();
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let times: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let boundaries: Vec<f64> = order.iter().map(|&i| boundaries[i]).collect();

    if times.is_empty() {
        return Err(ReferenceError::NoCrossings);
    }
    let rows = times.iter().map(|&t| spec.basis_row(t)).collect();
    Ok(CrossingMatrix { times, rows, boundaries })
}

#[allow(clippy::too_many_arguments)]
fn locate<F: Fn(f64) -> i64>(
    index: &F,
    q: &UniformQuantizer,
    mut lo: f64,
    j_lo: i64,
    mut hi: f64,
    j_hi: i64,
    t_tol: f64,
    depth: usize,
    out: &mut Vec<(f64, f64)>,
) {
    if j_lo == j_hi || depth > MAX_SPLIT_DEPTH {
        return;
    }
    if (j_lo - j_hi).abs() > 1 {
        if hi - lo <= t_tol {
            // several boundaries inside one tolerance window
            let step = if j_hi > j_lo { 1 } else { -1 };
            let mut j = j_lo;
            while j != j_hi {
                out.push((0.5 * (lo + hi), (j as f64 + 0.5 * step as f64) * q.delta()));
                j += step;
            }
            return;
        }
        let mid = 0.5 * (lo + hi);
        let j_mid = index(mid);
        locate(index, q, lo, j_lo, mid, j_mid, t_tol, depth + 1, out);
        locate(index, q, mid, j_mid, hi, j_hi, t_tol, depth + 1, out);
        return;
    }
    while hi - lo > t_tol {
        let mid = 0.5 * (lo + hi);
        let j_mid = index(mid);
        if j_mid == j_lo {
            lo = mid;
        } else if j_mid == j_hi {
            hi = mid;
        } else {
            locate(index, q, lo, j_lo, mid, j_mid, t_tol, depth + 1, out);
            locate(index, q, mid, j_mid, hi, j_hi, t_tol, depth + 1, out);
            return;
        }
    }
    let boundary = q.crossing_value(j_lo, j_hi).expect("adjacent regions");
    out.push((0.5 * (lo + hi), boundary));
}

/// Outcome of the recoverability test with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct Recoverability {
    pub recoverable: bool,
    /// Number of crossings per period.
    pub p: usize,
    /// `2m + 1`
    pub required: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub rank_tol: f64,
    pub reason: Option<String>,
}

/// True iff the reference has at least `2m + 1` crossings per period and the
/// crossing matrix has full column rank `2m + 1`.
pub fn reference_is_recoverable(spec: &ReferenceSpec, q: &UniformQuantizer) -> Recoverability {
    let required = spec.basis_len();
    let cm = match find_crossings(spec, q) {
        Ok(cm) => cm,
        Err(e) => {
            return Recoverability {
                recoverable: false,
                p: 0,
                required,
                rank: 0,
                singular_values: Vec::new(),
                rank_tol: 0.0,
                reason: Some(e.to_string()),
            }
        }
    };
    let p = cm.p();
    let sv = cm.to_matrix().singular_values();
    let mut singular_values: Vec<f64> = sv.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let rank_tol = singular_values.first().copied().unwrap_or(0.0) * RANK_TOL * p.max(required) as f64;
    let rank = singular_values.iter().filter(|&&s| s > rank_tol).count();
    let reason = if p < required {
        Some(format!("{p} crossings per period, need at least {required}"))
    } else if rank < required {
        Some(format!("crossing matrix rank {rank} < {required}"))
    } else {
        None
    };
    Recoverability {
        recoverable: reason.is_none(),
        p,
        required,
        rank,
        singular_values,
        rank_tol,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(a: f64, w: f64) -> ReferenceSpec {
        ReferenceSpec::new(false, 0.0, vec![SineTerm::new(a, w, 0.0)], 2.0 * PI / w).unwrap()
    }

    fn q(d: f64) -> UniformQuantizer {
        UniformQuantizer::new(d).unwrap()
    }

    #[test]
    fn validation() {
        assert_eq!(ReferenceSpec::new(true, 1.0, vec![], 1.0), Err(ReferenceError::NoTerms));
        assert!(matches!(
            ReferenceSpec::new(false, 0.0, vec![SineTerm::new(0.0, 1.0, 0.0)], 2.0 * PI),
            Err(ReferenceError::ZeroAmplitude { index: 0 })
        ));
        assert!(matches!(
            ReferenceSpec::new(false, 0.0, vec![SineTerm::new(1.0, 1.5, 0.0)], 2.0 * PI),
            Err(ReferenceError::NotPeriodic { .. })
        ));
        assert!(matches!(
            ReferenceSpec::new(false, 0.0, vec![SineTerm::new(1.0, 1.0, 0.0), SineTerm::new(2.0, 1.0, 0.0)], 2.0 * PI),
            Err(ReferenceError::DuplicateFrequency(0, 1))
        ));
        assert!(ReferenceSpec::new(false, 0.0, vec![SineTerm::new(1.0, 2.0, 0.0), SineTerm::new(2.0, 3.0, 0.0)], 2.0 * PI).is_ok());
    }

    #[test]
    fn cosine_axis_reference() {
        let w = 60.0 * PI;
        let r = ReferenceSpec::new(true, 0.25, vec![SineTerm::cosine(1.0, w)], 1.0).unwrap();
        assert_relative_eq!(r.eval(0.0), 1.25, max_relative = 1e-15);
        assert_eq!(sine(1.0, 1.0).eval(0.0), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let t = rng.gen_range(0.0..10.0);
            assert!((r.eval(t) - r.eval(t + 1.0)).abs() < 1e-11);
        }
    }

    #[test]
    fn basis_and_rho() {
        let r = sine(1.0, 1.0);
        assert_eq!(r.basis_row(0.0).0, vec![1.0, 0.0, 1.0]);
        assert_eq!(r.rho(), vec![0.0, 1.0, 0.0]);
        let c = ReferenceSpec::new(false, 0.0, vec![SineTerm::cosine(1.0, 1.0)], 2.0 * PI).unwrap();
        let rho = c.rho();
        assert!(rho[0] == 0.0 && rho[1].abs() < 1e-16 && rho[2] == 1.0);
        let two = ReferenceSpec::new(true, 1.0, vec![SineTerm::new(1.0, 1.0, 0.0), SineTerm::new(0.5, 2.0, 0.3)], 2.0 * PI).unwrap();
        assert_eq!(two.basis_row(0.3).0.len(), 5);
    }

    #[test]
    fn rho_reproduces_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let terms = (1..=3)
                .map(|k| SineTerm::new(rng.gen_range(0.1..2.0), k as f64 * 3.0, rng.gen_range(-PI..PI)))
                .collect();
            let r = ReferenceSpec::new(rng.gen_bool(0.5), rng.gen_range(-1.0..1.0), terms, 2.0 * PI / 3.0).unwrap();
            let rho = r.rho();
            for _ in 0..50 {
                let t = rng.gen_range(-5.0..5.0);
                assert!((r.basis_row(t).dot(&rho) - r.eval(t)).abs() < 1e-12);
                let row = r.basis_row(t);
                for pair in row.0[1..].chunks(2) {
                    assert!((pair[0].powi(2) + pair[1].powi(2) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn small_sine_has_no_crossings() {
        assert_eq!(find_crossings(&sine(1.0, 1.0), &q(10.0)), Err(ReferenceError::NoCrossings));
    }

    #[test]
    fn unit_sine_crossings_match_analytic() {
        let cm = find_crossings(&sine(1.0, 1.0), &q(1.0)).unwrap();
        let expect = [PI / 6.0, 5.0 * PI / 6.0, 7.0 * PI / 6.0, 11.0 * PI / 6.0];
        assert_eq!(cm.p(), 4);
        for (t, e) in cm.times.iter().zip(expect) {
            assert!((t - e).abs() < 2.0 * PI * 1e-9, "{t} vs {e}");
        }
        assert_eq!(cm.boundaries, vec![0.5, 0.5, -0.5, -0.5]);
    }

    #[test]
    fn crossings_sit_on_boundaries() {
        let r = ReferenceSpec::new(true, 0.3, vec![SineTerm::new(2.7, 4.0, 0.4), SineTerm::new(0.8, 12.0, 1.0)], PI / 2.0).unwrap();
        let cm = find_crossings(&r, &q(0.5)).unwrap();
        let t_tol = r.period() * CROSSING_TIME_TOL;
        let slope_bound = r.terms().iter().map(|s| s.amplitude * s.omega).sum::<f64>();
        for (t, b) in cm.times.iter().zip(&cm.boundaries) {
            assert!((r.eval(*t) - b).abs() <= slope_bound * t_tol);
        }
    }

    #[test]
    fn symmetric_sine_crossings_are_even() {
        for a in [0.7, 1.3, 2.6, 5.1] {
            let cm = find_crossings(&sine(a, 2.0), &q(1.0)).unwrap();
            assert_eq!(cm.p() % 2, 0);
        }
    }

    #[test]
    fn recoverability_cases() {
        let w = 60.0 * PI;
        let axis = ReferenceSpec::new(true, 0.0, vec![SineTerm::cosine(1.0, w)], 2.0 * PI / w).unwrap();
        let rep = reference_is_recoverable(&axis, &q(1.0));
        assert!(rep.recoverable, "{rep:?}");
        assert_eq!((rep.p, rep.rank), (4, 3));

        let small = ReferenceSpec::new(true, 0.0, vec![SineTerm::new(0.4, 1.0, 0.0)], 2.0 * PI).unwrap();
        let rep = reference_is_recoverable(&small, &q(1.0));
        assert!(!rep.recoverable);
        assert_eq!(rep.p, 0);

        let offset = ReferenceSpec::new(true, 0.3, vec![SineTerm::new(0.3, 1.0, 0.0)], 2.0 * PI).unwrap();
        let rep = reference_is_recoverable(&offset, &q(1.0));
        assert!(!rep.recoverable);
        assert_eq!(rep.p, 2);
    }

    #[test]
    fn recover_rho_from_crossings() {
        let r = ReferenceSpec::new(true, 0.2, vec![SineTerm::new(2.3, 2.0, 0.7), SineTerm::new(1.1, 6.0, -0.4)], PI).unwrap();
        let cm = find_crossings(&r, &q(0.5)).unwrap();
        let rho = cm.recover_rho().unwrap();
        let truth = r.rho();
        let norm = truth.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (a, b) in rho.iter().zip(&truth) {
            assert!((a - b).abs() <= 1e-6 * norm);
        }
    }

    #[test]
    fn serde_validates_reference() {
        let ok = r#"{"delta0":true,"a0":0.0,"terms":[{"amplitude":1.0,"omega":6.283185307179586,"phase":0.0}],"period":1.0}"#;
        assert!(serde_json::from_str::<ReferenceSpec>(ok).is_ok());
        let bad = r#"{"delta0":true,"a0":0.0,"terms":[],"period":1.0}"#;
        assert!(serde_json::from_str::<ReferenceSpec>(bad).is_err());
    }
}

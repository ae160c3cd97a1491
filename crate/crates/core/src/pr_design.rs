//! Positive-real loop shapes with internal models.
//!
//! A loop function `H = C G` that contains the generating dynamics of the
//! reference (an integrator for the offset, an undamped pair `s^2 + w_i^2` for
//! each sinusoid), has every other pole strictly stable and is positive real
//! drives `q(r) - q(y)` to zero and with it the tracking error. This module
//! builds such loop functions from PR-preserving terms, checks the hypotheses
//! on arbitrary rational functions and divides out a plant to obtain the
//! controller.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::reference::ReferenceSpec;
use crate::tf::{log_space, Polynomial, RationalTransferFunction, TfError};

/// Allowed negative excursion of `Re H(jw)`, relative to `max(1, |H(jw)|)`.
pub const PR_TOL: f64 = 1e-9;
/// Sweep points closer than this fraction of `w` to an imaginary-axis pole are skipped.
pub const EXCLUSION_RADIUS: f64 = 1e-6;
/// A pole counts as lying on the imaginary axis when `|Re p| <= MARGINAL_TOL * max(1, |p|)`.
pub const MARGINAL_TOL: f64 = 1e-7;
/// Log-spaced sweep size.
pub const SWEEP_POINTS: usize = 10_000;
/// Extra points placed around each imaginary-axis pole.
pub const RESONANCE_POINTS: usize = 100;
/// Default ratio between the causality padding pole and the fastest resonance.
pub const DEFAULT_PADDING_FACTOR: f64 = 100.0;

const CLUSTER_TOL: f64 = 1e-5;
const RESIDUE_IMAG_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrDesignError {
    #[error("constraint {constraint} violated: {detail}")]
    ConstraintViolation { constraint: u8, detail: String },
    #[error("resonant term {index} needs a positive frequency")]
    InvalidResonance { index: usize },
    #[error("cannot make the controller proper: {0}")]
    ImproperUnfixable(String),
    #[error("controller would cancel plant {kind} at {location} in the closed right half-plane")]
    UnstableCancellation { kind: &'static str, location: Complex64 },
    #[error(transparent)]
    Tf(#[from] TfError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonantTerm {
    pub gain: f64,
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirstOrderTerm {
    pub gain: f64,
    pub pole: f64,
}

/// `gain (s + zero) / (s^2 + c s + d)`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondOrderTerm {
    pub gain: f64,
    pub zero: f64,
    pub c: f64,
    pub d: f64,
}

/// Sum of PR-preserving terms:
/// `delta0 k0/s + sum k s/(s^2 + w^2) + sum k/(s + p) + sum k (s + z)/(s^2 + c s + d)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrComposition {
    #[serde(default)]
    pub delta0: bool,
    #[serde(default)]
    pub k0: f64,
    #[serde(default)]
    pub resonant: Vec<ResonantTerm>,
    #[serde(default)]
    pub first_order: Vec<FirstOrderTerm>,
    #[serde(default)]
    pub second_order: Vec<SecondOrderTerm>,
}

fn violation(constraint: u8, detail: String) -> PrDesignError {
    PrDesignError::ConstraintViolation { constraint, detail }
}

impl PrComposition {
    pub fn validate(&self) -> Result<(), PrDesignError> {
        let gains = std::iter::once(("k0".to_string(), self.k0))
            .chain(self.resonant.iter().enumerate().map(|(i, t)| (format!("resonant[{i}]"), t.gain)))
            .chain(self.first_order.iter().enumerate().map(|(i, t)| (format!("first_order[{i}]"), t.gain)))
            .chain(self.second_order.iter().enumerate().map(|(i, t)| (format!("second_order[{i}]"), t.gain)));
        for (name, k) in gains {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(violation(1, format!("gain {name} = {k} must be >= 0")));
            }
        }
        for (index, t) in self.resonant.iter().enumerate() {
            if !(t.omega > 0.0 && t.omega.is_finite()) {
                return Err(PrDesignError::InvalidResonance { index });
            }
        }
        for (i, t) in self.first_order.iter().enumerate() {
            if !(t.pole > 0.0 && t.pole.is_finite()) {
                return Err(violation(2, format!("first_order[{i}] pole {} must be > 0", t.pole)));
            }
        }
        for (i, t) in self.second_order.iter().enumerate() {
            if !(t.c > 0.0 && t.d > 0.0) {
                return Err(violation(3, format!("second_order[{i}] needs c > 0 and d > 0")));
            }
            if !(t.zero >= 0.0 && t.zero <= t.c) {
                return Err(violation(3, format!("second_order[{i}] needs 0 <= z <= c")));
            }
        }
        Ok(())
    }

    /// The individual terms as rational functions; zero-gain terms are dropped.
    pub fn terms(&self) -> Result<Vec<RationalTransferFunction>, PrDesignError> {
        self.validate()?;
        let mut out = Vec::new();
        if self.delta0 && self.k0 > 0.0 {
            out.push(RationalTransferFunction::from_coeffs(&[self.k0], &[0.0, 1.0])?);
        }
        for t in self.resonant.iter().filter(|t| t.gain > 0.0) {
            out.push(RationalTransferFunction::from_coeffs(&[0.0, t.gain], &[t.omega * t.omega, 0.0, 1.0])?);
        }
        for t in self.first_order.iter().filter(|t| t.gain > 0.0) {
            out.push(RationalTransferFunction::from_coeffs(&[t.gain], &[t.pole, 1.0])?);
        }
        for t in self.second_order.iter().filter(|t| t.gain > 0.0) {
            out.push(RationalTransferFunction::from_coeffs(&[t.gain * t.zero, t.gain], &[t.d, t.c, 1.0])?);
        }
        Ok(out)
    }

    /// Single reduced rational function equal to the term sum.
    pub fn compose(&self) -> Result<RationalTransferFunction, PrDesignError> {
        let mut acc = RationalTransferFunction::zero();
        for term in self.terms()? {
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }
}

/// Imaginary-axis pole with its multiplicity and residue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalPole {
    pub omega: f64,
    pub multiplicity: usize,
    pub residue: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PositiveRealReport {
    pub positive_real: bool,
    /// Smallest `Re H(jw)` over the sweep.
    pub min_re: f64,
    pub argmin_omega: f64,
    /// Smallest `Re H(jw) / max(1, |H(jw)|)` over the sweep.
    pub min_normalized_re: f64,
    pub points_checked: usize,
    pub points_skipped: usize,
    pub marginal_poles: Vec<MarginalPole>,
    pub failures: Vec<String>,
}

/// Frequency grid for the positive-realness sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencySweep {
    pub omegas: Vec<f64>,
}

impl FrequencySweep {
    pub fn from_omegas(omegas: Vec<f64>) -> Self {
        FrequencySweep { omegas }
    }

    /// Log grid over `[1e-3 w_min, 1e3 w_max]`, where the range comes from the
    /// nonzero pole and zero magnitudes, plus a cluster of points on both
    /// sides of every imaginary-axis pole.
    pub fn for_transfer_function(h: &RationalTransferFunction, points: usize) -> Result<Self, TfError> {
        let poles = h.poles()?;
        let zeros = h.zeros()?;
        let mags: Vec<f64> = poles.iter().chain(&zeros).map(|z| z.norm()).filter(|&m| m > 0.0).collect();
        let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().copied().fold(0.0, f64::max);
        let (lo, hi) = if mags.is_empty() { (1.0, 1.0) } else { (lo, hi) };
        let mut omegas = log_space(1e-3 * lo, 1e3 * hi, points);
        let half = RESONANCE_POINTS / 2;
        let offsets = log_space(2.0 * EXCLUSION_RADIUS, 0.1, half);
        for p in poles.iter().filter(|p| is_marginal(**p) && p.im > 0.0) {
            for off in &offsets {
                omegas.push(p.im * (1.0 - off));
                omegas.push(p.im * (1.0 + off));
            }
        }
        omegas.sort_by(f64::total_cmp);
        Ok(FrequencySweep { omegas })
    }
}

fn is_marginal(p: Complex64) -> bool {
    p.re.abs() <= MARGINAL_TOL * p.norm().max(1.0)
}

/// Groups imaginary-axis poles (upper half plane and origin) with their
/// multiplicities.
fn marginal_pole_groups(poles: &[Complex64]) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    for &p in poles.iter().filter(|p| is_marginal(**p) && p.im >= -MARGINAL_TOL * p.norm().max(1.0)) {
        let radius = CLUSTER_TOL * p.norm().max(1.0);
        match groups.iter_mut().find(|(c, _)| (c.im - p.im).abs() <= radius) {
            Some(g) => g.1 += 1,
            None => groups.push((Complex64::new(0.0, p.im.max(0.0)), 1)),
        }
    }
    groups
}

/// Residue of a simple pole `p` of `num/den`: `num(p) / den'(p)`.
fn residue(h: &RationalTransferFunction, p: Complex64) -> Complex64 {
    h.numerator().eval_complex(p) / h.denominator().derivative().eval_complex(p)
}

pub fn check_positive_real(h: &RationalTransferFunction, sweep: &FrequencySweep) -> Result<PositiveRealReport, TfError> {
    check_positive_real_with(h, sweep, Execution::default())
}

/// Positive-realness by pole classification, residue signs and a frequency sweep.
///
/// Passes iff every pole has `Re <= 0`, every imaginary-axis pole is simple
/// with a real nonnegative residue, and `Re H(jw) >= -PR_TOL * max(1, |H|)` at
/// every sweep point outside the exclusion radius of those poles.
pub fn check_positive_real_with(
    h: &RationalTransferFunction,
    sweep: &FrequencySweep,
    exec: Execution,
) -> Result<PositiveRealReport, TfError> {
    let h = h.reduce()?;
    let poles = h.poles()?;
    let mut failures = Vec::new();

    for p in poles.iter().filter(|p| !is_marginal(**p) && p.re > 0.0) {
        failures.push(format!("pole {p} in the open right half-plane"));
    }
    let mut marginal_poles = Vec::new();
    for (p, multiplicity) in marginal_pole_groups(&poles) {
        let res = if multiplicity == 1 { residue(&h, p) } else { Complex64::new(f64::NAN, f64::NAN) };
        if multiplicity > 1 {
            failures.push(format!("pole at j{} has multiplicity {multiplicity}", p.im));
        } else if !(res.re >= 0.0 && res.im.abs() <= RESIDUE_IMAG_TOL * res.norm().max(1e-300)) {
            failures.push(format!("pole at j{} has residue {res}, not real nonnegative", p.im));
        }
        marginal_poles.push(MarginalPole { omega: p.im, multiplicity, residue: res });
    }

    let excluded = |w: f64| {
        marginal_poles
            .iter()
            .any(|mp| (w - mp.omega).abs() <= EXCLUSION_RADIUS * mp.omega.abs().max(w))
    };
    let points: Vec<f64> = sweep.omegas.iter().copied().filter(|&w| w >= 0.0 && !excluded(w)).collect();
    let skipped = sweep.omegas.len() - points.len();

    // (re, normalized re, omega) per point; Err when the sweep hits a pole
    let values: Vec<Result<(f64, f64, f64), TfError>> = exec::map(exec, &points, |&w| {
        let v = h.eval_jw(w)?;
        Ok((v.re, v.re / v.norm().max(1.0), w))
    });
    let mut min_re = f64::INFINITY;
    let mut argmin_omega = f64::NAN;
    let mut min_normalized_re = f64::INFINITY;
    for v in values {
        let (re, nre, w) = v?;
        if re < min_re {
            min_re = re;
            argmin_omega = w;
        }
        min_normalized_re = min_normalized_re.min(nre);
    }
    if min_normalized_re < -PR_TOL {
        failures.push(format!("Re H(jw) = {min_re:e} < 0 near w = {argmin_omega:e} rad/s"));
    }

    Ok(PositiveRealReport {
        positive_real: failures.is_empty(),
        min_re,
        argmin_omega,
        min_normalized_re,
        points_checked: points.len(),
        points_skipped: skipped,
        marginal_poles,
        failures,
    })
}

/// Check on one resonant pair required by the reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceCheck {
    pub omega: f64,
    /// Number of poles found at `+j omega`.
    pub multiplicity: usize,
    pub ok: bool,
}

/// Verdict on the four loop hypotheses for a given reference.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopHypothesesReport {
    /// Simple pole at the origin when the reference has an offset term.
    pub has_integrator: bool,
    pub origin_multiplicity: usize,
    pub resonant_pairs: Vec<ResonanceCheck>,
    pub resonant_pairs_ok: bool,
    /// Every pole not claimed above lies in `Re s < 0`.
    pub remaining_poles_stable: bool,
    pub unstable_poles: Vec<Complex64>,
    pub positive_real: PositiveRealReport,
    pub verdict: bool,
}

impl LoopHypothesesReport {
    pub fn conditions(&self) -> [(&'static str, bool); 4] {
        [
            ("i   integrator for offset", self.has_integrator),
            ("ii  resonant pair per sinusoid", self.resonant_pairs_ok),
            ("iii remaining poles stable", self.remaining_poles_stable),
            ("iv  positive real", self.positive_real.positive_real),
        ]
    }
}

pub fn check_loop_hypotheses(h: &RationalTransferFunction, spec: &ReferenceSpec) -> Result<LoopHypothesesReport, TfError> {
    check_loop_hypotheses_with(h, spec, Execution::default())
}

pub fn check_loop_hypotheses_with(
    h: &RationalTransferFunction,
    spec: &ReferenceSpec,
    exec: Execution,
) -> Result<LoopHypothesesReport, TfError> {
    let h = h.reduce()?;
    let poles = h.poles()?;
    let mut claimed = vec![false; poles.len()];

    let origin_tol = MARGINAL_TOL;
    let mut origin_multiplicity = 0;
    for (i, p) in poles.iter().enumerate() {
        if p.norm() <= origin_tol {
            origin_multiplicity += 1;
            if spec.delta0() {
                claimed[i] = true;
            }
        }
    }
    let has_integrator = !spec.delta0() || origin_multiplicity == 1;

    let mut resonant_pairs = Vec::new();
    for term in spec.terms() {
        let w = term.omega;
        let near = |p: &Complex64, target: f64| is_marginal(*p) && (p.im - target).abs() <= CLUSTER_TOL * w;
        let mut multiplicity = 0;
        for (i, p) in poles.iter().enumerate() {
            if near(p, w) {
                multiplicity += 1;
                claimed[i] = true;
            } else if near(p, -w) {
                claimed[i] = true;
            }
        }
        resonant_pairs.push(ResonanceCheck { omega: w, multiplicity, ok: multiplicity == 1 });
    }
    let resonant_pairs_ok = resonant_pairs.iter().all(|r| r.ok);

    let unstable_poles: Vec<Complex64> = poles
        .iter()
        .zip(&claimed)
        .filter(|(p, &c)| !c && (is_marginal(**p) || p.re >= 0.0))
        .map(|(p, _)| *p)
        .collect();
    let remaining_poles_stable = unstable_poles.is_empty();

    let sweep = FrequencySweep::for_transfer_function(&h, SWEEP_POINTS)?;
    let positive_real = check_positive_real_with(&h, &sweep, exec)?;
    let verdict = has_integrator && resonant_pairs_ok && remaining_poles_stable && positive_real.positive_real;
    Ok(LoopHypothesesReport {
        has_integrator,
        origin_multiplicity,
        resonant_pairs,
        resonant_pairs_ok,
        remaining_poles_stable,
        unstable_poles,
        positive_real,
        verdict,
    })
}

/// Causality padding pole `factor * max w_i` over the imaginary-axis poles of
/// `target`, falling back to the largest pole magnitude.
pub fn padding_pole(target: &RationalTransferFunction, factor: f64) -> Result<f64, PrDesignError> {
    let poles = target.poles()?;
    let resonant = poles.iter().filter(|p| is_marginal(**p)).map(|p| p.im.abs()).fold(0.0, f64::max);
    let base = if resonant > 0.0 {
        resonant
    } else {
        poles.iter().map(|p| p.norm()).fold(1.0, f64::max)
    };
    let p = factor * base;
    if p > 0.0 && p.is_finite() {
        Ok(p)
    } else {
        Err(PrDesignError::ImproperUnfixable(format!("padding pole {p} is not positive")))
    }
}

/// Controller `C = target / plant` padded with `1/(s/p + 1)` factors until proper.
pub fn synthesize_controller(
    target: &RationalTransferFunction,
    plant: &RationalTransferFunction,
    causality_pole_factor: f64,
) -> Result<RationalTransferFunction, PrDesignError> {
    let target = target.reduce()?;
    let plant = plant.reduce()?;
    if plant.numerator().is_zero() {
        return Err(PrDesignError::ImproperUnfixable("plant is identically zero".into()));
    }
    let target_poles = target.poles()?;
    let scale = |p: Complex64| MARGINAL_TOL * p.norm().max(1.0);
    for p in plant.poles()? {
        if p.re >= -scale(p) {
            // the origin pole (or any marginal pole) is kept when the target carries it too
            let shared = target_poles.iter().any(|t| (t - p).norm() <= CLUSTER_TOL * p.norm().max(1.0));
            if !shared {
                return Err(PrDesignError::UnstableCancellation { kind: "pole", location: p });
            }
        }
    }
    for z in plant.zeros()? {
        if z.re >= -scale(z) {
            return Err(PrDesignError::UnstableCancellation { kind: "zero", location: z });
        }
    }

    let raw = target.div(&plant)?;
    let deficit = -raw.relative_degree();
    if deficit <= 0 {
        return Ok(raw);
    }
    let p = padding_pole(&target, causality_pole_factor)?;
    let lag = Polynomial::new(vec![1.0, 1.0 / p]);
    let mut den = raw.denominator().clone();
    for _ in 0..deficit {
        den = &den * &lag;
    }
    Ok(RationalTransferFunction::new(raw.numerator().clone(), den)?.reduce()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::SineTerm;
    use std::f64::consts::PI;

    fn tf(n: &[f64], d: &[f64]) -> RationalTransferFunction {
        RationalTransferFunction::from_coeffs(n, d).unwrap()
    }

    fn scan_loop(w: f64) -> PrComposition {
        PrComposition {
            delta0: true,
            k0: 10.0,
            resonant: vec![ResonantTerm { gain: 10.0, omega: w }],
            first_order: vec![FirstOrderTerm { gain: 10.0, pole: 10.0 }],
            second_order: vec![],
        }
    }

    fn pr(h: &RationalTransferFunction) -> PositiveRealReport {
        let sweep = FrequencySweep::for_transfer_function(h, 2000).unwrap();
        check_positive_real(h, &sweep).unwrap()
    }

    fn axis_reference(w: f64) -> ReferenceSpec {
        ReferenceSpec::new(true, 0.0, vec![SineTerm::cosine(1.0, w)], 2.0 * PI / w).unwrap()
    }

    #[test]
    fn compose_scan_loop() {
        let w = 60.0 * PI;
        let comp = scan_loop(w);
        let h = comp.compose().unwrap();
        assert_eq!(h.den_degree(), 4);
        for omega in log_space(0.1, 1e4, 25) {
            let expect = Complex64::new(0.0, -10.0 / omega)
                + Complex64::new(0.0, 10.0 * omega / (w * w - omega * omega))
                + Complex64::new(10.0, 0.0) / Complex64::new(10.0, omega);
            let got = h.eval_jw(omega).unwrap();
            assert!((got - expect).norm() <= 1e-9 * expect.norm());
        }
    }

    #[test]
    fn compose_integrator_only() {
        let c = PrComposition { delta0: true, k0: 1.0, ..Default::default() };
        assert_eq!(c.compose().unwrap(), tf(&[1.0], &[0.0, 1.0]));
    }

    #[test]
    fn constraint_violations() {
        let mut c = scan_loop(3.0);
        c.resonant[0].gain = -1.0;
        assert!(matches!(c.compose(), Err(PrDesignError::ConstraintViolation { constraint: 1, .. })));
        let mut c = scan_loop(3.0);
        c.first_order[0].pole = 0.0;
        assert!(matches!(c.compose(), Err(PrDesignError::ConstraintViolation { constraint: 2, .. })));
        let mut c = scan_loop(3.0);
        c.second_order.push(SecondOrderTerm { gain: 1.0, zero: 3.0, c: 2.0, d: 1.0 });
        assert!(matches!(c.compose(), Err(PrDesignError::ConstraintViolation { constraint: 3, .. })));
    }

    #[test]
    fn simple_pr_cases() {
        let rep = pr(&tf(&[1.0], &[0.0, 1.0]));
        assert!(rep.positive_real, "{rep:?}");
        assert_eq!(rep.marginal_poles.len(), 1);
        assert!((rep.marginal_poles[0].residue - 1.0).norm() < 1e-12);

        let rep = pr(&tf(&[1.0], &[0.0, 0.0, 1.0]));
        assert!(!rep.positive_real);
        assert_eq!(rep.marginal_poles[0].multiplicity, 2);

        assert!(!pr(&tf(&[1.0], &[2.0, 3.0, 1.0])).positive_real);
        assert!(!pr(&tf(&[-1.0], &[1.0, 1.0])).positive_real);
        assert!(!pr(&tf(&[1.0], &[-1.0, 1.0])).positive_real);
        assert!(!pr(&tf(&[0.0, -1.0], &[4.0, 0.0, 1.0])).positive_real);
        assert!(pr(&tf(&[1.0, 1.0], &[2.0, 1.0])).positive_real);
    }

    #[test]
    fn scan_loop_is_positive_real() {
        let h = scan_loop(60.0 * PI).compose().unwrap();
        let rep = pr(&h);
        assert!(rep.positive_real, "{:?}", rep.failures);
        assert_eq!(rep.marginal_poles.len(), 2);
    }

    #[test]
    fn hypotheses_on_scan_loop() {
        let w = 60.0 * PI;
        let rep = check_loop_hypotheses(&scan_loop(w).compose().unwrap(), &axis_reference(w)).unwrap();
        assert!(rep.has_integrator && rep.resonant_pairs_ok && rep.remaining_poles_stable);
        assert!(rep.verdict, "{rep:?}");
    }

    #[test]
    fn hypothesis_failures() {
        let w = 3.0;
        let rep = check_loop_hypotheses(&tf(&[1.0], &[1.0, 1.0]), &axis_reference(w)).unwrap();
        assert!(!rep.resonant_pairs_ok);
        assert!(!rep.has_integrator);
        assert!(!rep.verdict);

        let mut unstable = scan_loop(w).compose().unwrap();
        unstable = unstable.add(&tf(&[1.0], &[-1.0, 1.0])).unwrap();
        let rep = check_loop_hypotheses(&unstable, &axis_reference(w)).unwrap();
        assert!(rep.resonant_pairs_ok && rep.has_integrator);
        assert!(!rep.remaining_poles_stable);
    }

    #[test]
    fn hypotheses_scale_invariance() {
        let w = 7.0;
        let h = scan_loop(w).compose().unwrap();
        let a = check_loop_hypotheses(&h, &axis_reference(w)).unwrap();
        let b = check_loop_hypotheses(&h.scale(37.5), &axis_reference(w)).unwrap();
        assert_eq!(a.conditions().map(|c| c.1), b.conditions().map(|c| c.1));
    }

    #[test]
    fn synthesize_trivial() {
        let c = synthesize_controller(&tf(&[1.0], &[0.0, 1.0]), &RationalTransferFunction::gain(1.0), 100.0).unwrap();
        assert_eq!(c, tf(&[1.0], &[0.0, 1.0]));
    }

    #[test]
    fn synthesize_scan_controller() {
        let w = 60.0 * PI;
        let target = scan_loop(w).compose().unwrap();
        let plant = tf(&[1.7e7], &[0.0, 10.0, 1.0]);
        let c = synthesize_controller(&target, &plant, 100.0).unwrap();
        assert!(c.is_proper());
        assert_eq!(c.den_degree(), 3);
        // (s^2 + w^2)(s/p + 1) with p = 100 w, after making it monic
        let p = 100.0 * w;
        let den = c.denominator().coeffs();
        let expect = [p * w * w, w * w, p, 1.0];
        for (a, b) in den.iter().zip(expect) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{den:?}");
        }
        let h = c.mul(&plant).unwrap();
        for omega in log_space(1e-2, 0.99 * w, 40) {
            let (got, want) = (h.eval_jw(omega).unwrap(), target.eval_jw(omega).unwrap());
            assert!((got - want).norm() / want.norm() <= 2.0 * omega / p);
        }
    }

    #[test]
    fn synthesize_rejects_unstable_cancellation() {
        let target = tf(&[1.0], &[1.0, 1.0]);
        let rhp_pole = tf(&[1.0], &[-2.0, 1.0]);
        assert!(matches!(
            synthesize_controller(&target, &rhp_pole, 100.0),
            Err(PrDesignError::UnstableCancellation { kind: "pole", .. })
        ));
        let rhp_zero = tf(&[-2.0, 1.0], &[3.0, 1.0]);
        assert!(matches!(
            synthesize_controller(&target, &rhp_zero, 100.0),
            Err(PrDesignError::UnstableCancellation { kind: "zero", .. })
        ));
    }
}

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Polynomial, TfError};

/// Relative distance under which a numerator root and a denominator root are
/// considered common, scaled by `1 + max |root|`.
pub const CANCEL_TOL: f64 = 1e-8;

/// `|den(s)|` below this fraction of its rounding scale counts as a pole hit.
pub const EVAL_TOL: f64 = 1e-13;

/// Sampled frequency response value `H(j omega)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexFrequencyPoint {
    pub omega: f64,
    pub value: Complex64,
}

/// `n` logarithmically spaced points between `lo` and `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Deserialize)]
struct RawTf {
    num: Polynomial,
    den: Polynomial,
}

impl TryFrom<RawTf> for RationalTransferFunction {
    type Error = TfError;
    fn try_from(raw: RawTf) -> Result<Self, TfError> {
        RationalTransferFunction::new(raw.num, raw.den)
    }
}

/// SISO rational transfer function `num(s) / den(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTf")]
pub struct RationalTransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self, TfError> {
        if den.is_zero() {
            return Err(TfError::ZeroDenominator);
        }
        Ok(RationalTransferFunction { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self, TfError> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    pub fn gain(k: f64) -> Self {
        RationalTransferFunction {
            num: Polynomial::constant(k),
            den: Polynomial::one(),
        }
    }

    pub fn zero() -> Self {
        Self::gain(0.0)
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn num_degree(&self) -> Option<usize> {
        self.num.degree()
    }

    pub fn den_degree(&self) -> usize {
        self.den.degree().unwrap_or(0)
    }

    /// `deg den - deg num`; a zero numerator counts as infinitely strictly proper.
    pub fn relative_degree(&self) -> i64 {
        match self.num.degree() {
            Some(n) => self.den_degree() as i64 - n as i64,
            None => i64::MAX,
        }
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree() >= 0
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree() > 0
    }

    pub fn scale(&self, k: f64) -> Self {
        RationalTransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64, TfError> {
        let d = self.den.eval_complex(s);
        if d.norm() <= EVAL_TOL * self.den.eval_scale(s) {
            return Err(TfError::PoleAtFrequency { omega: s.im });
        }
        Ok(self.num.eval_complex(s) / d)
    }

    /// `H(j omega)`.
    pub fn eval_jw(&self, omega: f64) -> Result<Complex64, TfError> {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn frequency_response(&self, omegas: &[f64]) -> Result<Vec<ComplexFrequencyPoint>, TfError> {
        omegas
            .iter()
            .map(|&omega| {
                Ok(ComplexFrequencyPoint {
                    omega,
                    value: self.eval_jw(omega)?,
                })
            })
            .collect()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>, TfError> {
        match self.den.degree() {
            Some(0) => Ok(Vec::new()),
            _ => self.den.roots(),
        }
    }

    pub fn zeros(&self) -> Result<Vec<Complex64>, TfError> {
        match self.num.degree() {
            None | Some(0) => Ok(Vec::new()),
            _ => self.num.roots(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, TfError> {
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        let den = &self.den * &other.den;
        Self::new(num, den)?.reduce()
    }

    pub fn mul(&self, other: &Self) -> Result<Self, TfError> {
        Self::new(&self.num * &other.num, &self.den * &other.den)?.reduce()
    }

    pub fn div(&self, other: &Self) -> Result<Self, TfError> {
        Self::new(&self.num * &other.den, &self.den * &other.num)?.reduce()
    }

    /// Cancels common numerator/denominator roots and makes the denominator monic.
    ///
    /// Roots are matched pairwise, nearest first, when closer than
    /// `CANCEL_TOL * (1 + max |root|)`. The common factor is divided out of
    /// both polynomials, so coprime inputs keep their coefficients apart from
    /// the final normalization.
    pub fn reduce(&self) -> Result<Self, TfError> {
        if self.num.is_zero() {
            return Ok(Self::zero());
        }
        let (mut num, mut den) = (self.num.clone(), self.den.clone());

        // common roots at the origin are exact shifts
        let shift = num.origin_multiplicity().min(den.origin_multiplicity());
        if shift > 0 {
            num = Polynomial::new(num.coeffs()[shift..].to_vec());
            den = Polynomial::new(den.coeffs()[shift..].to_vec());
        }

        // remaining origin roots sit on one side only; keep them out of the
        // division so they stay exact
        let (kn, kd) = (num.origin_multiplicity(), den.origin_multiplicity());
        num = Polynomial::new(num.coeffs()[kn..].to_vec());
        den = Polynomial::new(den.coeffs()[kd..].to_vec());

        let zs = if num.degree().unwrap_or(0) > 0 { num.roots()? } else { Vec::new() };
        let ps = if den.degree().unwrap_or(0) > 0 { den.roots()? } else { Vec::new() };
        if !zs.is_empty() && !ps.is_empty() {
            let scale = zs.iter().chain(&ps).fold(0.0_f64, |m, z| m.max(z.norm()));
            let tol = CANCEL_TOL * (1.0 + scale);
            let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
            for (i, z) in zs.iter().enumerate() {
                for (j, p) in ps.iter().enumerate() {
                    let d = (z - p).norm();
                    if d <= tol {
                        candidates.push((d, i, j));
                    }
                }
            }
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut used_z, mut used_p) = (vec![false; zs.len()], vec![false; ps.len()]);
            let mut common = Vec::new();
            for (_, i, j) in candidates {
                if !used_z[i] && !used_p[j] {
                    used_z[i] = true;
                    used_p[j] = true;
                    common.push((zs[i] + ps[j]) * 0.5);
                }
            }
            if !common.is_empty() {
                let g = Polynomial::from_roots(&common);
                num = num.div_rem(&g)?.0;
                den = den.div_rem(&g)?.0;
            }
        }

        let unshift = |p: Polynomial, k: usize| {
            let mut c = vec![0.0; k];
            c.extend_from_slice(p.coeffs());
            Polynomial::new(c)
        };
        let (num, den) = (unshift(num, kn), unshift(den, kd));
        let lead = den.leading();
        Self::new(num.scale(1.0 / lead), den.scale(1.0 / lead))
    }
}

impl fmt::Display for RationalTransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

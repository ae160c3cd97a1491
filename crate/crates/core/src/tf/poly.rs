//! Real-coefficient polynomials in `s`, stored in ascending powers.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TfError;

/// Backward-error acceptance threshold for computed roots.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-9;

/// Refinement converges only linearly on repeated roots, hence the generous cap.
const ABERTH_SWEEPS: usize = 200;

/// Polynomial with real coefficients, `coeffs[k]` multiplying `s^k`.
///
/// Trailing (highest power) zeros are trimmed on construction, so the zero
/// polynomial is the empty coefficient list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Polynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<f64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// The polynomial `s`.
    pub fn s() -> Self {
        Polynomial::new(vec![0.0, 1.0])
    }

    /// Monic polynomial with the given roots. Complex roots should come in
    /// conjugate pairs; any residual imaginary part of the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Polynomial::new(acc.into_iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `sum |c_k| |z|^k`, the natural scale of rounding error in `eval_complex(z)`.
    pub fn eval_scale(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect::<Vec<_>>(),
        )
    }

    /// Polynomial long division, `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Polynomial) -> Result<(Polynomial, Polynomial), TfError> {
        let dd = divisor.degree().ok_or(TfError::ZeroPolynomial)?;
        let Some(nd) = self.degree() else {
            return Ok((Polynomial::zero(), Polynomial::zero()));
        };
        if nd < dd {
            return Ok((Polynomial::zero(), self.clone()));
        }
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0.0; nd - dd + 1];
        let lead = divisor.leading();
        for k in (0..=nd - dd).rev() {
            let c = rem[k + dd] / lead;
            quot[k] = c;
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[k + j] -= c * d;
            }
            rem[k + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Polynomial::new(quot), Polynomial::new(rem)))
    }

    /// Number of exact zero low-order coefficients, i.e. the multiplicity of
    /// the root at the origin as represented.
    pub fn origin_multiplicity(&self) -> usize {
        self.coeffs.iter().take_while(|&&c| c == 0.0).count()
    }

    /// All complex roots with multiplicity.
    ///
    /// Exact zero low-order coefficients are peeled off as exact roots at the
    /// origin; the remainder goes through a scaled companion-matrix eigenvalue
    /// solve followed by Aberth-Ehrlich refinement of the scaled polynomial.
    pub fn roots(&self) -> Result<Vec<Complex64>, TfError> {
        let degree = self.degree().ok_or(TfError::ZeroPolynomial)?;
        let zeros = self.origin_multiplicity();
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let reduced = Polynomial::new(self.coeffs[zeros..].to_vec());
        let n = degree - zeros;
        if n == 0 {
            return Ok(roots);
        }
        let lead = reduced.leading();
        let monic: Vec<f64> = reduced.coeffs.iter().map(|c| c / lead).collect();

        // s = sigma * u brings the root magnitudes near unity
        let sigma = (0..n)
            .map(|k| monic[k].abs().powf(1.0 / (n - k) as f64))
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let scaled = Polynomial::new((0..=n).map(|k| monic[k] / sigma.powi((n - k) as i32)).collect::<Vec<f64>>());
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for k in 0..n {
            companion[(k, n - 1)] = -scaled.coeffs[k];
        }
        // Francis QR can stall on exactly structured companions (even
        // polynomials); seed from a circle instead
        let seeds: Vec<Complex64> = match companion.try_schur(f64::EPSILON, 10_000) {
            Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
            None => (0..n)
                .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
                .collect(),
        };

        for u in aberth(&scaled, seeds) {
            let z = u * sigma;
            let scale = reduced.eval_scale(z).max(f64::MIN_POSITIVE);
            if !(reduced.eval_complex(z).norm() / scale <= ROOT_RESIDUAL_TOL) {
                return Err(TfError::NoConvergence);
            }
            roots.push(z);
        }
        symmetrize_conjugates(&mut roots[zeros..]);
        Ok(roots)
    }
}

/// Aberth-Ehrlich refinement of all roots at once. Each estimate keeps the
/// iterate with the smallest residual; the mutual repulsion term stops two
/// estimates from collapsing onto one root.
fn aberth(p: &Polynomial, seeds: Vec<Complex64>) -> Vec<Complex64> {
    let n = seeds.len();
    let dp = p.derivative();
    let mut z = seeds;
    let mut best: Vec<(f64, Complex64)> = z.iter().map(|&v| (p.eval_complex(v).norm(), v)).collect();
    for _ in 0..ABERTH_SWEEPS {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let value = p.eval_complex(z[i]);
            if value.norm() == 0.0 {
                continue;
            }
            let ratio = value / dp.eval_complex(z[i]);
            let repel: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repel);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(f64::MIN_POSITIVE));
            let res = p.eval_complex(z[i]).norm();
            if res < best[i].0 {
                best[i] = (res, z[i]);
            }
        }
        if moved <= 4.0 * f64::EPSILON {
            break;
        }
    }
    best.into_iter().map(|(_, v)| v).collect()
}

/// Forces roots of a real polynomial into exact conjugate pairs.
fn symmetrize_conjugates(roots: &mut [Complex64]) {
    let n = roots.len();
    let mut paired = vec![false; n];
    for i in 0..n {
        if paired[i] || roots[i].im <= 0.0 {
            continue;
        }
        let target = roots[i].conj();
        let partner = (0..n)
            .filter(|&j| j != i && !paired[j] && roots[j].im < 0.0)
            .min_by(|&a, &b| {
                (roots[a] - target)
                    .norm()
                    .total_cmp(&(roots[b] - target).norm())
            });
        if let Some(j) = partner {
            let mean = (roots[i] + roots[j].conj()) * 0.5;
            roots[i] = mean;
            roots[j] = mean.conj();
            paired[i] = true;
            paired[j] = true;
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let c: Vec<f64> = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or(0.0) + rhs.coeffs.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        Polynomial::new(c)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            let sign = if c < 0.0 { "-" } else { "+" };
            if first {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*s")?,
                _ => write!(f, "{a}*s^{k}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(&p(&[0.0, 1.0]) * &p(&[1.0, 0.0, 1.0]), p(&[0.0, 1.0, 0.0, 1.0]));
        let a = p(&[3.0, -1.0, 2.0]);
        assert_eq!(&a * &Polynomial::one(), a);
        assert_eq!(&p(&[2.0, 1.0]) * &p(&[3.0, 1.0]), p(&[6.0, 5.0, 1.0]));
        assert!((&a * &Polynomial::zero()).is_zero());
    }

    #[test]
    fn trims_and_degree() {
        assert_eq!(p(&[1.0, 2.0, 0.0, 0.0]).degree(), Some(1));
        assert_eq!(p(&[0.0]).degree(), None);
        assert!(p(&[]).is_zero());
    }

    #[test]
    fn division_recovers_factors() {
        let a = p(&[6.0, 5.0, 1.0]);
        let (q, r) = a.div_rem(&p(&[2.0, 1.0])).unwrap();
        assert_eq!(q, p(&[3.0, 1.0]));
        assert!(r.is_zero());
        let (q, r) = p(&[1.0, 0.0, 1.0]).div_rem(&p(&[1.0, 1.0])).unwrap();
        assert_eq!(q, p(&[-1.0, 1.0]));
        assert_eq!(r, p(&[2.0]));
    }

    #[test]
    fn roots_of_resonant_factor() {
        let w = 60.0 * std::f64::consts::PI;
        let mut r = p(&[w * w, 0.0, 1.0]).roots().unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert_relative_eq!(r[0].re, 0.0, epsilon = 1e-9);
        assert_relative_eq!(r[0].im, -w, max_relative = 1e-12);
        assert_relative_eq!(r[1].im, w, max_relative = 1e-12);
        assert_eq!(r[0], r[1].conj());
    }

    #[test]
    fn roots_of_even_quartic() {
        // (s^2 + 17^2)(s^2 + 164^2): Schur stalls on this companion
        let q = &p(&[289.0, 0.0, 1.0]) * &p(&[164.0 * 164.0, 0.0, 1.0]);
        let q = q.scale(52.8);
        let mut r = q.roots().unwrap();
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        for (z, want) in r.iter().zip([-164.0, -17.0, 17.0, 164.0]) {
            assert!(z.re.abs() < 1e-9 && (z.im - want).abs() < 1e-9 * want.abs(), "{z}");
        }
    }

    #[test]
    fn roots_of_real_quadratic() {
        let mut r = p(&[6.0, 5.0, 1.0]).roots().unwrap();
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_relative_eq!(r[0].re, -3.0, max_relative = 1e-12);
        assert_relative_eq!(r[1].re, -2.0, max_relative = 1e-12);
        assert!(r.iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn origin_roots_are_exact() {
        let r = p(&[0.0, 0.0, 4.0, 1.0]).roots().unwrap();
        assert_eq!(r.iter().filter(|z| **z == Complex64::new(0.0, 0.0)).count(), 2);
    }

    #[test]
    fn zero_polynomial_has_no_roots() {
        assert!(matches!(Polynomial::zero().roots(), Err(TfError::ZeroPolynomial)));
    }

    #[test]
    fn random_degree_six_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let c: Vec<f64> = (0..7).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let poly = p(&c);
            let roots = poly.roots().unwrap();
            assert_eq!(roots.len(), 6);
            for z in roots {
                let res = poly.eval_complex(z).norm();
                assert!(res <= 1e-9 * poly.eval_scale(z), "residual {res} at {z}");
            }
        }
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(p(&[6.0, -5.0, 1.0]).to_string(), "1*s^2 - 5*s + 6");
    }
}

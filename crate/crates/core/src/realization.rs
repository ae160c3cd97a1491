//! State-space realizations of proper transfer functions and fixed-step
//! Runge-Kutta integration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::tf::{RationalTransferFunction, TfError};

/// Single-input single-output model `x' = A x + B u`, `y = C x + D u`.
///
/// `a` is stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceModel {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        StateVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl StateSpaceModel {
    pub fn new(n: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Self {
        assert_eq!(a.len(), n * n, "A must be n x n");
        assert_eq!(b.len(), n, "B must be n x 1");
        assert_eq!(c.len(), n, "C must be 1 x n");
        StateSpaceModel { n, a, b, c, d }
    }

    /// Static gain, no states.
    pub fn gain(d: f64) -> Self {
        Self::new(0, Vec::new(), Vec::new(), Vec::new(), d)
    }

    /// Controllable canonical form of `h` after reduction.
    pub fn realize(h: &RationalTransferFunction) -> Result<Self, TfError> {
        let h = h.reduce()?;
        if !h.is_proper() {
            return Err(TfError::ImproperTransferFunction {
                num_degree: h.num_degree().unwrap_or(0),
                den_degree: h.den_degree(),
            });
        }
        let den = h.denominator().coeffs();
        let n = h.den_degree();
        let mut num = h.numerator().coeffs().to_vec();
        num.resize(n + 1, 0.0);

        // den is monic after reduce; peel off the feedthrough term
        let d = num[n];
        let c: Vec<f64> = (0..n).map(|k| num[k] - d * den[k]).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n.saturating_sub(1) {
            a[i * n + i + 1] = 1.0;
        }
        for k in 0..n {
            a[(n - 1) * n + k] = -den[k];
        }
        let mut b = vec![0.0; n];
        if n > 0 {
            b[n - 1] = 1.0;
        }
        Ok(Self::new(n, a, b, c, d))
    }

    /// Cascade `first` then `second`: the output of `first` drives `second`.
    /// State ordering is `[x_first, x_second]`.
    pub fn series(first: &Self, second: &Self) -> Self {
        let (n1, n2) = (first.n, second.n);
        let n = n1 + n2;
        let mut a = vec![0.0; n * n];
        for i in 0..n1 {
            for j in 0..n1 {
                a[i * n + j] = first.a[i * n1 + j];
            }
        }
        for i in 0..n2 {
            for j in 0..n1 {
                a[(n1 + i) * n + j] = second.b[i] * first.c[j];
            }
            for j in 0..n2 {
                a[(n1 + i) * n + n1 + j] = second.a[i * n2 + j];
            }
        }
        let mut b = first.b.clone();
        b.extend(second.b.iter().map(|bi| bi * first.d));
        let mut c: Vec<f64> = first.c.iter().map(|cj| second.d * cj).collect();
        c.extend_from_slice(&second.c);
        Self::new(n, a, b, c, first.d * second.d)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Writes `A x + B u` into `out`.
    pub fn derivative(&self, x: &[f64], u: f64, out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            out[i] = row.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * u;
        }
    }

    /// `C x + D u`.
    pub fn output(&self, x: &StateVector, u: f64) -> f64 {
        self.output_slice(&x.0, u)
    }

    pub fn output_slice(&self, x: &[f64], u: f64) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum::<f64>() + self.d * u
    }

    /// One classical RK4 step of length `dt` from time `t`, with the input
    /// evaluated through `u` at the stage times.
    pub fn rk4_step<F: Fn(f64) -> f64>(&self, x: &StateVector, u: F, t: f64, dt: f64) -> StateVector {
        let mut next = x.0.clone();
        let mut scratch = Rk4Scratch::new(self.n);
        self.rk4_step_in_place(&mut next, &u, t, dt, &mut scratch);
        StateVector(next)
    }

    pub(crate) fn rk4_step_in_place<F: Fn(f64) -> f64>(
        &self,
        x: &mut [f64],
        u: &F,
        t: f64,
        dt: f64,
        s: &mut Rk4Scratch,
    ) {
        let n = self.n;
        let half = 0.5 * dt;
        self.derivative(x, u(t), &mut s.k1);
        for i in 0..n {
            s.tmp[i] = x[i] + half * s.k1[i];
        }
        self.derivative(&s.tmp, u(t + half), &mut s.k2);
        for i in 0..n {
            s.tmp[i] = x[i] + half * s.k2[i];
        }
        self.derivative(&s.tmp, u(t + half), &mut s.k3);
        for i in 0..n {
            s.tmp[i] = x[i] + dt * s.k3[i];
        }
        self.derivative(&s.tmp, u(t + dt), &mut s.k4);
        for i in 0..n {
            x[i] += dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
        }
    }

    /// `C (j omega I - A)^-1 B + D`.
    pub fn eval_jw(&self, omega: f64) -> Option<Complex64> {
        let n = self.n;
        if n == 0 {
            return Some(Complex64::new(self.d, 0.0));
        }
        let jw = Complex64::new(0.0, omega);
        let m = DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { jw } else { Complex64::new(0.0, 0.0) };
            diag - self.a[i * n + j]
        });
        let rhs = DVector::from_iterator(n, self.b.iter().map(|&b| Complex64::new(b, 0.0)));
        let x = m.lu().solve(&rhs)?;
        Some(self.c.iter().zip(x.iter()).map(|(c, x)| x * *c).sum::<Complex64>() + self.d)
    }
}

pub(crate) struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Rk4Scratch {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tf::log_space;
    use approx::assert_relative_eq;

    fn tf(n: &[f64], d: &[f64]) -> RationalTransferFunction {
        RationalTransferFunction::from_coeffs(n, d).unwrap()
    }

    #[test]
    fn first_order_lag() {
        let m = StateSpaceModel::realize(&tf(&[1.0], &[1.0, 1.0])).unwrap();
        assert_eq!(m.order(), 1);
        assert_eq!(m.a()[(0, 0)], -1.0);
        assert_eq!(m.b(), &[1.0]);
        assert_eq!(m.c(), &[1.0]);
        assert_eq!(m.d(), 0.0);
    }

    #[test]
    fn biproper_feedthrough() {
        let m = StateSpaceModel::realize(&tf(&[2.0, 1.0], &[1.0, 1.0])).unwrap();
        assert_eq!(m.d(), 1.0);
        assert_eq!(m.c(), &[1.0]);
        assert_eq!(m.a()[(0, 0)], -1.0);
    }

    #[test]
    fn improper_rejected() {
        let err = StateSpaceModel::realize(&tf(&[0.0, 0.0, 1.0], &[1.0, 1.0])).unwrap_err();
        assert!(matches!(err, TfError::ImproperTransferFunction { num_degree: 2, den_degree: 1 }));
    }

    #[test]
    fn frequency_response_matches_rational() {
        let h = tf(&[3.0, 0.5, 2.0], &[4.0, 3.0, 2.0, 1.0]);
        let m = StateSpaceModel::realize(&h).unwrap();
        for w in log_space(1e-2, 1e3, 20) {
            let a = m.eval_jw(w).unwrap();
            let b = h.eval_jw(w).unwrap();
            assert!((a - b).norm() <= 1e-8 * b.norm());
        }
    }

    #[test]
    fn integrator_accumulates_constant_input() {
        let m = StateSpaceModel::realize(&tf(&[1.0], &[0.0, 1.0])).unwrap();
        let x = m.rk4_step(&StateVector::zeros(1), |_| 1.0, 0.0, 0.1);
        assert_relative_eq!(x.0[0], 0.1, max_relative = 1e-15);
    }

    fn decay_error(steps: usize) -> f64 {
        let m = StateSpaceModel::new(1, vec![-1.0], vec![0.0], vec![1.0], 0.0);
        let dt = 1.0 / steps as f64;
        let mut x = StateVector(vec![1.0]);
        for k in 0..steps {
            x = m.rk4_step(&x, |_| 0.0, k as f64 * dt, dt);
        }
        (x.0[0] - (-1.0_f64).exp()).abs()
    }

    #[test]
    fn exponential_decay_is_fourth_order() {
        assert!(decay_error(10) < 1e-6);
        let ratio = decay_error(10) / decay_error(20);
        assert!((14.0..18.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn resonator_free_response() {
        // s / (s^2 + w^2) from x0 = [1, 0]: x1 = cos(wt), y = x2 = -w sin(wt)
        let w = 5.0;
        let m = StateSpaceModel::realize(&tf(&[0.0, 1.0], &[w * w, 0.0, 1.0])).unwrap();
        let period = 2.0 * std::f64::consts::PI / w;
        let steps = 2000;
        let dt = period / steps as f64;
        let mut x = StateVector(vec![1.0, 0.0]);
        for k in 0..steps {
            x = m.rk4_step(&x, |_| 0.0, k as f64 * dt, dt);
        }
        let energy = w * w * x.0[0].powi(2) + x.0[1].powi(2);
        assert_relative_eq!(energy, w * w, max_relative = 1e-9);
        assert_relative_eq!(x.0[0], 1.0, max_relative = 1e-9);
        assert!(m.output(&x, 0.0).abs() < 1e-7);
    }

    #[test]
    fn output_feedthrough() {
        let m = StateSpaceModel::realize(&tf(&[1.0], &[1.0, 1.0])).unwrap();
        assert_eq!(m.output(&StateVector::zeros(1), 0.0), 0.0);
        let x = StateVector(vec![0.7]);
        assert_eq!(m.output(&x, 3.0), m.output(&x, -9.0));
    }

    #[test]
    fn series_matches_product() {
        let g1 = tf(&[2.0, 1.0], &[3.0, 1.0]);
        let g2 = tf(&[5.0], &[1.0, 0.4, 1.0]);
        let s = StateSpaceModel::series(
            &StateSpaceModel::realize(&g1).unwrap(),
            &StateSpaceModel::realize(&g2).unwrap(),
        );
        for w in log_space(1e-2, 1e2, 15) {
            let expect = g1.eval_jw(w).unwrap() * g2.eval_jw(w).unwrap();
            assert!((s.eval_jw(w).unwrap() - expect).norm() <= 1e-10 * expect.norm());
        }
    }
}

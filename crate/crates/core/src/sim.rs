//! Fixed-step closed-loop simulation with quantized feedback.
//!
//! Per axis the loop is `controller -> plant`, with the controller driven by
//! `e_tilde = q(r) - q(y)` (artificial quantization of the reference). The
//! controller and plant states are advanced together by RK4 with `e_tilde`
//! piecewise constant. By default a step that crosses a quantization boundary
//! is split at the crossing, located by bisection on the RK4 solution;
//! [`SwitchTiming::StepStart`] instead holds the step-start value for the
//! whole step.

use std::io::{self, Write};

use thiserror::Error;

use crate::exec::{self, Execution};
use crate::quantization::UniformQuantizer;
use crate::realization::{Rk4Scratch, StateSpaceModel, StateVector};
use crate::reference::ReferenceSpec;

pub const DEFAULT_DT: f64 = 1e-5;
pub const DEFAULT_RECORD_STRIDE: usize = 10;
/// `|y|` beyond this multiple of the reference magnitude aborts the run.
pub const DIVERGENCE_FACTOR: f64 = 1e9;

pub const CSV_UNITS: &str = "# units: t [s]; r, y, qr, qy, e, e_tilde [um]; u [actuator]";
pub const CSV_HEADER: &str = "t,r,y,qr,qy,e,e_tilde,u";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid loop configuration: {0}")]
    InvalidConfig(String),
    #[error("closed loop diverged at t = {t} s (|y| = {y:e})")]
    NumericalDivergence { t: f64, y: f64 },
    #[error("{axis}-axis: {source}")]
    Axis {
        axis: char,
        #[source]
        source: Box<SimError>,
    },
}

/// Which signal feeds the controller.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LoopArchitecture {
    /// `e_tilde = q(r) - q(y)`.
    #[default]
    ArtificialQuantization,
    /// `e_tilde = r - q(y)`: only the measurement is quantized.
    QuantizedOutputOnly,
}

/// When `e_tilde` is allowed to change.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SwitchTiming {
    /// Split steps at located boundary crossings.
    #[default]
    Located,
    /// Evaluate once per step and hold.
    StepStart,
}

/// Bisection stops once the bracket is below this fraction of `dt`.
pub const CROSSING_TOL: f64 = 1e-9;
/// Crossings handled inside one step before the remainder is held.
pub const MAX_CROSSINGS_PER_STEP: usize = 16;

/// Scheduled change of the reference offset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffsetStep {
    pub t: f64,
    pub center: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    pub controller: StateSpaceModel,
    pub plant: StateSpaceModel,
    pub quantizer: UniformQuantizer,
    pub reference: ReferenceSpec,
    pub dt: f64,
    pub t_end: f64,
    pub x0_controller: StateVector,
    pub x0_plant: StateVector,
    pub record_stride: usize,
    pub architecture: LoopArchitecture,
    pub switching: SwitchTiming,
    pub offset_steps: Vec<OffsetStep>,
}

impl LoopConfig {
    /// Zero initial state, default stride and the artificial-quantization loop.
    pub fn new(
        controller: StateSpaceModel,
        plant: StateSpaceModel,
        quantizer: UniformQuantizer,
        reference: ReferenceSpec,
        dt: f64,
        t_end: f64,
    ) -> Self {
        let (nc, np) = (controller.order(), plant.order());
        LoopConfig {
            controller,
            plant,
            quantizer,
            reference,
            dt,
            t_end,
            x0_controller: StateVector::zeros(nc),
            x0_plant: StateVector::zeros(np),
            record_stride: DEFAULT_RECORD_STRIDE,
            architecture: LoopArchitecture::default(),
            switching: SwitchTiming::default(),
            offset_steps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be at least 1");
        }
        if self.plant.d() != 0.0 {
            return bad("plant must be strictly proper (no direct feedthrough)");
        }
        if self.x0_controller.len() != self.controller.order() || self.x0_plant.len() != self.plant.order() {
            return bad("initial state length does not match model order");
        }
        Ok(())
    }

    /// Same loop with the reference offset switching to `new_center` at
    /// `t_step`. States carry over the switch unchanged.
    pub fn apply_step_change(&self, t_step: f64, new_center: f64) -> Result<Self, SimError> {
        if !(t_step > 0.0) {
            return Err(SimError::InvalidConfig("step time must be positive".into()));
        }
        let mut cfg = self.clone();
        if !cfg.reference.delta0() {
            cfg.reference = cfg.reference.with_offset(0.0);
        }
        cfg.offset_steps.push(OffsetStep { t: t_step, center: new_center });
        cfg.offset_steps.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(cfg)
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Reference offset in effect at `t`.
    pub fn offset_at(&self, t: f64) -> f64 {
        self.offset_steps
            .iter()
            .rev()
            .find(|s| t >= s.t)
            .map_or(self.reference.offset(), |s| s.center)
    }

    pub fn reference_at(&self, t: f64) -> f64 {
        self.reference.eval(t) - self.reference.offset() + self.offset_at(t)
    }

    fn divergence_bound(&self) -> f64 {
        let swing = self.reference.magnitude_bound() - self.reference.offset().abs();
        let centers = self.offset_steps.iter().map(|s| s.center.abs()).fold(self.reference.offset().abs(), f64::max);
        let m = swing + centers;
        DIVERGENCE_FACTOR * if m > 0.0 { m } else { 1.0 }
    }
}

/// Recorded loop signals, one entry per record.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub y: Vec<f64>,
    pub qr: Vec<f64>,
    pub qy: Vec<f64>,
    pub e: Vec<f64>,
    pub e_tilde: Vec<f64>,
    pub u: Vec<f64>,
}

impl SimTrace {
    fn with_capacity(n: usize) -> Self {
        SimTrace {
            t: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            qr: Vec::with_capacity(n),
            qy: Vec::with_capacity(n),
            e: Vec::with_capacity(n),
            e_tilde: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the first record at or after `t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let i = self.t.partition_point(|&x| x < t - 1e-12);
        (i < self.len()).then_some(i)
    }

    /// Last recorded time at which `e_tilde` was nonzero, if any.
    pub fn last_nonzero_e_tilde(&self) -> Option<f64> {
        self.e_tilde.iter().rposition(|&v| v != 0.0).map(|i| self.t[i])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_UNITS}")?;
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.t[i], self.r[i], self.y[i], self.qr[i], self.qy[i], self.e[i], self.e_tilde[i], self.u[i]
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DualAxisTrace {
    pub x_axis: SimTrace,
    pub y_axis: SimTrace,
    /// `sqrt(e_x^2 + e_y^2)` per record.
    pub euclidean_error: Vec<f64>,
}

impl DualAxisTrace {
    pub fn error_at(&self, t: f64) -> Option<f64> {
        self.x_axis.index_at(t).map(|i| self.euclidean_error[i])
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# units: t [s]; ex, ey, enorm [um]")?;
        writeln!(w, "t,ex,ey,enorm")?;
        for i in 0..self.euclidean_error.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.x_axis.t[i], self.x_axis.e[i], self.y_axis.e[i], self.euclidean_error[i]
            )?;
        }
        Ok(())
    }
}

struct Stepper<'a> {
    cfg: &'a LoopConfig,
    cascade: StateSpaceModel,
    nc: usize,
    scratch: Rk4Scratch,
    trial: Vec<f64>,
}

impl Stepper<'_> {
    fn output(&self, x: &[f64]) -> f64 {
        self.cfg.plant.output_slice(&x[self.nc..], 0.0)
    }

    fn regions(&self, t: f64, x: &[f64]) -> (i64, i64) {
        let q = &self.cfg.quantizer;
        (q.region_index(self.cfg.reference_at(t)), q.region_index(self.output(x)))
    }

    fn e_tilde(&self, t: f64, x: &[f64]) -> f64 {
        let q = &self.cfg.quantizer;
        let qy = q.quantize(self.output(x));
        match self.cfg.architecture {
            LoopArchitecture::ArtificialQuantization => q.quantize(self.cfg.reference_at(t)) - qy,
            LoopArchitecture::QuantizedOutputOnly => self.cfg.reference_at(t) - qy,
        }
    }

    /// `trial <- RK4(x, e_tilde)` over `[t, t + h]`.
    fn trial_step(&mut self, x: &[f64], e_tilde: f64, t: f64, h: f64) {
        self.trial.copy_from_slice(x);
        self.cascade.rk4_step_in_place(&mut self.trial, &|_| e_tilde, t, h, &mut self.scratch);
    }

    fn advance(&mut self, x: &mut [f64], t0: f64, e_start: f64) {
        let dt = self.cfg.dt;
        if self.cfg.switching == SwitchTiming::StepStart {
            self.trial_step(x, e_start, t0, dt);
            x.copy_from_slice(&self.trial);
            return;
        }
        let t1 = t0 + dt;
        let mut t = t0;
        let mut e_tilde = e_start;
        for crossings in 0.. {
            let h = t1 - t;
            let start = self.regions(t, x);
            self.trial_step(x, e_tilde, t, h);
            if crossings == MAX_CROSSINGS_PER_STEP || self.regions(t1, &self.trial) == start {
                x.copy_from_slice(&self.trial);
                return;
            }
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > CROSSING_TOL * dt {
                let mid = 0.5 * (lo + hi);
                self.trial_step(x, e_tilde, t, mid);
                if self.regions(t + mid, &self.trial) == start {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            self.trial_step(x, e_tilde, t, hi);
            x.copy_from_slice(&self.trial);
            if hi >= h {
                return;
            }
            t += hi;
            e_tilde = self.e_tilde(t, x);
        }
    }
}

/// Runs one axis from `t = 0` to `t_end`.
pub fn simulate_axis(cfg: &LoopConfig) -> Result<SimTrace, SimError> {
    cfg.validate()?;
    let cascade = StateSpaceModel::series(&cfg.controller, &cfg.plant);
    let nc = cfg.controller.order();
    let mut x: Vec<f64> = cfg.x0_controller.0.iter().chain(&cfg.x0_plant.0).copied().collect();
    let n = x.len();
    let mut stepper = Stepper { cfg, cascade, nc, scratch: Rk4Scratch::new(n), trial: vec![0.0; n] };
    let q = &cfg.quantizer;
    let steps = cfg.steps();
    let bound = cfg.divergence_bound();
    let mut trace = SimTrace::with_capacity(steps / cfg.record_stride + 1);

    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let r = cfg.reference_at(t);
        let y = stepper.output(&x);
        if !(y.abs() <= bound) {
            return Err(SimError::NumericalDivergence { t, y: y.abs() });
        }
        let (qr, qy) = (q.quantize(r), q.quantize(y));
        let e_tilde = match cfg.architecture {
            LoopArchitecture::ArtificialQuantization => qr - qy,
            LoopArchitecture::QuantizedOutputOnly => r - qy,
        };
        if k % cfg.record_stride == 0 {
            let u = cfg.controller.output_slice(&x[..nc], e_tilde);
            trace.t.push(t);
            trace.r.push(r);
            trace.y.push(y);
            trace.qr.push(qr);
            trace.qy.push(qy);
            trace.e.push(r - y);
            trace.e_tilde.push(e_tilde);
            trace.u.push(u);
        }
        if k < steps {
            stepper.advance(&mut x, t, e_tilde);
        }
    }
    Ok(trace)
}

/// Two decoupled axes on a shared time grid.
pub fn simulate_dual(cfg_x: &LoopConfig, cfg_y: &LoopConfig) -> Result<DualAxisTrace, SimError> {
    simulate_dual_with(cfg_x, cfg_y, Execution::default())
}

pub fn simulate_dual_with(cfg_x: &LoopConfig, cfg_y: &LoopConfig, exec: Execution) -> Result<DualAxisTrace, SimError> {
    if cfg_x.dt != cfg_y.dt || cfg_x.t_end != cfg_y.t_end || cfg_x.record_stride != cfg_y.record_stride {
        return Err(SimError::InvalidConfig("axes must share dt, t_end and record_stride".into()));
    }
    let tag = |axis: char| move |e: SimError| SimError::Axis { axis, source: Box::new(e) };
    let (tx, ty) = exec::join(exec, || simulate_axis(cfg_x), || simulate_axis(cfg_y));
    let (x_axis, y_axis) = (tx.map_err(tag('x'))?, ty.map_err(tag('y'))?);
    let euclidean_error = x_axis.e.iter().zip(&y_axis.e).map(|(a, b)| a.hypot(*b)).collect();
    Ok(DualAxisTrace { x_axis, y_axis, euclidean_error })
}

/// Independent runs, e.g. parameter or step-size sweeps.
pub fn simulate_batch(cfgs: &[LoopConfig], exec: Execution) -> Vec<Result<SimTrace, SimError>> {
    exec::map(exec, cfgs, simulate_axis)
}

mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qtrack_core::quantization::UniformQuantizer;
use qtrack_core::realization::{StateSpaceModel, StateVector};
use qtrack_core::reference::{ReferenceSpec, SineTerm};
use qtrack_core::sim::{simulate_axis, simulate_dual, LoopConfig, SwitchTiming};
use qtrack_core::tf::RationalTransferFunction;

fn sine(a0: f64, amp: f64, w: f64) -> ReferenceSpec {
    ReferenceSpec::new(a0 != 0.0, a0, vec![SineTerm::new(amp, w, 0.0)], 2.0 * PI / w).unwrap()
}

/// `k` in series with `1 / (s (s + 1))`.
fn gain_loop(k: f64, delta: f64, reference: ReferenceSpec, dt: f64, t_end: f64) -> LoopConfig {
    let g = RationalTransferFunction::from_coeffs(&[1.0], &[0.0, 1.0, 1.0]).unwrap();
    LoopConfig::new(
        StateSpaceModel::gain(k),
        StateSpaceModel::realize(&g).unwrap(),
        UniformQuantizer::new(delta).unwrap(),
        reference,
        dt,
        t_end,
    )
}

#[test]
fn vanishing_interval_matches_unquantized_loop() {
    let (k, dt, t_end) = (4.0, 1e-3, 5.0);
    let reference = sine(0.0, 1.0, 2.0);
    let mut cfg = gain_loop(k, 1e-12, reference.clone(), dt, t_end);
    cfg.switching = SwitchTiming::StepStart;
    cfg.record_stride = 1;
    let trace = simulate_axis(&cfg).unwrap();

    // hand-written loop: y'' = -y' + k (r - y) with e held over each step
    let f = |x: [f64; 2], u: f64| [x[1], -x[1] + u];
    let mut x = [0.0f64; 2];
    let mut worst: f64 = 0.0;
    for (i, &t) in trace.t.iter().enumerate() {
        assert_eq!(t, i as f64 * dt);
        worst = worst.max((trace.y[i] - x[0]).abs() / x[0].abs().max(1e-3));
        let u = k * (reference.eval(t) - x[0]);
        let k1 = f(x, u);
        let k2 = f([x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]], u);
        let k3 = f([x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]], u);
        let k4 = f([x[0] + dt * k3[0], x[1] + dt * k3[1]], u);
        for j in 0..2 {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn lattice_step_shifts_quantized_reference() {
    let delta = 0.25;
    let cfg = gain_loop(3.0, delta, sine(0.0, 1.3, 7.0), 1e-3, 2.0);
    let base = simulate_axis(&cfg).unwrap();
    let stepped = simulate_axis(&cfg.apply_step_change(1.0, 4.0 * delta).unwrap()).unwrap();
    for i in 0..base.len() {
        if base.t[i] < 1.0 {
            assert_eq!(base.qr[i], stepped.qr[i]);
        } else {
            assert_eq!(stepped.qr[i], base.qr[i] + 4.0 * delta);
        }
    }
}

#[test]
fn located_switching_is_step_size_insensitive() {
    let run = |dt: f64| {
        let cfg = gain_loop(6.0, 0.2, sine(0.0, 1.0, 3.0), dt, 4.0);
        let tr = simulate_axis(&cfg).unwrap();
        *tr.e.last().unwrap()
    };
    let (a, b) = (run(1e-3), run(5e-4));
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

/// With `e_tilde` identically zero the controller runs open loop, so `u`
/// lies in the span of the controller's own modes.
#[test]
fn equilibrium_control_is_modal() {
    let w = 60.0 * PI;
    let c = common::controller(w);
    let mut cfg = LoopConfig::new(
        StateSpaceModel::realize(&c).unwrap(),
        StateSpaceModel::realize(&common::plant()).unwrap(),
        UniformQuantizer::new(1.0).unwrap(),
        ReferenceSpec::new(true, 0.1, vec![SineTerm::new(1e-3, w, 0.0)], 2.0 * PI / w).unwrap(),
        1e-6,
        0.02,
    );
    cfg.record_stride = 1;
    cfg.x0_controller = StateVector(vec![3e-10, -2e-11, 5e-14]);
    let tr = simulate_axis(&cfg).unwrap();
    assert!(tr.e_tilde.iter().all(|&v| v == 0.0));
    assert!(tr.y.iter().all(|y| y.abs() < 0.4));

    let poles = c.poles().unwrap();
    let mut columns: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    for p in poles.iter().filter(|p| p.im >= 0.0) {
        let (re, im) = (p.re, p.im);
        columns.push(Box::new(move |t| (re * t).exp() * (im * t).cos()));
        if im > 0.0 {
            columns.push(Box::new(move |t| (re * t).exp() * (im * t).sin()));
        }
    }
    let m = DMatrix::from_fn(tr.len(), columns.len(), |i, j| columns[j](tr.t[i]));
    let u = DVector::from_column_slice(&tr.u);
    let coef = m.clone().svd(true, true).solve(&u, 1e-14).unwrap();
    let residual = (&m * coef - &u).norm() / u.norm();
    assert!(residual < 1e-6, "{residual}");
}

#[test]
fn dual_axis_equals_solo_runs() {
    let cx = gain_loop(5.0, 0.5, sine(0.0, 1.0, 4.0), 1e-3, 1.5);
    let cy = gain_loop(2.0, 0.5, sine(0.2, 0.8, 3.0), 1e-3, 1.5);
    let dual = simulate_dual(&cx, &cy).unwrap();
    assert_eq!(dual.x_axis, simulate_axis(&cx).unwrap());
    assert_eq!(dual.y_axis, simulate_axis(&cy).unwrap());
    assert_eq!(dual.x_axis.t, dual.y_axis.t);
    for i in 0..dual.euclidean_error.len() {
        assert_eq!(dual.euclidean_error[i], dual.x_axis.e[i].hypot(dual.y_axis.e[i]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_invariants(
        k in 0.5f64..20.0,
        delta in 0.05f64..2.0,
        amp in 0.1f64..3.0,
        w in 0.5f64..20.0,
        a0 in -2.0f64..2.0,
        located in any::<bool>(),
    ) {
        let mut cfg = gain_loop(k, delta, sine(a0, amp, w), 1e-3, 1.0);
        if !located {
            cfg.switching = SwitchTiming::StepStart;
        }
        let tr = simulate_axis(&cfg).unwrap();
        for i in 0..tr.len() {
            prop_assert!(tr.e[i] * tr.e_tilde[i] >= 0.0);
            prop_assert!((tr.qr[i] - tr.r[i]).abs() <= delta / 2.0 * (1.0 + 1e-12));
            prop_assert!((tr.qy[i] - tr.y[i]).abs() <= delta / 2.0 * (1.0 + 1e-12));
            prop_assert_eq!(tr.e_tilde[i], tr.qr[i] - tr.qy[i]);
            let j = (tr.qr[i] / delta).round();
            prop_assert_eq!(tr.qr[i], j * delta);
        }
    }
}

#![allow(dead_code)]

use qtrack_core::pr_design::{synthesize_controller, FirstOrderTerm, PrComposition, ResonantTerm};
use qtrack_core::tf::RationalTransferFunction;

pub const A: f64 = 10.0;
pub const B: f64 = 1.7e7;

pub fn plant() -> RationalTransferFunction {
    RationalTransferFunction::from_coeffs(&[B], &[0.0, A, 1.0]).unwrap()
}

/// `10/s + 10 s/(s^2 + w^2) + 10/(s + 10)`
pub fn loop_target(omega: f64) -> RationalTransferFunction {
    PrComposition {
        delta0: true,
        k0: 10.0,
        resonant: vec![ResonantTerm { gain: 10.0, omega }],
        first_order: vec![FirstOrderTerm { gain: 10.0, pole: A }],
        second_order: vec![],
    }
    .compose()
    .unwrap()
}

pub fn controller(omega: f64) -> RationalTransferFunction {
    synthesize_controller(&loop_target(omega), &plant(), 100.0).unwrap()
}

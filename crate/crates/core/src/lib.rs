//! Tracking of periodic references through a uniformly quantized output.
//!
//! The feedback loop quantizes both the reference and the measured output,
//! `e_tilde = q(r) - q(y)`, so the controller input can be identically zero
//! once `y = r`. The crate provides the pieces needed to design and check
//! such loops and to simulate them:
//!
//! * [`tf`]: polynomial and rational transfer-function algebra.
//! * [`realization`]: controllable-canonical state space models and RK4.
//! * [`quantization`]: the uniform mid-tread quantizer.
//! * [`reference`]: multi-sine references, level crossings and the rank test
//!   deciding whether a reference is recoverable from its quantized image.
//! * [`pr_design`]: positive-real loop shapes with internal models, loop
//!   hypothesis checks and controller synthesis.
//! * [`sim`]: fixed-step closed-loop simulation of one or two axes.
//! * [`lissajous`]: Lissajous scan planning.
//! * [`exec`]: parallel/sequential execution switch for batch work.

pub mod exec;
pub mod lissajous;
pub mod pr_design;
pub mod quantization;
pub mod realization;
pub mod reference;
pub mod sim;
pub mod tf;

pub use num_complex::Complex64;

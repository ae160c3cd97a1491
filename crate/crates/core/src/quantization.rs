//! Uniform mid-tread quantizer.
//!
//! `q(z) = j * delta` for every `z` in the half-open region
//! `[(j - 0.5) delta, (j + 0.5) delta)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizerError {
    #[error("quantization interval must be positive and finite, got {0}")]
    InvalidInterval(f64),
    #[error("regions {0} and {1} are not adjacent")]
    NonAdjacentRegions(i64, i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UniformQuantizer {
    delta: f64,
}

impl TryFrom<f64> for UniformQuantizer {
    type Error = QuantizerError;
    fn try_from(delta: f64) -> Result<Self, QuantizerError> {
        UniformQuantizer::new(delta)
    }
}

impl From<UniformQuantizer> for f64 {
    fn from(q: UniformQuantizer) -> f64 {
        q.delta
    }
}

impl UniformQuantizer {
    pub fn new(delta: f64) -> Result<Self, QuantizerError> {
        if delta > 0.0 && delta.is_finite() {
            Ok(UniformQuantizer { delta })
        } else {
            Err(QuantizerError::InvalidInterval(delta))
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Index `j` of the region containing `z`.
    #[inline]
    pub fn region_index(&self, z: f64) -> i64 {
        let u = z / self.delta;
        let mut j = (u + 0.5).floor();
        // u + 0.5 can round up onto the next integer when u sits just below a
        // boundary; confirm membership against the unrounded quotient
        if u < j - 0.5 {
            j -= 1.0;
        }
        j as i64
    }

    #[inline]
    pub fn quantize(&self, z: f64) -> f64 {
        self.region_index(z) as f64 * self.delta
    }

    /// Boundary value shared by adjacent regions `j` and `i`: the exact signal
    /// value at the instant it passes from one to the other.
    pub fn crossing_value(&self, j: i64, i: i64) -> Result<f64, QuantizerError> {
        if (j - i).abs() != 1 {
            return Err(QuantizerError::NonAdjacentRegions(j, i));
        }
        Ok((j + i) as f64 / 2.0 * self.delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(d: f64) -> UniformQuantizer {
        UniformQuantizer::new(d).unwrap()
    }

    #[test]
    fn half_open_boundaries() {
        let q1 = q(1.0);
        assert_eq!(q1.quantize(0.49), 0.0);
        assert_eq!(q1.quantize(0.5), 1.0);
        assert_eq!(q1.region_index(0.0), 0);
        assert_eq!(q1.region_index(-0.5), 0);
        assert_eq!(q1.region_index(-0.5 - 1e-12), -1);
        assert_eq!(q(0.25).region_index(0.9), 4);
    }

    #[test]
    fn lattice_points_are_fixed() {
        let qd = q(0.25);
        for j in -40..40 {
            let z = j as f64 * 0.25;
            assert_eq!(qd.quantize(z), z);
        }
    }

    #[test]
    fn rounding_guard_near_boundary() {
        // 0.5 - 2^-54 is below the boundary but u + 0.5 rounds to 1.0
        let z = 0.5 - f64::EPSILON / 4.0;
        assert_eq!(q(1.0).region_index(z), 0);
        assert_eq!(q(1.0).region_index(-z), 0);
    }

    #[test]
    fn crossing_values() {
        assert_eq!(q(1.0).crossing_value(0, 1).unwrap(), 0.5);
        assert_eq!(q(1.0).crossing_value(1, 0).unwrap(), 0.5);
        assert_eq!(q(2.0).crossing_value(3, 4).unwrap(), 7.0);
        assert_eq!(q(1.0).crossing_value(0, 2), Err(QuantizerError::NonAdjacentRegions(0, 2)));
    }

    #[test]
    fn invalid_interval() {
        assert!(UniformQuantizer::new(0.0).is_err());
        assert!(UniformQuantizer::new(-1.0).is_err());
        assert!(UniformQuantizer::new(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn error_bound(z in -1e4f64..1e4, d in 1e-3f64..10.0) {
            let qd = q(d);
            prop_assert!((qd.quantize(z) - z).abs() <= d / 2.0 * (1.0 + 1e-12));
        }

        #[test]
        fn monotone_and_sign(a in -100f64..100.0, b in -100f64..100.0, d in 1e-2f64..5.0) {
            let qd = q(d);
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            prop_assert!(qd.quantize(hi) >= qd.quantize(lo));
            prop_assert!((a - b) * (qd.quantize(a) - qd.quantize(b)) >= 0.0);
        }

        #[test]
        fn idempotent(z in -1e3f64..1e3, d in 1e-2f64..5.0) {
            let qd = q(d);
            prop_assert_eq!(qd.quantize(qd.quantize(z)), qd.quantize(z));
        }
    }
}

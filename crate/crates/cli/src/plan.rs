//! Scan planning: pick `N` from a resolution target (or take it as given)
//! and report the axis frequencies.

use std::fmt;

use qtrack_core::lissajous::{required_n, LissajousSpec};
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    N(u32),
    /// Target scan resolution `h`, um.
    Resolution(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Plan {
    pub n: u32,
    pub omega_x: f64,
    pub omega_y: f64,
    /// um
    pub h: f64,
    /// Time to draw the curve once, s.
    pub frame_time: f64,
    /// Common period of the axis references, s.
    pub period: f64,
    #[serde(skip)]
    pub spec: LissajousSpec,
}

pub fn plan(x0: f64, y0: f64, ax: f64, ay: f64, density: Density, f: f64) -> Result<Plan, CliError> {
    let bad = |e: qtrack_core::lissajous::LissajousError| CliError::Config(e.to_string());
    let n = match density {
        Density::N(n) => n,
        Density::Resolution(h) => required_n(ax, ay, h).map_err(bad)?,
    };
    let spec = LissajousSpec::new(x0, y0, ax, ay, n, f).map_err(bad)?;
    let fp = spec.plan_frequencies();
    Ok(Plan {
        n,
        omega_x: fp.omega_x,
        omega_y: fp.omega_y,
        h: spec.scan_resolution(),
        frame_time: fp.frame_time,
        period: fp.period,
        spec,
    })
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "N       = {}", self.n)?;
        writeln!(f, "omega_x = {:.6} rad/s", self.omega_x)?;
        writeln!(f, "omega_y = {:.6} rad/s", self.omega_y)?;
        writeln!(f, "h       = {:.6} um", self.h)?;
        writeln!(f, "frame   = {} s", self.frame_time)?;
        write!(f, "period  = {} s", self.period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn scan_values() {
        let p = plan(0.0, 0.0, 1.0, 1.0, Density::N(30), 1.0).unwrap();
        assert_eq!(p.omega_x, 60.0 * PI);
        assert_eq!(p.omega_y, 59.0 * PI);
        assert!((p.h - 0.074).abs() < 1e-3);
        assert!(p.to_string().contains("omega_x = 188.495559"));
    }

    #[test]
    fn resolution_target_picks_n() {
        assert_eq!(plan(0.0, 0.0, 1.0, 1.0, Density::Resolution(0.0741), 1.0).unwrap().n, 30);
    }

    #[test]
    fn single_pass() {
        assert_eq!(plan(0.0, 0.0, 1.0, 1.0, Density::N(1), 1.0).unwrap().omega_y, PI);
    }

    #[test]
    fn non_positive_inputs_are_config_errors() {
        for (ax, d, f) in [(0.0, Density::N(3), 1.0), (1.0, Density::N(0), 1.0), (1.0, Density::N(3), -1.0), (1.0, Density::Resolution(0.0), 1.0)] {
            assert_eq!(plan(0.0, 0.0, ax, 1.0, d, f).unwrap_err().exit_code(), 1);
        }
    }
}

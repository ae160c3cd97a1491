//! Design checks per axis: loop hypotheses on the designed target and on the
//! realized `C G`, plus recoverability of every reference the axis sees.

use std::fmt::Write;

use qtrack_core::exec::Execution;
use qtrack_core::pr_design::{check_loop_hypotheses_with, LoopHypothesesReport};
use qtrack_core::reference::{reference_is_recoverable, Recoverability, ReferenceSpec};
use serde::{Deserialize, Serialize};

use crate::config::{Axis, Experiment};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverabilityVerdict {
    pub offset: f64,
    pub recoverable: bool,
    pub crossings: usize,
    pub required: usize,
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisVerdict {
    pub axis: Axis,
    /// Conditions i-iv on the designed loop, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<Condition>>,
    /// Conditions i-iv on the realized loop `C G`.
    pub realized: Vec<Condition>,
    pub min_re_realized: f64,
    pub recoverability: Vec<RecoverabilityVerdict>,
    pub passed: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub axes: Vec<AxisVerdict>,
    pub passed: bool,
}

impl CheckReport {
    pub fn warnings(&self) -> Vec<String> {
        self.axes.iter().flat_map(|a| a.warnings.iter().map(move |w| format!("axis {}: {w}", a.axis))).collect()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.axes {
            let conds = a.target.as_ref().unwrap_or(&a.realized);
            for c in conds.iter().filter(|c| !c.ok) {
                out.push(format!("axis {}: condition {} fails", a.axis, c.name.trim()));
            }
            if a.target.is_some() {
                for c in a.realized.iter().take(3).filter(|c| !c.ok) {
                    out.push(format!("axis {}: realized loop condition {} fails", a.axis, c.name.trim()));
                }
            }
            for r in a.recoverability.iter().filter(|r| !r.recoverable) {
                out.push(format!(
                    "axis {}: reference with offset {} not recoverable ({})",
                    a.axis,
                    r.offset,
                    r.reason.as_deref().unwrap_or("rank deficient")
                ));
            }
        }
        out
    }
}

fn conditions(r: &LoopHypothesesReport) -> Vec<Condition> {
    r.conditions().iter().map(|(n, ok)| Condition { name: n.to_string(), ok: *ok }).collect()
}

fn recoverability(spec: &ReferenceSpec, r: Recoverability) -> RecoverabilityVerdict {
    RecoverabilityVerdict {
        offset: spec.offset(),
        recoverable: r.recoverable,
        crossings: r.p,
        required: r.required,
        rank: r.rank,
        reason: r.reason,
    }
}

/// Runs every check on every axis of a resolved experiment.
///
/// An axis passes when all its references are recoverable, the realized loop
/// meets conditions i-iii, and the designed loop (or, without a design, the
/// realized loop) is positive real. Causality padding can cost the realized
/// loop its positive realness; that is reported as a warning only.
pub fn run_checks(exp: &Experiment, exec: Execution) -> Result<CheckReport, CliError> {
    let q = qtrack_core::quantization::UniformQuantizer::new(exp.config.quantizer.delta)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut axes = Vec::new();
    for setup in &exp.axes {
        let mut warnings = Vec::new();
        let target = match &setup.target {
            Some(h) => Some(check_loop_hypotheses_with(h, &setup.reference, exec)?),
            None => None,
        };
        let realized = check_loop_hypotheses_with(&setup.loop_tf()?, &setup.reference, exec)?;
        let recov: Vec<_> = setup
            .references()
            .iter()
            .map(|r| recoverability(r, reference_is_recoverable(r, &q)))
            .collect();

        let realized_structure = realized.has_integrator && realized.resonant_pairs_ok && realized.remaining_poles_stable;
        let pr_ok = match &target {
            Some(t) => {
                if !realized.positive_real.positive_real {
                    warnings.push(format!(
                        "realized loop C G is not positive real (min Re = {:.3e} at {:.4e} rad/s); \
                         the designed loop is, so tracking is still expected",
                        realized.positive_real.min_re, realized.positive_real.argmin_omega
                    ));
                }
                t.verdict
            }
            None => realized.positive_real.positive_real,
        };
        let passed = recov.iter().all(|r| r.recoverable) && realized_structure && pr_ok;
        axes.push(AxisVerdict {
            axis: setup.axis,
            target: target.as_ref().map(conditions),
            realized: conditions(&realized),
            min_re_realized: realized.positive_real.min_re,
            recoverability: recov,
            passed,
            warnings,
        });
    }
    let passed = axes.iter().all(|a| a.passed);
    Ok(CheckReport { axes, passed })
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn render_report(report: &CheckReport) -> String {
    let mut s = String::new();
    for a in &report.axes {
        let _ = writeln!(s, "axis {}: {}", a.axis, if a.passed { "all checks pass" } else { "checks FAILED" });
        if let Some(t) = &a.target {
            let _ = writeln!(s, "  designed loop H");
            for c in t {
                let _ = writeln!(s, "    {:<32} {}", c.name, mark(c.ok));
            }
        }
        let _ = writeln!(s, "  realized loop C G (min Re = {:.3e})", a.min_re_realized);
        for c in &a.realized {
            let _ = writeln!(s, "    {:<32} {}", c.name, mark(c.ok));
        }
        for r in &a.recoverability {
            let _ = writeln!(
                s,
                "  reference offset {:<8} crossings {:>3}, need {}, rank {}  {}{}",
                r.offset,
                r.crossings,
                r.required,
                r.rank,
                mark(r.recoverable),
                r.reason.as_ref().map(|m| format!(" ({m})")).unwrap_or_default()
            );
        }
        for w in &a.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
    }
    s
}

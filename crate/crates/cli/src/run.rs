//! Simulation runs: checks, the closed-loop simulation, and the files a run
//! leaves behind (trace CSVs, summary CSV, SVG plots, manifest).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use qtrack_core::exec::Execution;
use qtrack_core::sim::{simulate_axis, simulate_dual_with, SimTrace};
use serde::{Deserialize, Serialize};

use crate::check::{run_checks, CheckReport};
use crate::config::{Axis, Experiment, ExperimentConfig};
use crate::plot::{self, Panel, Series, PALETTE};
use crate::CliError;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisMetrics {
    pub axis: Axis,
    pub final_abs_error: f64,
    pub max_abs_control: f64,
    /// Last recorded time with a nonzero controller input.
    pub last_nonzero_e_tilde: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub axes: Vec<AxisMetrics>,
    /// `(t, |e|)` at whole seconds and at the final record.
    pub error_samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub config: ExperimentConfig,
    pub runtime_seconds: f64,
    pub outputs: Vec<String>,
    pub checks: CheckReport,
    pub warnings: Vec<String>,
    pub metrics: RunMetrics,
}

/// Traces of one run; `error` is the euclidean error over the simulated axes.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTraces {
    pub axes: Vec<(Axis, SimTrace)>,
    pub error: Vec<f64>,
}

impl RunTraces {
    pub fn axis(&self, a: Axis) -> Option<&SimTrace> {
        self.axes.iter().find(|(x, _)| *x == a).map(|(_, t)| t)
    }

    pub fn t(&self) -> &[f64] {
        &self.axes[0].1.t
    }

    pub fn error_at(&self, t: f64) -> Option<f64> {
        self.axes[0].1.index_at(t).map(|i| self.error[i])
    }

    pub fn metrics(&self) -> RunMetrics {
        let axes = self
            .axes
            .iter()
            .map(|(axis, tr)| AxisMetrics {
                axis: *axis,
                final_abs_error: tr.e.last().map_or(0.0, |e| e.abs()),
                max_abs_control: tr.u.iter().fold(0.0, |m, u| m.max(u.abs())),
                last_nonzero_e_tilde: tr.last_nonzero_e_tilde(),
            })
            .collect();
        let t = self.t();
        let mut error_samples = Vec::new();
        if let Some(&t_last) = t.last() {
            let mut s = 1.0;
            while s < t_last {
                if let Some(e) = self.error_at(s) {
                    error_samples.push((s, e));
                }
                s += 1.0;
            }
            error_samples.push((t_last, *self.error.last().unwrap()));
        }
        RunMetrics { axes, error_samples }
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let cols: Vec<String> = self.axes.iter().map(|(a, _)| format!("e{a}")).collect();
        writeln!(w, "# units: t [s]; {}, enorm [um]", cols.join(", "))?;
        writeln!(w, "t,{},enorm", cols.join(","))?;
        for i in 0..self.error.len() {
            write!(w, "{:.16e}", self.t()[i])?;
            for (_, tr) in &self.axes {
                write!(w, ",{:.16e}", tr.e[i])?;
            }
            writeln!(w, ",{:.16e}", self.error[i])?;
        }
        Ok(())
    }
}

/// Simulates every configured axis; two axes run as one dual-axis job.
pub fn simulate(exp: &Experiment, exec: Execution) -> Result<RunTraces, CliError> {
    match exp.axes.as_slice() {
        [a] => {
            let tr = simulate_axis(&a.loop_config).map_err(|e| qtrack_core::sim::SimError::Axis {
                axis: a.axis.to_string().chars().next().unwrap(),
                source: Box::new(e),
            })?;
            let error = tr.e.iter().map(|e| e.abs()).collect();
            Ok(RunTraces { axes: vec![(a.axis, tr)], error })
        }
        [a, b] => {
            let (cx, cy) = if a.axis == Axis::X { (a, b) } else { (b, a) };
            let dual = simulate_dual_with(&cx.loop_config, &cy.loop_config, exec)?;
            Ok(RunTraces { axes: vec![(Axis::X, dual.x_axis), (Axis::Y, dual.y_axis)], error: dual.euclidean_error })
        }
        _ => Err(CliError::Config("expected one or two axes".into())),
    }
}

/// Runs checks (warn-only), simulates, then writes every output into `out`.
pub fn simulate_experiment(exp: &Experiment, out: &Path, exec: Execution) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let checks = run_checks(exp, exec)?;
    let mut warnings = checks.warnings();
    warnings.extend(checks.failures().into_iter().map(|f| format!("check failed: {f}")));
    let traces = simulate(exp, exec)?;
    let runtime_seconds = start.elapsed().as_secs_f64();

    let files = render_outputs(&traces);
    fs::create_dir_all(out)?;
    let mut outputs = Vec::new();
    for (name, content) in &files {
        fs::write(out.join(name), content)?;
        outputs.push(name.clone());
    }
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        toolkit_version: TOOLKIT_VERSION.into(),
        config: exp.config.clone(),
        runtime_seconds,
        outputs,
        checks,
        warnings,
        metrics: traces.metrics(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(out.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

fn csv_bytes(f: impl FnOnce(&mut BufWriter<&mut Vec<u8>>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut w = BufWriter::new(&mut buf);
        f(&mut w).expect("writing to memory");
        w.flush().expect("writing to memory");
    }
    buf
}

/// File name and content of every CSV and SVG output.
pub fn render_outputs(traces: &RunTraces) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for (axis, tr) in &traces.axes {
        files.push((format!("trace_{axis}.csv"), csv_bytes(|w| tr.write_csv(w))));
    }
    files.push(("summary.csv".into(), csv_bytes(|w| traces.write_summary_csv(w))));
    for (axis, tr) in &traces.axes {
        files.push((format!("axis_{axis}.svg"), axis_plot(*axis, tr).into_bytes()));
    }
    if let (Some(x), Some(y)) = (traces.axis(Axis::X), traces.axis(Axis::Y)) {
        files.push(("trajectory.svg".into(), trajectory_plot(x, y).into_bytes()));
    }
    files.push(("euclidean_error.svg".into(), error_plot(traces).into_bytes()));
    files
}

/// Displacement, errors and control effort for one axis.
pub fn axis_plot(axis: Axis, tr: &SimTrace) -> String {
    let s = |label, ys, k: usize| Series { label, xs: &tr.t, ys, color: PALETTE[k] };
    plot::stacked(
        &format!("{axis} axis"),
        "t [s]",
        &[
            Panel { y_label: "displacement [um]", series: vec![s("r", &tr.r, 0), s("y", &tr.y, 1)], log_y: false },
            Panel { y_label: "error [um]", series: vec![s("e", &tr.e, 0), s("e_tilde", &tr.e_tilde, 1)], log_y: false },
            Panel { y_label: "control effort", series: vec![s("u", &tr.u, 2)], log_y: false },
        ],
    )
}

pub fn trajectory_plot(x: &SimTrace, y: &SimTrace) -> String {
    plot::xy(
        "trajectory",
        "x [um]",
        "y [um]",
        &[
            Series { label: "reference", xs: &x.r, ys: &y.r, color: PALETTE[3] },
            Series { label: "output", xs: &x.y, ys: &y.y, color: PALETTE[0] },
        ],
    )
}

pub fn error_plot(traces: &RunTraces) -> String {
    plot::stacked(
        "euclidean error",
        "t [s]",
        &[Panel {
            y_label: "|e| [um]",
            series: vec![Series { label: "|e|", xs: traces.t(), ys: &traces.error, color: PALETTE[1] }],
            log_y: true,
        }],
    )
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtrack_cli::check::{render_report, run_checks};
use qtrack_cli::config::{ExperimentConfig, PRESETS};
use qtrack_cli::plan::{plan, Density};
use qtrack_cli::run::simulate_experiment;
use qtrack_cli::CliError;
use qtrack_core::exec::Execution;

/// Quantized-output tracking experiments.
#[derive(Parser)]
#[command(name = "qtrack", version, allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the loop design, simulate and write traces, plots and a manifest.
    Simulate {
        #[command(flatten)]
        source: Source,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Report the loop hypotheses and reference recoverability per axis.
    Check {
        #[command(flatten)]
        source: Source,
    },
    /// Plan a Lissajous scan from its amplitudes and line density.
    Plan(PlanArgs),
}

#[derive(Args)]
struct Source {
    /// TOML config, or a run manifest (.json) to replay.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Override the integration step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the end time, s.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let cfg = match (&self.config, &self.preset) {
            (Some(p), _) => ExperimentConfig::load(p)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => unreachable!("clap requires one source"),
        };
        Ok(cfg.with_overrides(self.dt, self.t_end))
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, default_value_t = 1.0)]
    ax: f64,
    #[arg(long, default_value_t = 1.0)]
    ay: f64,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    /// Number of lines per frame.
    #[arg(long = "N", conflicts_with = "h_target", required_unless_present = "h_target")]
    n: Option<u32>,
    /// Target scan resolution, um; picks the smallest sufficient N.
    #[arg(long = "h-target")]
    h_target: Option<f64>,
    /// Frame rate, Hz.
    #[arg(long, default_value_t = 1.0)]
    f: f64,
    /// Write a ready-to-simulate config using this trajectory.
    #[arg(long = "write-config")]
    write_config: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = Execution::default();
    match cli.command {
        Command::Simulate { source, out } => {
            let exp = source.load()?.resolve()?;
            let manifest = simulate_experiment(&exp, &out, exec)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for (t, e) in &manifest.metrics.error_samples {
                println!("t = {t:>8.4} s  |e| = {e:.3e} um");
            }
            println!("wrote {} files to {} in {:.2} s", manifest.outputs.len(), out.display(), manifest.runtime_seconds);
            Ok(())
        }
        Command::Check { source } => {
            let exp = source.load()?.resolve()?;
            let report = run_checks(&exp, exec)?;
            print!("{}", render_report(&report));
            if report.passed {
                Ok(())
            } else {
                Err(CliError::CheckFailed(report.failures().join("; ")))
            }
        }
        Command::Plan(a) => {
            let density = match (a.n, a.h_target) {
                (Some(n), _) => Density::N(n),
                (None, Some(h)) => Density::Resolution(h),
                (None, None) => unreachable!("clap requires N or h-target"),
            };
            let p = plan(a.x0, a.y0, a.ax, a.ay, density, a.f)?;
            println!("{p}");
            if let Some(path) = a.write_config {
                let mut cfg = ExperimentConfig::preset(PRESETS[1].0)?;
                let s = p.spec;
                (cfg.trajectory.x0, cfg.trajectory.y0, cfg.trajectory.ax, cfg.trajectory.ay) = (s.x0, s.y0, s.ax, s.ay);
                (cfg.trajectory.n, cfg.trajectory.f) = (s.n, s.f);
                cfg.resolve()?;
                std::fs::write(&path, cfg.to_toml_string())?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // usage errors share the config exit code; 2 is reserved for divergence
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

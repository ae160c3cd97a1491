//! Experiment configuration: TOML schema, presets and resolution into
//! per-axis loop setups.

use std::fmt;
use std::path::Path;

use qtrack_core::lissajous::LissajousSpec;
use qtrack_core::pr_design::{synthesize_controller, FirstOrderTerm, PrComposition, ResonantTerm};
use qtrack_core::quantization::UniformQuantizer;
use qtrack_core::realization::StateSpaceModel;
use qtrack_core::reference::ReferenceSpec;
use qtrack_core::sim::{LoopArchitecture, LoopConfig, SwitchTiming, DEFAULT_DT, DEFAULT_RECORD_STRIDE};
use qtrack_core::tf::RationalTransferFunction;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    ("fig3_axis_x", include_str!("../presets/fig3_axis_x.toml")),
    ("fig4_lissajous", include_str!("../presets/fig4_lissajous.toml")),
    ("fig5_step", include_str!("../presets/fig5_step.toml")),
    ("ablation_fig1_loop", include_str!("../presets/ablation_fig1_loop.toml")),
    ("printed_controller", include_str!("../presets/printed_controller.toml")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// `e_tilde = q(r) - q(y)`
    #[default]
    Artificial,
    /// `e_tilde = r - q(y)`
    OutputOnly,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Switching {
    #[default]
    Located,
    StepStart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSection,
    pub quantizer: QuantizerSection,
    #[serde(rename = "loop")]
    pub sim: LoopSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerSection>,
    pub trajectory: TrajectorySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_change: Option<StepChange>,
}

/// `G(s) = b / (s (s + a))`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizerSection {
    /// um
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub architecture: Architecture,
    #[serde(default)]
    pub switching: Switching,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_stride() -> usize {
    DEFAULT_RECORD_STRIDE
}

fn default_padding() -> f64 {
    qtrack_core::pr_design::DEFAULT_PADDING_FACTOR
}

/// Target loop `k0/s + k_resonant s/(s^2 + w^2) + k_first_order/(s + pole)`,
/// with `w` taken from the axis reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub k0: f64,
    pub k_resonant: f64,
    pub k_first_order: f64,
    /// Defaults to the plant's `a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_order_pole: Option<f64>,
    #[serde(default = "default_padding")]
    pub causality_pole_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<RationalTransferFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<RationalTransferFunction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub x0: f64,
    pub y0: f64,
    pub ax: f64,
    pub ay: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub f: f64,
    #[serde(default = "both_axes")]
    pub axes: Vec<Axis>,
}

fn both_axes() -> Vec<Axis> {
    vec![Axis::X, Axis::Y]
}

impl TrajectorySection {
    pub fn spec(&self) -> LissajousSpec {
        LissajousSpec { x0: self.x0, y0: self.y0, ax: self.ax, ay: self.ay, n: self.n, f: self.f }
    }
}

/// Per-axis reference overriding the one derived from the trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<ReferenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<ReferenceSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepChange {
    pub t_step: f64,
    pub new_center_x: f64,
    pub new_center_y: f64,
}

/// Everything needed to simulate or check one axis.
#[derive(Clone, Debug)]
pub struct AxisSetup {
    pub axis: Axis,
    /// Designed loop transfer function, when the config has a `design` section.
    pub target: Option<RationalTransferFunction>,
    pub controller: RationalTransferFunction,
    pub plant: RationalTransferFunction,
    pub reference: ReferenceSpec,
    pub loop_config: LoopConfig,
}

impl AxisSetup {
    /// Realized loop `C G`.
    pub fn loop_tf(&self) -> Result<RationalTransferFunction, CliError> {
        Ok(self.controller.mul(&self.plant)?)
    }

    /// References the axis sees over the run, including any post-step one.
    pub fn references(&self) -> Vec<ReferenceSpec> {
        let mut out = vec![self.reference.clone()];
        for s in &self.loop_config.offset_steps {
            if s.t < self.loop_config.t_end {
                out.push(self.reference.with_offset(s.center));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub axes: Vec<AxisSetup>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                invalid(format!("unknown preset `{name}` (available: {})", names.join(", ")))
            })?;
        Self::from_toml_str(text)
    }

    /// Reads a TOML config, or the echoed config inside a run manifest
    /// (`.json`).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::run::RunManifest =
                serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            return Ok(manifest.config);
        }
        Self::from_toml_str(&text)
    }

    pub fn with_overrides(mut self, dt: Option<f64>, t_end: Option<f64>) -> Self {
        if let Some(dt) = dt {
            self.sim.dt = dt;
        }
        if let Some(t) = t_end {
            self.sim.t_end = t;
        }
        self
    }

    fn validate(&self) -> Result<(), CliError> {
        let PlantSection { a, b } = self.plant;
        if !(a.is_finite() && a >= 0.0 && b.is_finite() && b != 0.0) {
            return Err(invalid(format!("[plant] needs a >= 0 and b != 0 (a = {a}, b = {b})")));
        }
        if !(self.sim.dt > 0.0 && self.sim.t_end > 0.0) {
            return Err(invalid("[loop] dt and t_end must be positive"));
        }
        if self.sim.record_stride == 0 {
            return Err(invalid("[loop] record_stride must be at least 1"));
        }
        match (&self.design, &self.controller) {
            (None, None) => return Err(invalid("missing [design] or [controller] section")),
            (Some(_), Some(_)) => return Err(invalid("give either [design] or [controller], not both")),
            _ => {}
        }
        if self.trajectory.axes.is_empty() {
            return Err(invalid("[trajectory] axes is empty"));
        }
        let mut axes = self.trajectory.axes.clone();
        axes.sort();
        axes.dedup();
        if axes.len() != self.trajectory.axes.len() {
            return Err(invalid("[trajectory] axes lists an axis twice"));
        }
        self.trajectory.spec().validate().map_err(|e| invalid(format!("[trajectory] {e}")))?;
        if let Some(s) = &self.step_change {
            if !(s.t_step > 0.0) {
                return Err(invalid("[step_change] t_step must be positive"));
            }
        }
        Ok(())
    }

    pub fn plant_tf(&self) -> Result<RationalTransferFunction, CliError> {
        Ok(RationalTransferFunction::from_coeffs(&[self.plant.b], &[0.0, self.plant.a, 1.0])?)
    }

    /// Validates every section and builds the per-axis setups.
    pub fn resolve(&self) -> Result<Experiment, CliError> {
        self.validate()?;
        let quantizer = UniformQuantizer::new(self.quantizer.delta).map_err(|e| invalid(format!("[quantizer] {e}")))?;
        let plant = self.plant_tf()?;
        let plant_ss = StateSpaceModel::realize(&plant)?;
        let (rx, ry) = self.trajectory.spec().axis_references();

        let mut axes = Vec::new();
        for &axis in &self.trajectory.axes {
            let (derived, center) = match axis {
                Axis::X => (rx.clone(), self.step_change.map(|s| s.new_center_x)),
                Axis::Y => (ry.clone(), self.step_change.map(|s| s.new_center_y)),
            };
            let reference = match self.reference.as_ref().and_then(|r| match axis {
                Axis::X => r.x.clone(),
                Axis::Y => r.y.clone(),
            }) {
                Some(r) => r,
                None => derived,
            };

            let (target, controller) = match (&self.design, &self.controller) {
                (Some(d), _) => {
                    let target = design_target(d, self.plant.a, &reference)?;
                    let c = synthesize_controller(&target, &plant, d.causality_pole_factor)
                        .map_err(|e| invalid(format!("[design] axis {axis}: {e}")))?;
                    (Some(target), c)
                }
                (None, Some(c)) => {
                    let tf = match axis {
                        Axis::X => c.x.clone(),
                        Axis::Y => c.y.clone(),
                    }
                    .ok_or_else(|| invalid(format!("[controller] has no entry for axis {axis}")))?;
                    (None, tf)
                }
                (None, None) => unreachable!("validated above"),
            };
            let controller_ss =
                StateSpaceModel::realize(&controller).map_err(|e| invalid(format!("controller for axis {axis}: {e}")))?;

            let mut cfg = LoopConfig::new(
                controller_ss,
                plant_ss.clone(),
                quantizer,
                reference.clone(),
                self.sim.dt,
                self.sim.t_end,
            );
            cfg.record_stride = self.sim.record_stride;
            cfg.architecture = match self.sim.architecture {
                Architecture::Artificial => LoopArchitecture::ArtificialQuantization,
                Architecture::OutputOnly => LoopArchitecture::QuantizedOutputOnly,
            };
            cfg.switching = match self.sim.switching {
                Switching::Located => SwitchTiming::Located,
                Switching::StepStart => SwitchTiming::StepStart,
            };
            if let (Some(s), Some(c)) = (self.step_change, center) {
                cfg = cfg.apply_step_change(s.t_step, c).map_err(|e| invalid(format!("[step_change] {e}")))?;
            }
            axes.push(AxisSetup { axis, target, controller, plant: plant.clone(), reference, loop_config: cfg });
        }
        Ok(Experiment { config: self.clone(), axes })
    }
}

/// One resonant term per reference sinusoid, all sharing `k_resonant`.
fn design_target(d: &DesignSection, plant_a: f64, reference: &ReferenceSpec) -> Result<RationalTransferFunction, CliError> {
    let pole = d.first_order_pole.unwrap_or(plant_a);
    let composition = PrComposition {
        delta0: reference.delta0(),
        k0: d.k0,
        resonant: reference.terms().iter().map(|t| ResonantTerm { gain: d.k_resonant, omega: t.omega }).collect(),
        first_order: if d.k_first_order > 0.0 { vec![FirstOrderTerm { gain: d.k_first_order, pole }] } else { vec![] },
        second_order: vec![],
    };
    composition.compose().map_err(|e| invalid(format!("[design] {e}")))
}

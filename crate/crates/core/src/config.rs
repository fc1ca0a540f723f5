//! JSON scenario configuration with dotted-key overrides.
//!
//! Every section is optional and falls back to its defaults; unknown keys
//! are rejected. See `docs/scenario.md` for the full schema.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::control::{Beta0Source, ControllerKind, TuningParams};
use crate::error::{Error, Result};
use crate::linear::{log_grid, LoopChannel, LoopConfig};
use crate::sim::{ActuatorLimits, CommandProfile, Rates, SensorConfig, SimScenario, WindConfig};
use crate::trajectory::{load_trajectory, synth_reference_trajectory, SynthProfile, TrajectoryTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    /// Trajectory CSV; the synthetic profile is used when absent. Relative
    /// paths are resolved against the config file's directory.
    pub path: Option<PathBuf>,
    /// Length of the synthetic profile (s).
    pub duration: f64,
    pub profile: SynthProfile,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        TrajectorySection { path: None, duration: 80.0, profile: SynthProfile::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKind,
    pub beta0_source: Beta0Source,
}

impl Default for ControllerSection {
    fn default() -> Self {
        ControllerSection { kind: ControllerKind::IndiLpf, beta0_source: Beta0Source::CommandFilter }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelaySection {
    /// Command delay between controller and actuator, in GNC samples.
    pub tvc_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedSection {
    /// Master seed of the per-run sensor noise streams.
    pub master: u64,
}

impl Default for SeedSection {
    fn default() -> Self {
        SeedSection { master: 1 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Run length (s); the whole trajectory when absent.
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    /// Uncertainty level; 1.0 is the nominal dispersion box.
    pub delta: f64,
    /// Number of corner cases run (a divisor of 256, evenly strided).
    pub cases: usize,
    pub noise_levels_dps: Vec<f64>,
    pub delay_samples: Vec<usize>,
    pub pareto_bandwidths: Vec<f64>,
    /// Equal-error calibration target (deg); by default the error of
    /// `indi_lpf` at its configured ω_β.
    pub calibration_target_deg: Option<f64>,
    /// Bandwidth bracket for the calibration (rad/s).
    pub calibration_bracket: [f64; 2],
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection {
            delta: 1.0,
            cases: 256,
            noise_levels_dps: vec![0.0, 0.05, 0.1],
            delay_samples: vec![0, 1, 2],
            pareto_bandwidths: vec![4.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0, 45.0],
            calibration_target_deg: None,
            calibration_bracket: [3.0, 60.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { min: 1e-2, max: 1e3, points: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearizationSection {
    pub channel: LoopChannel,
    /// Flight time of the single-point `linearize` output (s).
    pub time: f64,
    /// Spacing of the margin sweep instants (s).
    pub spacing: f64,
    /// Fine step for the nominal inter-node scan (s).
    pub internode_step: f64,
    #[serde(rename = "loop")]
    pub loop_config: LoopConfig,
    pub grid: GridSection,
}

impl Default for LinearizationSection {
    fn default() -> Self {
        LinearizationSection {
            channel: LoopChannel::ThetaerrToTheta,
            time: 35.0,
            spacing: 2.5,
            internode_step: 0.5,
            loop_config: LoopConfig::full(),
            grid: GridSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub trajectory: TrajectorySection,
    pub controller: ControllerSection,
    pub tuning: TuningParams,
    pub wind: WindConfig,
    pub sensors: SensorConfig,
    pub delays: DelaySection,
    pub rates: Rates,
    pub command: CommandProfile,
    pub seeds: SeedSection,
    pub limits: ActuatorLimits,
    pub simulation: SimulationSection,
    pub campaign: CampaignSection,
    pub linearization: LinearizationSection,
}

/// Sets `key` (dotted path) in a JSON document. The value is parsed as JSON
/// when possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::invalid(format!("bad override key `{key}`")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(Error::invalid(format!("override `{key}`: `{}` is not a section", parts[..i].join("."))));
            }
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| Error::invalid(format!("override `{s}` is not key=value")))
}

impl ScenarioConfig {
    pub fn from_value(doc: Value) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_value(doc).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if !doc.is_object() {
            return Err(Error::Schema("top level must be an object".into()));
        }
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        Self::from_value(doc)
    }

    /// Reads a config file; `None` starts from the defaults.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let Some(path) = path else {
            return Self::from_json_str("{}", overrides);
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_json_str(&text, overrides)?;
        if let Some(p) = &cfg.trajectory.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.trajectory.path = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Schema(m));
        self.tuning.validate()?;
        self.rates.validate()?;
        if self.trajectory.path.is_none() && !(self.trajectory.duration > 0.0) {
            return bad(format!("trajectory.duration must be > 0, got {}", self.trajectory.duration));
        }
        if !(self.wind.sigma >= 0.0) {
            return bad("wind.sigma must be >= 0".into());
        }
        if !(self.sensors.gyro_3sigma_dps >= 0.0 && self.sensors.attitude_3sigma_deg >= 0.0) {
            return bad("sensor noise levels must be >= 0".into());
        }
        let c = &self.campaign;
        if !(c.delta >= 0.0 && c.delta.is_finite()) {
            return bad(format!("campaign.delta must be >= 0, got {}", c.delta));
        }
        if c.cases == 0 || !crate::trajectory::N_CORNER_CASES.is_multiple_of(c.cases) {
            return bad(format!("campaign.cases must divide 256, got {}", c.cases));
        }
        if c.noise_levels_dps.iter().any(|v| !(*v >= 0.0)) {
            return bad("campaign.noise_levels_dps must be >= 0".into());
        }
        if c.pareto_bandwidths.iter().any(|v| !(*v > 0.0)) {
            return bad("campaign.pareto_bandwidths must be > 0".into());
        }
        let l = &self.linearization;
        if !(l.spacing > 0.0 && l.internode_step > 0.0) {
            return bad("linearization spacing and internode_step must be > 0".into());
        }
        log_grid(l.grid.min, l.grid.max, l.grid.points).map_err(|e| Error::Schema(e.to_string()))?;
        Ok(())
    }

    pub fn load_table(&self) -> Result<TrajectoryTable> {
        match &self.trajectory.path {
            Some(p) => load_trajectory(p),
            None => synth_reference_trajectory(self.trajectory.duration, &self.trajectory.profile),
        }
    }

    pub fn frequency_grid(&self) -> Result<Vec<f64>> {
        let g = &self.linearization.grid;
        log_grid(g.min, g.max, g.points)
    }

    /// The simulation scenario described by this config.
    pub fn scenario_with(&self, table: Arc<TrajectoryTable>) -> SimScenario {
        let mut s = SimScenario::new(table, self.controller.kind);
        s.beta0_source = self.controller.beta0_source;
        s.tuning = self.tuning;
        s.wind = self.wind;
        s.sensors = self.sensors;
        s.tvc_delay_samples = self.delays.tvc_samples;
        s.rates = self.rates;
        s.duration = self.simulation.duration;
        s.command = self.command;
        s.limits = self.limits;
        s.seed = self.seeds.master;
        s
    }

    pub fn scenario(&self) -> Result<SimScenario> {
        Ok(self.scenario_with(Arc::new(self.load_table()?)))
    }
}

//! Multirate closed-loop simulation: continuous plant and actuator under
//! RK4, controller at the GNC rate, wind at its own rate.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{Beta0Source, Controller, ControllerKind, TuningParams};
use crate::dynamics::{
    angle_of_attack, plant_derivatives, rk4_step, tvc_derivatives, ActuatorState, PlantState,
};
use crate::environment::{gyro_measure, DelayLine, DrydenState, NoiseStream};
use crate::error::{Error, Result};
use crate::trajectory::{apply_dispersion, TrajectoryPoint, TrajectoryTable, UncertaintySet};

/// Abort bound on |θ| (rad).
pub const THETA_BLOWUP: f64 = std::f64::consts::PI;
/// Abort bound on |w| (m/s).
pub const DRIFT_RATE_BLOWUP: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    pub enabled: bool,
    pub seed: u64,
    /// Stationary standard deviation of the turbulence velocity (m/s).
    pub sigma: f64,
}

impl Default for WindConfig {
    fn default() -> Self {
        WindConfig { enabled: true, seed: 2024, sigma: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Rate-gyro noise, 3σ in deg/s.
    pub gyro_3sigma_dps: f64,
    /// Attitude noise, 3σ in deg.
    pub attitude_3sigma_deg: f64,
}

/// Loop rates in Hz. The integrator rate must be a multiple of the other two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rates {
    pub gnc_hz: u32,
    pub wind_hz: u32,
    pub integrator_hz: u32,
}

impl Default for Rates {
    fn default() -> Self {
        Rates { gnc_hz: 25, wind_hz: 20, integrator_hz: 500 }
    }
}

impl Rates {
    pub fn validate(&self) -> Result<()> {
        if self.gnc_hz == 0 || self.wind_hz == 0 || self.integrator_hz == 0 {
            return Err(Error::invalid("rates must be positive"));
        }
        if !self.integrator_hz.is_multiple_of(self.gnc_hz) || !self.integrator_hz.is_multiple_of(self.wind_hz) {
            return Err(Error::invalid(format!(
                "integrator rate {} Hz must be a multiple of the GNC ({} Hz) and wind ({} Hz) rates",
                self.integrator_hz, self.gnc_hz, self.wind_hz
            )));
        }
        Ok(())
    }

    pub fn gnc_dt(&self) -> f64 {
        1.0 / self.gnc_hz as f64
    }
}

/// Attitude command profile, in the regulation frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandProfile {
    #[default]
    Zero,
    Step {
        /// Seconds after the start of the run.
        time: f64,
        amplitude_deg: f64,
    },
}

impl CommandProfile {
    pub fn theta_cmd(&self, elapsed: f64) -> f64 {
        match *self {
            CommandProfile::Zero => 0.0,
            CommandProfile::Step { time, amplitude_deg } => {
                if elapsed >= time {
                    amplitude_deg.to_radians()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Optional gimbal position and rate limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorLimits {
    pub enabled: bool,
    pub beta_max_deg: f64,
    pub beta_rate_max_dps: f64,
}

impl Default for ActuatorLimits {
    fn default() -> Self {
        ActuatorLimits { enabled: false, beta_max_deg: 6.0, beta_rate_max_dps: 20.0 }
    }
}

/// Everything one simulation run depends on.
#[derive(Debug, Clone)]
pub struct SimScenario {
    /// Nominal trajectory: the controller is scheduled on it, the plant sees
    /// it through `dispersion`.
    pub table: Arc<TrajectoryTable>,
    pub dispersion: UncertaintySet,
    pub controller: ControllerKind,
    pub tuning: TuningParams,
    pub beta0_source: Beta0Source,
    pub wind: WindConfig,
    pub sensors: SensorConfig,
    pub tvc_delay_samples: usize,
    pub rates: Rates,
    /// Run length in seconds; `None` runs the whole table.
    pub duration: Option<f64>,
    pub command: CommandProfile,
    pub limits: ActuatorLimits,
    /// Master seed for the per-run sensor noise streams.
    pub seed: u64,
    /// Identifies the run within a campaign; feeds the sensor stream seeds.
    pub case_id: u64,
}

impl SimScenario {
    pub fn new(table: Arc<TrajectoryTable>, controller: ControllerKind) -> Self {
        SimScenario {
            table,
            dispersion: UncertaintySet::identity(),
            controller,
            tuning: TuningParams::default(),
            beta0_source: Beta0Source::default(),
            wind: WindConfig::default(),
            sensors: SensorConfig::default(),
            tvc_delay_samples: 0,
            rates: Rates::default(),
            duration: None,
            command: CommandProfile::Zero,
            limits: ActuatorLimits::default(),
            seed: 1,
            case_id: 0,
        }
    }

    pub fn run_duration(&self) -> f64 {
        self.duration.unwrap_or_else(|| self.table.duration())
    }

    /// Plant parameters at time `t`: nominal table through the dispersion.
    pub fn plant_point(&self, t: f64) -> Result<TrajectoryPoint> {
        Ok(apply_dispersion(&self.table.sample(t)?, &self.dispersion))
    }

    pub fn build_controller(&self) -> Result<Controller> {
        Controller::from_table(self.controller, self.tuning, &self.table, self.beta0_source)
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        self.tuning.validate()?;
        let d = self.run_duration();
        if !(d > 0.0) || d > self.table.duration() + 1e-9 {
            return Err(Error::invalid(format!(
                "duration {d} must be in (0, {}]",
                self.table.duration()
            )));
        }
        let ticks = d * self.rates.gnc_hz as f64;
        if (ticks - ticks.round()).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "duration {d} s is not a whole number of GNC periods"
            )));
        }
        if self.wind.sigma < 0.0 || self.sensors.gyro_3sigma_dps < 0.0 || self.sensors.attitude_3sigma_deg < 0.0 {
            return Err(Error::invalid("noise levels must be non-negative"));
        }
        Ok(())
    }
}

/// Signals sampled once per GNC tick.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TelemetryLog {
    pub t: Vec<f64>,
    pub theta_cmd: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_err: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot_est: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub alpha: Vec<f64>,
    pub q_alpha: Vec<f64>,
    pub beta_cmd: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta_dot: Vec<f64>,
    /// NaN for controllers without a virtual control.
    pub nu: Vec<f64>,
    pub v_w: Vec<f64>,
}

pub const TELEMETRY_HEADER: [&str; 15] = [
    "t", "theta_cmd", "theta", "theta_err", "q", "qdot_est", "w", "z", "alpha", "Qalpha",
    "beta_cmd", "beta", "beta_dot", "nu", "v_w",
];

impl TelemetryLog {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    fn columns(&self) -> [&Vec<f64>; 15] {
        [
            &self.t,
            &self.theta_cmd,
            &self.theta,
            &self.theta_err,
            &self.q,
            &self.qdot_est,
            &self.w,
            &self.z,
            &self.alpha,
            &self.q_alpha,
            &self.beta_cmd,
            &self.beta,
            &self.beta_dot,
            &self.nu,
            &self.v_w,
        ]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TELEMETRY_HEADER)?;
        let cols = self.columns();
        for i in 0..self.len() {
            w.write_record(cols.iter().map(|c| c[i].to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn unpack(x: &[f64; 6]) -> (PlantState, ActuatorState) {
    (
        PlantState { z: x[0], w: x[1], theta: x[2], q: x[3] },
        ActuatorState { beta: x[4], beta_dot: x[5] },
    )
}

/// Runs one scenario. Deterministic for a fixed scenario.
pub fn simulate(scenario: &SimScenario) -> Result<TelemetryLog> {
    scenario.validate()?;
    let rates = scenario.rates;
    let t0 = scenario.table.start();
    let f_int = rates.integrator_hz as f64;
    let dt_int = 1.0 / f_int;
    let dt_gnc = rates.gnc_dt();
    let dt_wind = 1.0 / rates.wind_hz as f64;
    let gnc_every = (rates.integrator_hz / rates.gnc_hz) as u64;
    let wind_every = (rates.integrator_hz / rates.wind_hz) as u64;
    let ticks = (scenario.run_duration() * rates.gnc_hz as f64).round() as u64;
    let last_substep = ticks * gnc_every;

    let mut controller = scenario.build_controller()?;
    let mut delay = DelayLine::new(scenario.tvc_delay_samples);
    let wind_scale = if scenario.wind.enabled {
        DrydenState::input_scale_for_sigma(scenario.wind.sigma, dt_wind)
    } else {
        0.0
    };
    // Shared across every run seeded with the same wind seed.
    let mut wind = DrydenState::new(wind_scale, NoiseStream::new(scenario.wind.seed, 0, "wind"));
    let mut gyro_noise = NoiseStream::new(scenario.seed, scenario.case_id, "gyro");
    let mut attitude_noise = NoiseStream::new(scenario.seed, scenario.case_id, "attitude");
    let gyro_3sigma = scenario.sensors.gyro_3sigma_dps.to_radians();
    let attitude_3sigma = scenario.sensors.attitude_3sigma_deg.to_radians();
    let limits = scenario.limits;

    let mut x = [0.0f64; 6];
    let mut held_cmd = 0.0;
    let mut v_w = 0.0;
    let mut log = TelemetryLog::default();

    for j in 0..=last_substep {
        let t = t0 + j as f64 / f_int;
        if j % wind_every == 0 {
            v_w = if scenario.wind.enabled { wind.step(dt_wind)? } else { 0.0 };
        }
        if j % gnc_every == 0 {
            let (plant, act) = unpack(&x);
            let elapsed = t - t0;
            let theta_cmd = scenario.command.theta_cmd(elapsed);
            let theta_meas = gyro_measure(plant.theta, attitude_3sigma, &mut attitude_noise);
            let q_meas = gyro_measure(plant.q, gyro_3sigma, &mut gyro_noise);
            let out = controller.step(t, theta_cmd, theta_meas, q_meas, act.beta, dt_gnc)?;
            held_cmd = delay.push_pop(out.beta_cmd);

            let p = scenario.plant_point(t)?;
            let alpha = angle_of_attack(&plant, &p, v_w);
            log.t.push(t);
            log.theta_cmd.push(theta_cmd);
            log.theta.push(plant.theta);
            log.theta_err.push(theta_cmd - plant.theta);
            log.q.push(plant.q);
            log.qdot_est.push(out.qdot_est);
            log.w.push(plant.w);
            log.z.push(plant.z);
            log.alpha.push(alpha);
            log.q_alpha.push(p.dynamic_pressure() * alpha);
            log.beta_cmd.push(out.beta_cmd);
            log.beta.push(act.beta);
            log.beta_dot.push(act.beta_dot);
            log.nu.push(out.nu.unwrap_or(f64::NAN));
            log.v_w.push(v_w);
        }
        if j == last_substep {
            break;
        }

        let deriv = |t: f64, x: &[f64; 6]| -> Result<[f64; 6]> {
            let p = scenario.plant_point(t)?;
            let (plant, act) = unpack(x);
            let (beta_dot, beta_ddot) = tvc_derivatives(&act, held_cmd);
            let d = plant_derivatives(&plant, &p, act.beta, beta_ddot, v_w);
            Ok([d.z_dot, d.w_dot, d.theta_dot, d.q_dot, beta_dot, beta_ddot])
        };
        x = rk4_step(deriv, &x, t, dt_int).map_err(|e| match e {
            Error::NonFinite(d) => Error::Diverged { t, detail: d },
            other => other,
        })?;

        if limits.enabled {
            let bmax = limits.beta_max_deg.to_radians();
            let rmax = limits.beta_rate_max_dps.to_radians();
            x[5] = x[5].clamp(-rmax, rmax);
            if x[4].abs() >= bmax {
                x[4] = x[4].clamp(-bmax, bmax);
                x[5] = 0.0;
            }
        }
        if x[2].abs() > THETA_BLOWUP || !x[2].is_finite() {
            return Err(Error::Diverged { t, detail: format!("|theta| = {} rad", x[2].abs()) });
        }
        if x[1].abs() > DRIFT_RATE_BLOWUP || !x[1].is_finite() {
            return Err(Error::Diverged { t, detail: format!("|w| = {} m/s", x[1].abs()) });
        }
    }
    Ok(log)
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ss::LinearSystem;
use crate::control::{Beta0Source, ControllerKind, Gains, TuningParams};
use crate::dynamics::{plant_derivatives_with, PlantEffects, PlantState, TVC_DAMPING_COEFF, TVC_OMEGA};
use crate::error::{Error, Result};
use crate::sim::SimScenario;
use crate::trajectory::{plant_coefficients, TrajectoryPoint};

/// A continuous-time system ẋ = f(x, u), y = h(x, u).
pub trait ContinuousSystem {
    fn n_states(&self) -> usize;
    fn n_inputs(&self) -> usize;
    fn n_outputs(&self) -> usize;
    fn derivatives(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>>;
    fn outputs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>>;
}

/// Per-variable difference step `max(floor, relative · |v|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub relative: f64,
    pub floor: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule { relative: 1e-6, floor: 1e-6 }
    }
}

impl StepRule {
    pub fn scaled(self, k: f64) -> Self {
        StepRule { relative: self.relative * k, floor: self.floor * k }
    }

    fn step(&self, v: f64) -> f64 {
        self.floor.max(self.relative * v.abs())
    }
}

/// Relative disagreement between the `h` and `2h` estimates above which a
/// Jacobian column is rejected.
pub const ILL_CONDITIONED_TOL: f64 = 1e-4;

fn eval_all<S: ContinuousSystem + ?Sized>(sys: &S, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    let mut f = sys.derivatives(x, u)?;
    f.extend(sys.outputs(x, u)?);
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("derivative or output during linearization".into()));
    }
    Ok(f)
}

/// Central-difference Jacobian column for variable `k` of the stacked (x, u).
fn column<S: ContinuousSystem + ?Sized>(sys: &S, x0: &[f64], u0: &[f64], k: usize, h: f64) -> Result<Vec<f64>> {
    let n = x0.len();
    let shifted = |delta: f64| -> Result<Vec<f64>> {
        let mut x = x0.to_vec();
        let mut u = u0.to_vec();
        if k < n {
            x[k] += delta;
        } else {
            u[k - n] += delta;
        }
        eval_all(sys, &x, &u)
    };
    let (fp, fm) = (shifted(h)?, shifted(-h)?);
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

pub fn linearize<S: ContinuousSystem + ?Sized>(sys: &S, x0: &[f64], u0: &[f64]) -> Result<LinearSystem> {
    linearize_with(sys, x0, u0, StepRule::default())
}

/// Jacobians of the stacked (f, h) by central differences. Each column is
/// also estimated with twice the step; a disagreement beyond
/// [`ILL_CONDITIONED_TOL`] is reported as [`Error::IllConditioned`].
pub fn linearize_with<S: ContinuousSystem + ?Sized>(
    sys: &S,
    x0: &[f64],
    u0: &[f64],
    rule: StepRule,
) -> Result<LinearSystem> {
    let (n, m, p) = (sys.n_states(), sys.n_inputs(), sys.n_outputs());
    if x0.len() != n || u0.len() != m {
        return Err(Error::invalid(format!(
            "operating point has {} states and {} inputs, system has {n} and {m}",
            x0.len(),
            u0.len()
        )));
    }
    eval_all(sys, x0, u0)?;
    let mut jac = DMatrix::<f64>::zeros(n + p, n + m);
    for k in 0..n + m {
        let v = if k < n { x0[k] } else { u0[k - n] };
        let h = rule.step(v);
        let c1 = column(sys, x0, u0, k, h)?;
        let c2 = column(sys, x0, u0, k, 2.0 * h)?;
        let scale = c1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (i, (a, b)) in c1.iter().zip(&c2).enumerate() {
            if (a - b).abs() > ILL_CONDITIONED_TOL * scale.max(1e-9) {
                return Err(Error::IllConditioned(format!(
                    "entry ({i}, {k}): {a} with step {h} vs {b} with step {}",
                    2.0 * h
                )));
            }
            jac[(i, k)] = *a;
        }
    }
    LinearSystem::new(
        jac.view((0, 0), (n, n)).into_owned(),
        jac.view((0, n), (n, m)).into_owned(),
        jac.view((n, 0), (p, n)).into_owned(),
        jac.view((n, n), (p, m)).into_owned(),
    )
}

/// Where the attitude loop is cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopChannel {
    /// Virtual control to pitch, with the inversion loop closed (INDI only).
    NuToTheta,
    /// Attitude loop opened at the controller output: the input is the
    /// command (ν, or the deflection for the PD laws) and the output is the
    /// attitude feedback kP·θ + kD·q (+ kA·q̇). The response is the return
    /// ratio seen by the attitude error, (kP + kD·s)/s² for a perfect
    /// double integrator.
    ThetaerrToTheta,
}

impl LoopChannel {
    pub fn name(self) -> &'static str {
        match self {
            LoopChannel::NuToTheta => "nu_to_theta",
            LoopChannel::ThetaerrToTheta => "thetaerr_to_theta",
        }
    }
}

impl std::str::FromStr for LoopChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nu_to_theta" => Ok(LoopChannel::NuToTheta),
            "thetaerr_to_theta" => Ok(LoopChannel::ThetaerrToTheta),
            _ => Err(Error::invalid(format!("unknown channel `{s}` (nu_to_theta, thetaerr_to_theta)"))),
        }
    }
}

/// Which effects the continuous closed-loop model keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopConfig {
    /// Second-order TVC actuator; off means β follows the command instantly.
    pub actuator: bool,
    pub tail_wags_dog: bool,
    pub drift: bool,
    /// q̇ from the derivative filter; off means the exact plant acceleration.
    pub derivative_filter: bool,
    /// β₀ from its low-pass estimator; off means the actual deflection.
    pub beta0_filter: bool,
    /// INDI output low-pass (only for `indi_lpf`).
    pub output_filter: bool,
    /// Invert with the true μ_c of the frozen plant instead of the schedule.
    pub exact_mu_c: bool,
    /// Half-sample Padé lag for the zero-order hold.
    pub sampling_delay: bool,
}

impl LoopConfig {
    pub fn full() -> Self {
        LoopConfig {
            actuator: true,
            tail_wags_dog: true,
            drift: true,
            derivative_filter: true,
            beta0_filter: true,
            output_filter: true,
            exact_mu_c: false,
            sampling_delay: false,
        }
    }

    /// Filters bypassed, no actuator, TWD or drift, exact μ_c.
    pub fn perfect_inversion() -> Self {
        LoopConfig {
            actuator: false,
            tail_wags_dog: false,
            drift: false,
            derivative_filter: false,
            beta0_filter: false,
            output_filter: false,
            exact_mu_c: true,
            sampling_delay: false,
        }
    }
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopState {
    W,
    Theta,
    Q,
    Beta,
    BetaDot,
    QdotFilter,
    Beta0Filter,
    OutputFilter,
    Pade,
}

impl LoopState {
    pub fn name(self) -> &'static str {
        match self {
            LoopState::W => "w",
            LoopState::Theta => "theta",
            LoopState::Q => "q",
            LoopState::Beta => "beta",
            LoopState::BetaDot => "beta_dot",
            LoopState::QdotFilter => "qdot_filter",
            LoopState::Beta0Filter => "beta0_filter",
            LoopState::OutputFilter => "output_filter",
            LoopState::Pade => "pade",
        }
    }
}

/// The launcher, actuator and controller frozen at one flight time, as a
/// continuous system with one input and one output at the cut channel.
#[derive(Debug, Clone)]
pub struct LauncherLoop {
    point: TrajectoryPoint,
    kind: ControllerKind,
    channel: LoopChannel,
    config: LoopConfig,
    gains: Gains,
    mu_c: f64,
    tuning: TuningParams,
    /// Padé time constant (s), when a delay is modelled.
    tau: Option<f64>,
    states: Vec<LoopState>,
}

impl LauncherLoop {
    pub fn new(scenario: &SimScenario, t: f64, channel: LoopChannel, config: LoopConfig) -> Result<Self> {
        let kind = scenario.controller;
        if channel == LoopChannel::NuToTheta && !kind.is_indi() {
            return Err(Error::invalid(format!("controller {kind} has no virtual control channel")));
        }
        let point = scenario.plant_point(t)?;
        let controller = scenario.build_controller()?;
        let gains = controller.schedule().lookup(t);
        let mu_c = if config.exact_mu_c { plant_coefficients(&point).mu_c } else { gains.mu_c };
        let delay = (if config.sampling_delay { 0.5 } else { 0.0 } + scenario.tvc_delay_samples as f64)
            * scenario.rates.gnc_dt();
        let tau = (delay > 0.0).then_some(delay);

        let uses_qdot = matches!(kind, ControllerKind::PdQdot | ControllerKind::Indi | ControllerKind::IndiLpf);
        let mut states = Vec::new();
        if config.drift {
            states.push(LoopState::W);
        }
        states.extend([LoopState::Theta, LoopState::Q]);
        if config.actuator {
            states.extend([LoopState::Beta, LoopState::BetaDot]);
        }
        if uses_qdot && config.derivative_filter {
            states.push(LoopState::QdotFilter);
        }
        if kind.is_indi() && config.beta0_filter && scenario.beta0_source == Beta0Source::CommandFilter {
            states.push(LoopState::Beta0Filter);
        }
        if kind == ControllerKind::IndiLpf && config.output_filter {
            states.push(LoopState::OutputFilter);
        }
        if tau.is_some() {
            states.push(LoopState::Pade);
        }
        Ok(LauncherLoop {
            point,
            kind,
            channel,
            config,
            gains,
            mu_c,
            tuning: scenario.tuning,
            tau,
            states,
        })
    }

    pub fn states(&self) -> &[LoopState] {
        &self.states
    }

    pub fn point(&self) -> &TrajectoryPoint {
        &self.point
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    /// Control effectiveness used by the inversion.
    pub fn inversion_mu_c(&self) -> f64 {
        self.mu_c
    }

    fn has(&self, s: LoopState) -> bool {
        self.states.contains(&s)
    }

    fn get(&self, x: &[f64], s: LoopState) -> f64 {
        self.states.iter().position(|&k| k == s).map_or(0.0, |i| x[i])
    }

    fn effects(&self) -> PlantEffects {
        PlantEffects {
            drift: self.config.drift,
            tail_wags_dog: self.config.tail_wags_dog && self.config.actuator,
        }
    }

    /// Deflection reaching the actuator (or the plant) for a controller command.
    fn delayed(&self, x: &[f64], cmd: f64) -> f64 {
        if self.tau.is_some() {
            2.0 * self.get(x, LoopState::Pade) - cmd
        } else {
            cmd
        }
    }

    fn accel(&self, plant: &PlantState, beta: f64) -> f64 {
        plant_derivatives_with(self.effects(), plant, &self.point, beta, 0.0, 0.0).q_dot
    }

    /// Returns (raw controller output, final command). `input` is ν for
    /// the INDI laws and the deflection command for the PD laws.
    fn command(&self, x: &[f64], input: f64, qdot: f64, beta0: f64) -> Result<(f64, f64)> {
        let raw = if self.kind.is_indi() {
            if self.mu_c == 0.0 || !self.mu_c.is_finite() {
                return Err(Error::Singular(format!("INDI inversion with mu_c = {}", self.mu_c)));
            }
            beta0 - (input - qdot) / self.mu_c
        } else {
            input
        };
        let cmd = if self.has(LoopState::OutputFilter) { self.get(x, LoopState::OutputFilter) } else { raw };
        Ok((raw, cmd))
    }

    fn signals(&self, x: &[f64], input: f64) -> Result<Signals> {
        use LoopState::*;
        let plant = PlantState { z: 0.0, w: self.get(x, W), theta: self.get(x, Theta), q: self.get(x, Q) };
        let actuator = self.config.actuator;
        let beta0 = if !self.kind.is_indi() {
            0.0
        } else if self.has(Beta0Filter) {
            self.get(x, Beta0Filter)
        } else if actuator {
            self.get(x, Beta)
        } else {
            0.0
        };
        let uses_qdot = self.kind != ControllerKind::Pd;
        let filtered = self.has(QdotFilter);
        let mut qdot = if filtered {
            self.tuning.omega_qdot * (plant.q - self.get(x, QdotFilter))
        } else if uses_qdot && (actuator || self.kind.is_indi()) {
            self.accel(&plant, if actuator { self.get(x, Beta) } else { beta0 })
        } else {
            0.0
        };
        let (raw, cmd) = self.command(x, input, qdot, beta0)?;
        let applied = self.delayed(x, cmd);
        if uses_qdot && !filtered && !actuator && !self.kind.is_indi() {
            qdot = self.accel(&plant, applied);
        }
        Ok(Signals { plant, qdot, raw, cmd, applied })
    }
}

struct Signals {
    plant: PlantState,
    qdot: f64,
    raw: f64,
    cmd: f64,
    applied: f64,
}

impl ContinuousSystem for LauncherLoop {
    fn n_states(&self) -> usize {
        self.states.len()
    }

    fn n_inputs(&self) -> usize {
        1
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn derivatives(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        use LoopState::*;
        let Signals { plant, raw, cmd, applied, .. } = self.signals(x, u[0])?;
        let cfg = &self.config;
        let (beta, beta_dot, beta_ddot) = if cfg.actuator {
            let (b, bd) = (self.get(x, Beta), self.get(x, BetaDot));
            (b, bd, TVC_OMEGA * TVC_OMEGA * (applied - b) - TVC_DAMPING_COEFF * bd)
        } else {
            (applied, 0.0, 0.0)
        };
        let d = plant_derivatives_with(self.effects(), &plant, &self.point, beta, beta_ddot, 0.0);

        Ok(self
            .states
            .iter()
            .map(|s| match s {
                W => d.w_dot,
                Theta => d.theta_dot,
                Q => d.q_dot,
                Beta => beta_dot,
                BetaDot => beta_ddot,
                QdotFilter => self.tuning.omega_qdot * (plant.q - self.get(x, QdotFilter)),
                Beta0Filter => self.tuning.omega_beta0 * (cmd - self.get(x, Beta0Filter)),
                OutputFilter => self.tuning.omega_beta * (raw - self.get(x, OutputFilter)),
                Pade => 2.0 / self.tau.unwrap_or(1.0) * (cmd - self.get(x, Pade)),
            })
            .collect())
    }

    fn outputs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let theta = self.get(x, LoopState::Theta);
        Ok(vec![match self.channel {
            LoopChannel::NuToTheta => theta,
            LoopChannel::ThetaerrToTheta => {
                let s = self.signals(x, u[0])?;
                let g = &self.gains;
                let ka = if self.kind == ControllerKind::PdQdot { g.ka } else { 0.0 };
                g.kp * theta + g.kd * s.plant.q + ka * s.qdot
            }
        }])
    }
}

/// Linear model of the closed loop at flight time `t`, cut at `channel`,
/// about the zero-error trim with parameters frozen at `t`. Wind and sensor
/// noise play no part.
pub fn linearize_closed_loop(
    scenario: &SimScenario,
    t: f64,
    channel: LoopChannel,
    config: &LoopConfig,
) -> Result<LinearSystem> {
    let model = LauncherLoop::new(scenario, t, channel, *config)?;
    let x0 = vec![0.0; model.n_states()];
    linearize(&model, &x0, &[0.0])
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linear::freq::{default_grid, FrequencyDomain};
    use crate::trajectory::{synth_reference_trajectory, SynthProfile};

    struct Pendulum;

    impl ContinuousSystem for Pendulum {
        fn n_states(&self) -> usize {
            2
        }
        fn n_inputs(&self) -> usize {
            1
        }
        fn n_outputs(&self) -> usize {
            1
        }
        fn derivatives(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[1], -3.0 * x[0].sin() - 0.2 * x[1] + u[0] * x[0].cos()])
        }
        fn outputs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0].exp() + u[0]])
        }
    }

    #[test]
    fn pendulum_jacobian() {
        let x0 = [0.4, 0.0];
        let lin = linearize(&Pendulum, &x0, &[0.5]).unwrap();
        let a10 = -3.0 * 0.4f64.cos() - 0.5 * 0.4f64.sin();
        assert!((lin.a[(1, 0)] - a10).abs() < 1e-8);
        assert!((lin.a[(1, 1)] + 0.2).abs() < 1e-9);
        assert!((lin.b[(1, 0)] - 0.4f64.cos()).abs() < 1e-9);
        assert!((lin.c[(0, 0)] - 0.4f64.exp()).abs() < 1e-8);
        assert!((lin.d[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_order_step_refinement() {
        // Large steps expose the truncation error; halving the step should
        // cut it by about four.
        let x0 = [0.9, 0.0];
        let exact = -3.0 * 0.9f64.cos();
        let err = |h: f64| {
            let c = column(&Pendulum, &x0, &[0.0], 0, h).unwrap();
            (c[1] - exact).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn rejects_mismatched_operating_point() {
        assert!(linearize(&Pendulum, &[0.0], &[0.0]).is_err());
    }

    struct Kink;

    impl ContinuousSystem for Kink {
        fn n_states(&self) -> usize {
            1
        }
        fn n_inputs(&self) -> usize {
            1
        }
        fn n_outputs(&self) -> usize {
            1
        }
        fn derivatives(&self, x: &[f64], _u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![(x[0] - 1.5e-6).abs()])
        }
        fn outputs(&self, x: &[f64], _u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[0]])
        }
    }

    #[test]
    fn kink_is_ill_conditioned() {
        match linearize(&Kink, &[0.0], &[0.0]) {
            Err(Error::IllConditioned(_)) => {}
            other => panic!("expected ill-conditioned, got {other:?}"),
        }
    }

    fn scenario(kind: ControllerKind) -> SimScenario {
        let table = Arc::new(synth_reference_trajectory(80.0, &SynthProfile::default()).unwrap());
        SimScenario::new(table, kind)
    }

    #[test]
    fn perfect_inversion_is_double_integrator() {
        for kind in [ControllerKind::Indi, ControllerKind::IndiLpf] {
            let s = scenario(kind);
            let sys = linearize_closed_loop(&s, 35.0, LoopChannel::NuToTheta, &LoopConfig::perfect_inversion()).unwrap();
            assert_eq!(sys.n_states(), 2);
            for w in default_grid() {
                let g = sys.eval(w).unwrap();
                let ideal = -1.0 / (w * w);
                assert!((g.re - ideal).abs() <= 1e-6 * ideal.abs() && g.im.abs() <= 1e-6 * ideal.abs());
            }
        }
    }

    #[test]
    fn pd_channel_restrictions() {
        let s = scenario(ControllerKind::Pd);
        assert!(linearize_closed_loop(&s, 10.0, LoopChannel::NuToTheta, &LoopConfig::full()).is_err());
        let sys = linearize_closed_loop(&s, 10.0, LoopChannel::ThetaerrToTheta, &LoopConfig::full()).unwrap();
        assert_eq!(sys.n_states(), 5);
    }

    #[test]
    fn full_state_layout() {
        let mut s = scenario(ControllerKind::IndiLpf);
        s.tvc_delay_samples = 1;
        let m = LauncherLoop::new(&s, 10.0, LoopChannel::NuToTheta, LoopConfig::full()).unwrap();
        assert_eq!(m.n_states(), 9);
        s.beta0_source = Beta0Source::Actuator;
        let m = LauncherLoop::new(&s, 10.0, LoopChannel::NuToTheta, LoopConfig::full()).unwrap();
        assert!(!m.states().contains(&LoopState::Beta0Filter));
    }
}

//! Attitude control laws, their tuning rules and the discrete filters they use.
//!
//! Sign conventions follow the plant: a positive deflection produces a
//! negative pitch acceleration (`q̇ ≈ μ_α α − μ_c β`), so the scheduled PD
//! gains come out negative.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{plant_coefficients, PlantCoefficients, TrajectoryTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Scheduled PD.
    Pd,
    /// Scheduled PD with angular-acceleration feedback.
    PdQdot,
    /// Incremental nonlinear dynamic inversion.
    Indi,
    /// INDI with a first-order low-pass filter on its output.
    IndiLpf,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] =
        [ControllerKind::Pd, ControllerKind::PdQdot, ControllerKind::Indi, ControllerKind::IndiLpf];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Pd => "pd",
            ControllerKind::PdQdot => "pd_qdot",
            ControllerKind::Indi => "indi",
            ControllerKind::IndiLpf => "indi_lpf",
        }
    }

    pub fn is_indi(self) -> bool {
        matches!(self, ControllerKind::Indi | ControllerKind::IndiLpf)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown controller `{s}` (pd, pd_qdot, indi, indi_lpf)")))
    }
}

/// Closed-loop targets and filter bandwidths shared by all controllers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningParams {
    pub omega_theta: f64,
    pub zeta: f64,
    /// Steady-state gain target of the acceleration-feedback PD.
    #[serde(rename = "G0")]
    pub g0: f64,
    /// Derivative (q̇ estimation) filter bandwidth.
    pub omega_qdot: f64,
    /// INDI output low-pass bandwidth.
    pub omega_beta: f64,
    /// Bandwidth of the low-pass that estimates the applied deflection β₀.
    pub omega_beta0: f64,
    /// Number of scheduling nodes spread evenly over the trajectory.
    pub nodes: usize,
}

impl Default for TuningParams {
    fn default() -> Self {
        TuningParams {
            omega_theta: 2.5,
            zeta: 0.8,
            g0: 1.05,
            omega_qdot: 15.0,
            omega_beta: 10.0,
            omega_beta0: 30.0,
            nodes: 9,
        }
    }
}

impl TuningParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_theta > 0.0
            && self.zeta > 0.0
            && self.zeta < 2.0
            && self.g0.is_finite()
            && self.g0 != 1.0
            && self.omega_qdot > 0.0
            && self.omega_beta > 0.0
            && self.omega_beta0 > 0.0
            && self.nodes >= 2;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid tuning parameters {self:?}")))
        }
    }

    /// Outer-loop gains of the INDI controller: (ω², 2ζω).
    pub fn indi_outer_gains(&self) -> (f64, f64) {
        (self.omega_theta * self.omega_theta, 2.0 * self.zeta * self.omega_theta)
    }
}

/// Design model at one scheduling node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeModel {
    pub t: f64,
    pub coeffs: PlantCoefficients,
    pub airspeed: f64,
    pub aero_arm: f64,
}

impl NodeModel {
    /// Aerodynamic damping coefficient l_α μ_α / V.
    pub fn aero_damping(&self) -> f64 {
        self.aero_arm * self.coeffs.mu_alpha / self.airspeed
    }
}

/// `n` evenly spaced design points over the (nominal) trajectory.
pub fn schedule_nodes(table: &TrajectoryTable, n: usize) -> Result<Vec<NodeModel>> {
    if n < 2 {
        return Err(Error::invalid("a gain schedule needs at least 2 nodes"));
    }
    (0..n)
        .map(|i| {
            let t = table.start() + table.duration() * i as f64 / (n - 1) as f64;
            let p = table.sample(t)?;
            Ok(NodeModel {
                t,
                coeffs: plant_coefficients(&p),
                airspeed: p.airspeed,
                aero_arm: p.aero_arm,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    pub kp: f64,
    pub kd: f64,
    pub ka: f64,
    /// Control effectiveness used by the INDI inversion.
    pub mu_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleNode {
    pub t: f64,
    pub gains: Gains,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    nodes: Vec<ScheduleNode>,
}

impl GainSchedule {
    pub fn new(nodes: Vec<ScheduleNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("empty gain schedule"));
        }
        if nodes.windows(2).any(|w| w[1].t <= w[0].t) {
            return Err(Error::invalid("gain schedule node times must be strictly increasing"));
        }
        let finite = |g: &Gains| [g.kp, g.kd, g.ka, g.mu_c].iter().all(|v| v.is_finite());
        if !nodes.iter().all(|n| finite(&n.gains)) {
            return Err(Error::NonFinite("gain schedule entry".into()));
        }
        Ok(GainSchedule { nodes })
    }

    pub fn nodes(&self) -> &[ScheduleNode] {
        &self.nodes
    }

    /// Linear interpolation per channel, clamped to the end nodes.
    pub fn lookup(&self, t: f64) -> Gains {
        let n = &self.nodes;
        if t <= n[0].t {
            return n[0].gains;
        }
        if t >= n[n.len() - 1].t {
            return n[n.len() - 1].gains;
        }
        let i = n.partition_point(|x| x.t <= t);
        let (a, b) = (&n[i - 1], &n[i]);
        if t == a.t {
            return a.gains;
        }
        let s = (t - a.t) / (b.t - a.t);
        let mix = |x: f64, y: f64| x + s * (y - x);
        Gains {
            kp: mix(a.gains.kp, b.gains.kp),
            kd: mix(a.gains.kd, b.gains.kd),
            ka: mix(a.gains.ka, b.gains.ka),
            mu_c: mix(a.gains.mu_c, b.gains.mu_c),
        }
    }
}

fn check_mu_c(node: &NodeModel) -> Result<f64> {
    let mu_c = node.coeffs.mu_c;
    if mu_c == 0.0 || !mu_c.is_finite() {
        return Err(Error::Singular(format!("mu_c = {mu_c} at node t = {}", node.t)));
    }
    Ok(mu_c)
}

/// PD pole placement at one node: returns (kP, kD).
pub fn pd_gains(node: &NodeModel, tuning: &TuningParams) -> Result<(f64, f64)> {
    let mu_c = check_mu_c(node)?;
    let w = tuning.omega_theta;
    let kp = -(node.coeffs.mu_alpha + w * w) / mu_c;
    let kd = (node.aero_damping() - 2.0 * tuning.zeta * w) / mu_c;
    Ok((kp, kd))
}

/// Acceleration-feedback PD at one node: returns (kP, kD, kA).
pub fn pd_qdot_gains(node: &NodeModel, tuning: &TuningParams) -> Result<(f64, f64, f64)> {
    let mu_c = check_mu_c(node)?;
    if tuning.g0 == 1.0 {
        return Err(Error::Singular("G0 = 1 leaves kP undefined".into()));
    }
    let mu_a = node.coeffs.mu_alpha;
    let w = tuning.omega_theta;
    let kp = mu_a / mu_c * tuning.g0 / (1.0 - tuning.g0);
    let ka = (1.0 + (mu_a + mu_c * kp) / (w * w)) / mu_c;
    let kd = (node.aero_damping() - 2.0 * tuning.zeta * w * (1.0 - mu_c * ka)) / mu_c;
    Ok((kp, kd, ka))
}

pub fn tune_pd(nodes: &[NodeModel], tuning: &TuningParams) -> Result<GainSchedule> {
    let entries = nodes
        .iter()
        .map(|n| {
            let (kp, kd) = pd_gains(n, tuning)?;
            Ok(ScheduleNode { t: n.t, gains: Gains { kp, kd, ka: 0.0, mu_c: n.coeffs.mu_c } })
        })
        .collect::<Result<Vec<_>>>()?;
    GainSchedule::new(entries)
}

pub fn tune_pd_qdot(nodes: &[NodeModel], tuning: &TuningParams) -> Result<GainSchedule> {
    let entries = nodes
        .iter()
        .map(|n| {
            let (kp, kd, ka) = pd_qdot_gains(n, tuning)?;
            Ok(ScheduleNode { t: n.t, gains: Gains { kp, kd, ka, mu_c: n.coeffs.mu_c } })
        })
        .collect::<Result<Vec<_>>>()?;
    GainSchedule::new(entries)
}

/// INDI needs only the μ_c grid; the outer gains are constant.
pub fn tune_indi(nodes: &[NodeModel], tuning: &TuningParams) -> Result<GainSchedule> {
    let (kp, kd) = tuning.indi_outer_gains();
    let entries = nodes
        .iter()
        .map(|n| {
            let mu_c = check_mu_c(n)?;
            Ok(ScheduleNode { t: n.t, gains: Gains { kp, kd, ka: 0.0, mu_c } })
        })
        .collect::<Result<Vec<_>>>()?;
    GainSchedule::new(entries)
}

pub fn tune(kind: ControllerKind, nodes: &[NodeModel], tuning: &TuningParams) -> Result<GainSchedule> {
    tuning.validate()?;
    match kind {
        ControllerKind::Pd => tune_pd(nodes, tuning),
        ControllerKind::PdQdot => tune_pd_qdot(nodes, tuning),
        ControllerKind::Indi | ControllerKind::IndiLpf => tune_indi(nodes, tuning),
    }
}

/// Tustin realization of `ω s / (s + ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeFilter {
    pub omega: f64,
    prev_in: f64,
    prev_out: f64,
}

impl DerivativeFilter {
    pub fn new(omega: f64) -> Self {
        DerivativeFilter { omega, prev_in: 0.0, prev_out: 0.0 }
    }

    pub fn output(&self) -> f64 {
        self.prev_out
    }

    pub fn step(&mut self, x: f64, dt: f64) -> f64 {
        let a = 2.0 / dt;
        let w = self.omega;
        let y = (w * a * (x - self.prev_in) - (w - a) * self.prev_out) / (a + w);
        self.prev_in = x;
        self.prev_out = y;
        y
    }
}

/// Tustin realization of `ω / (s + ω)`; unit DC gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    pub omega: f64,
    prev_in: f64,
    prev_out: f64,
}

impl LowPass {
    pub fn new(omega: f64) -> Self {
        LowPass { omega, prev_in: 0.0, prev_out: 0.0 }
    }

    pub fn output(&self) -> f64 {
        self.prev_out
    }

    pub fn step(&mut self, x: f64, dt: f64) -> f64 {
        let a = 2.0 / dt;
        let w = self.omega;
        let y = (w * (x + self.prev_in) - (w - a) * self.prev_out) / (a + w);
        self.prev_in = x;
        self.prev_out = y;
        y
    }
}

/// β = kP (θ_cmd − θ) − kD q
pub fn pd_command(g: &Gains, theta_cmd: f64, theta: f64, q: f64) -> f64 {
    g.kp * (theta_cmd - theta) - g.kd * q
}

/// β = kP (θ_cmd − θ) − kD q − kA q̇
pub fn pd_qdot_command(g: &Gains, theta_cmd: f64, theta: f64, q: f64, qdot: f64) -> f64 {
    g.kp * (theta_cmd - theta) - g.kd * q - g.ka * qdot
}

/// Outer loop of the INDI controller: ν = kP (θ_cmd − θ) − kD q.
pub fn virtual_control(kp: f64, kd: f64, theta_cmd: f64, theta: f64, q: f64) -> f64 {
    kp * (theta_cmd - theta) - kd * q
}

/// Incremental inversion β = β₀ − (ν − q̇₀) / μ_c.
pub fn indi_command(beta0: f64, nu: f64, qdot0: f64, mu_c: f64) -> Result<f64> {
    if mu_c == 0.0 || !mu_c.is_finite() {
        return Err(Error::Singular(format!("INDI inversion with mu_c = {mu_c}")));
    }
    Ok(beta0 - (nu - qdot0) / mu_c)
}

/// Where the INDI controller takes its β₀ from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Beta0Source {
    /// Low-pass of the previously issued command.
    #[default]
    CommandFilter,
    /// The measured actuator deflection.
    Actuator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub qdot_filter: DerivativeFilter,
    pub beta0_filter: LowPass,
    pub output_filter: LowPass,
    pub prev_cmd: f64,
    pub prev_nu: f64,
}

impl ControllerState {
    fn new(tuning: &TuningParams) -> Self {
        ControllerState {
            qdot_filter: DerivativeFilter::new(tuning.omega_qdot),
            beta0_filter: LowPass::new(tuning.omega_beta0),
            output_filter: LowPass::new(tuning.omega_beta),
            prev_cmd: 0.0,
            prev_nu: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub beta_cmd: f64,
    pub qdot_est: f64,
    /// Virtual control, only for the INDI controllers.
    pub nu: Option<f64>,
}

/// A discrete controller stepped once per GNC tick.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: ControllerKind,
    tuning: TuningParams,
    schedule: GainSchedule,
    beta0_source: Beta0Source,
    state: ControllerState,
}

impl Controller {
    pub fn new(
        kind: ControllerKind,
        tuning: TuningParams,
        schedule: GainSchedule,
        beta0_source: Beta0Source,
    ) -> Result<Self> {
        tuning.validate()?;
        Ok(Controller { kind, tuning, schedule, beta0_source, state: ControllerState::new(&tuning) })
    }

    /// Tunes on the nominal trajectory and builds the controller.
    pub fn from_table(
        kind: ControllerKind,
        tuning: TuningParams,
        nominal: &TrajectoryTable,
        beta0_source: Beta0Source,
    ) -> Result<Self> {
        let nodes = schedule_nodes(nominal, tuning.nodes)?;
        let schedule = tune(kind, &nodes, &tuning)?;
        Self::new(kind, tuning, schedule, beta0_source)
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn schedule(&self) -> &GainSchedule {
        &self.schedule
    }

    pub fn tuning(&self) -> &TuningParams {
        &self.tuning
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = ControllerState::new(&self.tuning);
    }

    /// One control computation on sampled measurements.
    pub fn step(
        &mut self,
        t: f64,
        theta_cmd: f64,
        theta_meas: f64,
        q_meas: f64,
        beta_meas: f64,
        dt: f64,
    ) -> Result<ControlOutput> {
        let gains = self.schedule.lookup(t);
        let qdot_est = self.state.qdot_filter.step(q_meas, dt);
        let out = match self.kind {
            ControllerKind::Pd => ControlOutput {
                beta_cmd: pd_command(&gains, theta_cmd, theta_meas, q_meas),
                qdot_est,
                nu: None,
            },
            ControllerKind::PdQdot => ControlOutput {
                beta_cmd: pd_qdot_command(&gains, theta_cmd, theta_meas, q_meas, qdot_est),
                qdot_est,
                nu: None,
            },
            ControllerKind::Indi | ControllerKind::IndiLpf => {
                let beta0 = match self.beta0_source {
                    Beta0Source::CommandFilter => self.state.beta0_filter.step(self.state.prev_cmd, dt),
                    Beta0Source::Actuator => beta_meas,
                };
                let nu = virtual_control(gains.kp, gains.kd, theta_cmd, theta_meas, q_meas);
                let raw = indi_command(beta0, nu, qdot_est, gains.mu_c)?;
                let beta_cmd = if self.kind == ControllerKind::IndiLpf {
                    self.state.output_filter.step(raw, dt)
                } else {
                    raw
                };
                self.state.prev_nu = nu;
                ControlOutput { beta_cmd, qdot_est, nu: Some(nu) }
            }
        };
        self.state.prev_cmd = out.beta_cmd;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn node(mu_alpha: f64, mu_c: f64, damping: f64) -> NodeModel {
        NodeModel {
            t: 0.0,
            coeffs: PlantCoefficients { mu_alpha, mu_c, mu_n: 0.0, n_alpha: 0.0, n_c: 0.0, n_n: 0.0 },
            airspeed: 1.0,
            aero_arm: if mu_alpha == 0.0 { 0.0 } else { damping / mu_alpha },
        }
    }

    #[test]
    fn pd_gain_example() {
        let (kp, kd) = pd_gains(&node(0.0, 1.0, 0.0), &TuningParams::default()).unwrap();
        assert_relative_eq!(kp, -6.25);
        assert_relative_eq!(kd, -4.0);
        assert!(pd_gains(&node(1.0, 0.0, 0.0), &TuningParams::default()).is_err());
    }

    #[test]
    fn pd_qdot_gain_example() {
        let (kp, kd, ka) = pd_qdot_gains(&node(1.0, 1.0, 0.0), &TuningParams::default()).unwrap();
        assert_relative_eq!(kp, -21.0, max_relative = 1e-12);
        assert_relative_eq!(ka, -2.2, max_relative = 1e-12);
        assert_relative_eq!(kd, -12.8, max_relative = 1e-12);

        let (kp, _, _) = pd_qdot_gains(&node(0.0, 3.0, 0.0), &TuningParams::default()).unwrap();
        assert_eq!(kp, 0.0);

        let tuning = TuningParams { g0: 1.0, ..Default::default() };
        assert!(pd_qdot_gains(&node(1.0, 1.0, 0.0), &tuning).is_err());
        assert!(pd_qdot_gains(&node(1.0, 0.0, 0.0), &TuningParams::default()).is_err());
    }

    #[test]
    fn indi_outer_gains() {
        assert_eq!(TuningParams::default().indi_outer_gains(), (6.25, 4.0));
    }

    #[test]
    fn lookup_nodes_midpoint_and_clamp() {
        let sched = GainSchedule::new(vec![
            ScheduleNode { t: 0.0, gains: Gains { kp: 1.0, kd: 2.0, ka: 0.0, mu_c: 10.0 } },
            ScheduleNode { t: 10.0, gains: Gains { kp: 3.0, kd: 4.0, ka: 1.0, mu_c: 20.0 } },
        ])
        .unwrap();
        assert_eq!(sched.lookup(0.0).kp, 1.0);
        assert_eq!(sched.lookup(10.0).mu_c, 20.0);
        let mid = sched.lookup(5.0);
        assert_eq!((mid.kp, mid.kd, mid.ka, mid.mu_c), (2.0, 3.0, 0.5, 15.0));
        assert_eq!(sched.lookup(25.0), sched.lookup(10.0));
        assert_eq!(sched.lookup(-3.0), sched.lookup(0.0));
        assert!(GainSchedule::new(vec![]).is_err());
    }

    #[test]
    fn derivative_filter_dc_and_ramp() {
        let dt = 0.04;
        let mut f = DerivativeFilter::new(15.0);
        for _ in 0..500 {
            f.step(2.0, dt);
        }
        assert!(f.output().abs() < 1e-12);

        let mut f = DerivativeFilter::new(15.0);
        for k in 0..500 {
            f.step(k as f64 * dt, dt);
        }
        assert_relative_eq!(f.output(), 1.0, max_relative = 1e-10);
    }

    #[test]
    fn lowpass_dc_and_zero() {
        let mut f = LowPass::new(10.0);
        assert_eq!(f.step(0.0, 0.04), 0.0);
        for _ in 0..500 {
            f.step(0.3, 0.04);
        }
        assert_relative_eq!(f.output(), 0.3, max_relative = 1e-12);
    }

    /// Steady-state sinusoidal amplitude of a discrete filter, measured by
    /// simulation; compared with the bilinear-warped continuous response.
    fn measured_gain(mut step: impl FnMut(f64) -> f64, omega: f64, dt: f64) -> f64 {
        let n = 20_000;
        let mut peak: f64 = 0.0;
        for k in 0..n {
            let y = step((omega * k as f64 * dt).sin());
            if k > n / 2 {
                peak = peak.max(y.abs());
            }
        }
        peak
    }

    #[test]
    fn filters_at_corner_frequency() {
        // Fine step so the bilinear warping is negligible.
        let dt = 1e-4;
        let mut lp = LowPass::new(10.0);
        let g = measured_gain(|x| lp.step(x, dt), 10.0, dt);
        assert!((g - 1.0 / 2f64.sqrt()).abs() < 2e-3, "{g}");

        let mut d = DerivativeFilter::new(15.0);
        let g = measured_gain(|x| d.step(x, dt), 15.0, dt);
        assert!((g - 15.0 / 2f64.sqrt()).abs() < 15.0 * 2e-3, "{g}");
    }

    #[test]
    fn law_examples() {
        let g = Gains { kp: -6.25, kd: -4.0, ka: -2.2, mu_c: 1.0 };
        assert_eq!(pd_command(&g, 0.2, 0.2, 0.0), 0.0);
        assert_relative_eq!(pd_command(&g, 0.1, 0.0, 0.0), -0.625);
        assert_relative_eq!(pd_command(&g, 0.0, 0.0, 1.0), 4.0);
        assert_eq!(pd_qdot_command(&g, 0.0, 0.0, 0.0, 0.0), 0.0);
        let ka_only = Gains { kp: 0.0, kd: 0.0, ..g };
        assert_relative_eq!(pd_qdot_command(&ka_only, 0.0, 0.0, 0.0, 1.0), 2.2);

        assert_eq!(indi_command(0.3, 1.5, 1.5, 7.0).unwrap(), 0.3);
        assert_eq!(indi_command(0.0, 1.0, 0.0, 1.0).unwrap(), -1.0);
        assert!(indi_command(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn indi_exact_increment() {
        // Control-affine plant with constant effectiveness: q̇ = f − μ_c β.
        let (f, mu_c) = (0.37, 12.5);
        let beta0 = 0.01;
        let qdot0 = f - mu_c * beta0;
        for nu in [-2.0, 0.0, 0.4, 3.0] {
            let beta = indi_command(beta0, nu, qdot0, mu_c).unwrap();
            let qdot = f - mu_c * beta;
            assert_relative_eq!(qdot - qdot0, nu - qdot0, max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn pd_qdot_acceleration_feedback_limit() {
        // Rate q = sin(ωt): the filtered derivative approaches ω cos(ωt).
        let g = Gains { kp: 0.0, kd: 0.0, ka: -2.2, mu_c: 1.0 };
        let omega = 1.0;
        let dt = 1e-3;
        let err_for = |bw: f64| {
            let tuning = TuningParams { omega_qdot: bw, ..Default::default() };
            let sched = GainSchedule::new(vec![ScheduleNode { t: 0.0, gains: g }]).unwrap();
            let mut c = Controller::new(ControllerKind::PdQdot, tuning, sched, Beta0Source::default()).unwrap();
            let mut worst: f64 = 0.0;
            for k in 0..20_000 {
                let t = k as f64 * dt;
                let out = c.step(t, 0.0, 0.0, (omega * t).sin(), 0.0, dt).unwrap();
                if t > 10.0 {
                    worst = worst.max((out.beta_cmd - 2.2 * omega * (omega * t).cos()).abs());
                }
            }
            worst
        };
        let (e10, e100, e1000) = (err_for(10.0), err_for(100.0), err_for(1000.0));
        assert!(e100 < e10 && e1000 < e100, "{e10} {e100} {e1000}");
        assert!(e1000 < 0.01);
    }

    #[test]
    fn controller_zero_state_zero_output() {
        let table = crate::trajectory::synth_reference_trajectory(
            80.0,
            &crate::trajectory::SynthProfile::default(),
        )
        .unwrap();
        for kind in ControllerKind::ALL {
            let mut c =
                Controller::from_table(kind, TuningParams::default(), &table, Beta0Source::default()).unwrap();
            for k in 0..50 {
                let out = c.step(k as f64 * 0.04, 0.0, 0.0, 0.0, 0.0, 0.04).unwrap();
                assert_eq!(out.beta_cmd, 0.0);
                assert_eq!(out.nu.is_some(), kind.is_indi());
            }
        }
    }

    #[test]
    fn parse_kind() {
        assert_eq!("indi_lpf".parse::<ControllerKind>().unwrap(), ControllerKind::IndiLpf);
        assert!("lqr".parse::<ControllerKind>().is_err());
    }
}

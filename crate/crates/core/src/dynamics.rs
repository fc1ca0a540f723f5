//! Rigid-body pitch/drift dynamics, TVC actuator and fixed-step integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::TrajectoryPoint;

/// TVC actuator natural frequency (rad/s).
pub const TVC_OMEGA: f64 = 67.8;
/// TVC actuator damping coefficient, the `s` term of the denominator (1/s).
pub const TVC_DAMPING_COEFF: f64 = 90.9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    /// Lateral drift (m).
    pub z: f64,
    /// Lateral drift rate (m/s).
    pub w: f64,
    /// Pitch attitude (rad).
    pub theta: f64,
    /// Pitch rate (rad/s).
    pub q: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ActuatorState {
    pub beta: f64,
    pub beta_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantDerivatives {
    pub z_dot: f64,
    pub w_dot: f64,
    pub theta_dot: f64,
    pub q_dot: f64,
}

/// Switches for the plant effects that reduced models drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantEffects {
    /// Lateral drift motion. When off, `w` is frozen and drops out of α.
    pub drift: bool,
    /// Nozzle moving-mass (tail-wags-dog) reactions.
    pub tail_wags_dog: bool,
}

impl Default for PlantEffects {
    fn default() -> Self {
        PlantEffects { drift: true, tail_wags_dog: true }
    }
}

pub fn dynamic_pressure(p: &TrajectoryPoint) -> f64 {
    p.dynamic_pressure()
}

/// α = θ + atan((w − l_α q − v_w) / V).
pub fn angle_of_attack(state: &PlantState, p: &TrajectoryPoint, v_w: f64) -> f64 {
    state.theta + ((state.w - p.aero_arm * state.q - v_w) / p.airspeed).atan()
}

pub fn plant_derivatives(
    state: &PlantState,
    p: &TrajectoryPoint,
    beta: f64,
    beta_ddot: f64,
    v_w: f64,
) -> PlantDerivatives {
    plant_derivatives_with(PlantEffects::default(), state, p, beta, beta_ddot, v_w)
}

/// Newton-Euler pitch and drift equations with aerodynamic, TVC and
/// tail-wags-dog forces and moments.
pub fn plant_derivatives_with(
    effects: PlantEffects,
    state: &PlantState,
    p: &TrajectoryPoint,
    beta: f64,
    beta_ddot: f64,
    v_w: f64,
) -> PlantDerivatives {
    let s = if effects.drift { *state } else { PlantState { w: 0.0, ..*state } };
    let alpha = angle_of_attack(&s, p, v_w);

    let f_aero = -p.ref_area * p.cn_alpha * p.dynamic_pressure() * alpha;
    let m_aero = -p.aero_arm * f_aero;
    let f_tvc = -p.thrust * beta.sin();
    let m_tvc = p.tvc_arm * f_tvc;
    let (f_twd, m_twd) = if effects.tail_wags_dog {
        let f = -p.nozzle_mass * p.nozzle_arm * beta_ddot;
        (f, p.tvc_arm * f - p.nozzle_inertia * beta_ddot)
    } else {
        (0.0, 0.0)
    };

    let w_dot = (f_aero + f_tvc + f_twd) / p.mass - p.gravity * s.theta.sin();
    let q_dot = (m_aero + m_tvc + m_twd) / p.inertia;
    if effects.drift {
        PlantDerivatives { z_dot: s.w, w_dot, theta_dot: s.q, q_dot }
    } else {
        PlantDerivatives { z_dot: 0.0, w_dot: 0.0, theta_dot: s.q, q_dot }
    }
}

/// Second-order TVC actuator: returns (β̇, β̈).
pub fn tvc_derivatives(act: &ActuatorState, beta_cmd: f64) -> (f64, f64) {
    let beta_ddot =
        TVC_OMEGA * TVC_OMEGA * (beta_cmd - act.beta) - TVC_DAMPING_COEFF * act.beta_dot;
    (act.beta_dot, beta_ddot)
}

/// One classical fourth-order Runge-Kutta step. Inputs captured by `f` are
/// held for the whole step.
pub fn rk4_step<const N: usize, F>(mut f: F, x: &[f64; N], t: f64, dt: f64) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("rk4 step must be > 0, got {dt}")));
    }
    let mut eval = |t: f64, x: &[f64; N]| -> Result<[f64; N]> {
        let d = f(t, x)?;
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state derivative at t = {t}")));
        }
        Ok(d)
    };
    let axpy = |a: f64, k: &[f64; N]| -> [f64; N] {
        let mut y = *x;
        for i in 0..N {
            y[i] += a * k[i];
        }
        y
    };
    let k1 = eval(t, x)?;
    let k2 = eval(t + 0.5 * dt, &axpy(0.5 * dt, &k1))?;
    let k3 = eval(t + 0.5 * dt, &axpy(0.5 * dt, &k2))?;
    let k4 = eval(t + dt, &axpy(dt, &k3))?;
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point() -> TrajectoryPoint {
        TrajectoryPoint {
            t: 0.0,
            mass: 50_000.0,
            inertia: 1.0e6,
            gravity: 9.81,
            thrust: 1.5e6,
            tvc_arm: 8.0,
            aero_arm: 10.0,
            ref_area: 5.0,
            cn_alpha: 3.0,
            rho: 0.5,
            airspeed: 100.0,
            nozzle_mass: 500.0,
            nozzle_arm: 1.0,
            nozzle_inertia: 700.0,
            theta0: 1.0,
        }
    }

    #[test]
    fn dynamic_pressure_examples() {
        let p = TrajectoryPoint { rho: 0.0, ..point() };
        assert_eq!(dynamic_pressure(&p), 0.0);
        let p = TrajectoryPoint { rho: 2.0, airspeed: 1.0, ..point() };
        assert_eq!(dynamic_pressure(&p), 1.0);
        let p = TrajectoryPoint { rho: 1.225, airspeed: 100.0, ..point() };
        assert_relative_eq!(dynamic_pressure(&p), 6125.0, max_relative = 1e-15);
    }

    #[test]
    fn angle_of_attack_examples() {
        let p = point();
        let s = PlantState { theta: 0.3, ..Default::default() };
        assert_eq!(angle_of_attack(&s, &p, 0.0), 0.3);

        let p0 = TrajectoryPoint { aero_arm: 0.0, ..point() };
        let s = PlantState { w: p0.airspeed, ..Default::default() };
        assert_relative_eq!(angle_of_attack(&s, &p0, 0.0), std::f64::consts::FRAC_PI_4);

        let s = PlantState { theta: 0.1, w: 5.0, q: 0.01, z: 0.0 };
        let expected = 0.1 + (2.9f64 / 100.0).atan();
        assert_relative_eq!(angle_of_attack(&s, &point(), 2.0), expected, max_relative = 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let d = plant_derivatives(&PlantState::default(), &point(), 0.0, 0.0, 0.0);
        assert_eq!((d.z_dot, d.w_dot, d.theta_dot, d.q_dot), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn twd_matches_mu_n() {
        let p = point();
        let c = crate::trajectory::plant_coefficients(&p);
        let d = plant_derivatives(&PlantState::default(), &p, 0.0, 3.0, 0.0);
        assert_relative_eq!(d.q_dot, -c.mu_n * 3.0, max_relative = 1e-13);
        assert_relative_eq!(d.w_dot, -c.n_n * 3.0, max_relative = 1e-13);
    }

    #[test]
    fn small_deflection_matches_mu_c() {
        let p = TrajectoryPoint { rho: 0.0, nozzle_mass: 0.0, nozzle_inertia: 0.0, ..point() };
        let c = crate::trajectory::plant_coefficients(&p);
        let beta = 1e-4;
        let d = plant_derivatives(&PlantState::default(), &p, beta, 0.0, 0.0);
        assert_relative_eq!(d.q_dot, -c.mu_c * beta, max_relative = 1e-8);
    }

    #[test]
    fn drift_switch_freezes_w() {
        let s = PlantState { w: 10.0, theta: 0.01, ..Default::default() };
        let eff = PlantEffects { drift: false, tail_wags_dog: true };
        let d = plant_derivatives_with(eff, &s, &point(), 0.0, 0.0, 0.0);
        assert_eq!((d.z_dot, d.w_dot), (0.0, 0.0));
        let d_ref = plant_derivatives(&PlantState { w: 0.0, ..s }, &point(), 0.0, 0.0, 0.0);
        assert_eq!(d.q_dot, d_ref.q_dot);
    }

    #[test]
    fn tvc_examples() {
        let (_, acc) = tvc_derivatives(&ActuatorState { beta: 0.2, beta_dot: 0.0 }, 0.2);
        assert_eq!(acc, 0.0);
        let (rate, acc) = tvc_derivatives(&ActuatorState::default(), 1.0);
        assert_eq!(rate, 0.0);
        assert_relative_eq!(acc, 4596.84, max_relative = 1e-12);
        let zeta = TVC_DAMPING_COEFF / (2.0 * TVC_OMEGA);
        assert!((zeta - 0.6704).abs() < 5e-5);
    }

    #[test]
    fn tvc_settles_to_command() {
        let mut x = [0.0, 0.0];
        for k in 0..2000 {
            x = rk4_step(
                |_, x: &[f64; 2]| {
                    let (a, b) = tvc_derivatives(&ActuatorState { beta: x[0], beta_dot: x[1] }, 0.05);
                    Ok([a, b])
                },
                &x,
                k as f64 * 1e-3,
                1e-3,
            )
            .unwrap();
        }
        assert_relative_eq!(x[0], 0.05, max_relative = 1e-12);
    }

    #[test]
    fn rk4_trivial_fields() {
        let x = rk4_step(|_, _: &[f64; 3]| Ok([0.0; 3]), &[1.0, 2.0, 3.0], 0.0, 0.1).unwrap();
        assert_eq!(x, [1.0, 2.0, 3.0]);
        let x = rk4_step(|_, _: &[f64; 1]| Ok([1.0]), &[2.0], 0.0, 0.25).unwrap();
        assert_eq!(x, [2.25]);
        assert!(rk4_step(|_, _: &[f64; 1]| Ok([f64::NAN]), &[0.0], 0.0, 0.1).is_err());
        assert!(rk4_step(|_, _: &[f64; 1]| Ok([0.0]), &[0.0], 0.0, 0.0).is_err());
    }

    /// Global error after one period of ẍ = −x, used for the order study.
    pub(crate) fn oscillator_period_error(steps: usize) -> f64 {
        let dt = 2.0 * std::f64::consts::PI / steps as f64;
        let mut x = [1.0, 0.0];
        for k in 0..steps {
            x = rk4_step(|_, x: &[f64; 2]| Ok([x[1], -x[0]]), &x, k as f64 * dt, dt).unwrap();
        }
        ((x[0] - 1.0).powi(2) + x[1].powi(2)).sqrt()
    }

    #[test]
    fn rk4_fourth_order() {
        let e1 = oscillator_period_error(40);
        let e2 = oscillator_period_error(80);
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }
}

use num_complex::Complex64;

use super::freq::{is_unstable_pole, FrequencyDomain};
use super::poly::Polynomial;
use crate::control::Gains;
use crate::dynamics::{TVC_DAMPING_COEFF, TVC_OMEGA};
use crate::error::{Error, Result};
use crate::trajectory::PlantCoefficients;

/// Rational SISO transfer function `num(s) / den(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub num: Polynomial,
    pub den: Polynomial,
}

impl TransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Singular("zero denominator".into()));
        }
        if num.coeffs().iter().chain(den.coeffs()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("transfer function coefficient".into()));
        }
        Ok(TransferFunction { num, den })
    }

    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num.to_vec()), Polynomial::new(den.to_vec()))
    }

    /// Denominator scaled to a unit leading coefficient.
    pub fn normalized(&self) -> Self {
        let lead = self.den.leading();
        TransferFunction { num: self.num.scale(1.0 / lead), den: self.den.scale(1.0 / lead) }
    }

    pub fn eval_s(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval_complex(s);
        if d.norm() == 0.0 {
            return Err(Error::Singular(format!("pole at s = {s}")));
        }
        Ok(self.num.eval_complex(s) / d)
    }

    pub fn dc_gain(&self) -> Result<f64> {
        Ok(self.eval_s(Complex64::new(0.0, 0.0))?.re)
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn series(&self, other: &TransferFunction) -> TransferFunction {
        TransferFunction { num: &self.num * &other.num, den: &self.den * &other.den }
    }

    /// Negative feedback `G / (1 + G H)` with `self` as G.
    pub fn feedback(&self, h: &TransferFunction) -> Result<TransferFunction> {
        let num = &self.num * &h.den;
        let den = &(&self.den * &h.den) + &(&self.num * &h.num);
        TransferFunction::new(num, den)
    }

    /// Same rational function (cross-multiplication), to a relative tolerance.
    pub fn equivalent(&self, other: &TransferFunction, tol: f64) -> bool {
        let lhs = &self.num * &other.den;
        let rhs = &other.num * &self.den;
        let diff = &lhs - &rhs;
        let scale = lhs.coeffs().iter().chain(rhs.coeffs()).fold(0.0f64, |m, c| m.max(c.abs()));
        diff.coeffs().iter().all(|c| c.abs() <= tol * scale.max(f64::MIN_POSITIVE))
    }
}

impl FrequencyDomain for TransferFunction {
    fn eval(&self, omega: f64) -> Result<Complex64> {
        self.eval_s(Complex64::new(0.0, omega))
    }

    fn unstable_pole_count(&self) -> Option<usize> {
        Some(self.poles().into_iter().filter(|&p| is_unstable_pole(p)).count())
    }
}

/// θ/β ≈ −μ_c / (s² + l_α (μ_α / V) s − μ_α): rigid-body pitch without drift or TWD.
pub fn simplified_attitude_tf(c: &PlantCoefficients, airspeed: f64, aero_arm: f64) -> Result<TransferFunction> {
    TransferFunction::from_coeffs(
        &[-c.mu_c],
        &[1.0, aero_arm * c.mu_alpha / airspeed, -c.mu_alpha],
    )
}

/// β→θ and β→w transfer functions of the coupled pitch/drift model, solved
/// by Cramer's rule over polynomials.
pub fn coupled_tf(
    c: &PlantCoefficients,
    airspeed: f64,
    aero_arm: f64,
    gravity: f64,
    theta0: f64,
) -> Result<(TransferFunction, TransferFunction)> {
    let v = airspeed;
    let a = Polynomial::new(vec![1.0, aero_arm * c.mu_alpha / v, -c.mu_alpha]);
    let b = Polynomial::constant(-c.mu_alpha / v);
    let cc = Polynomial::new(vec![-aero_arm * c.n_alpha / v, c.n_alpha + gravity * theta0.sin()]);
    let d = Polynomial::new(vec![1.0, c.n_alpha / v]);
    let e = Polynomial::new(vec![-c.mu_n, 0.0, -c.mu_c]);
    let f = Polynomial::new(vec![-c.n_n, 0.0, -c.n_c]);

    let det = &(&a * &d) - &(&b * &cc);
    if det.is_zero() {
        return Err(Error::Singular("coupled model determinant is identically zero".into()));
    }
    let theta_num = &(&e * &d) - &(&b * &f);
    let w_num = &(&a * &f) - &(&cc * &e);
    Ok((
        TransferFunction::new(theta_num, det.clone())?,
        TransferFunction::new(w_num, det)?,
    ))
}

/// θ/θ_cmd with the PD law closed around the simplified attitude model.
pub fn closed_loop_pd_tf(c: &PlantCoefficients, g: &Gains, airspeed: f64, aero_arm: f64) -> Result<TransferFunction> {
    TransferFunction::from_coeffs(
        &[-c.mu_c * g.kp],
        &[
            1.0,
            aero_arm * c.mu_alpha / airspeed - c.mu_c * g.kd,
            -(c.mu_alpha + c.mu_c * g.kp),
        ],
    )
}

/// θ/θ_cmd with the acceleration-feedback PD law.
pub fn closed_loop_pd_qdot_tf(
    c: &PlantCoefficients,
    g: &Gains,
    airspeed: f64,
    aero_arm: f64,
) -> Result<TransferFunction> {
    let k = 1.0 - c.mu_c * g.ka;
    if k.abs() < 1e-12 {
        return Err(Error::Singular(format!("1 - mu_c kA = {k}")));
    }
    TransferFunction::from_coeffs(
        &[-g.kp * c.mu_c / k],
        &[
            1.0,
            (aero_arm * c.mu_alpha / airspeed - c.mu_c * g.kd) / k,
            -(c.mu_alpha + c.mu_c * g.kp) / k,
        ],
    )
}

/// Second-order TVC actuator model.
pub fn tvc_tf() -> TransferFunction {
    let w2 = TVC_OMEGA * TVC_OMEGA;
    TransferFunction {
        num: Polynomial::constant(w2),
        den: Polynomial::new(vec![1.0, TVC_DAMPING_COEFF, w2]),
    }
}

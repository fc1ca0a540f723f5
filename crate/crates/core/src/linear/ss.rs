use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::freq::{is_unstable_pole, FrequencyDomain};
use super::linearize::ContinuousSystem;
use super::tf::TransferFunction;
use crate::error::{Error, Result};

/// Continuous-time state-space model ẋ = A x + B u, y = C x + D u.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let consistent = a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !consistent {
            return Err(Error::invalid(format!(
                "inconsistent dimensions A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        if [&a, &b, &c, &d].iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("state-space matrix entry".into()));
        }
        Ok(LinearSystem { a, b, c, d })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Controllable canonical realization of a proper transfer function.
    pub fn from_tf(tf: &TransferFunction) -> Result<Self> {
        let tf = tf.normalized();
        let n = tf.den.degree();
        let m = tf.num.degree();
        if m > n && !tf.num.is_zero() {
            return Err(Error::invalid("improper transfer function has no state-space realization"));
        }
        let a_coef: Vec<f64> = (1..=n).map(|k| tf.den.coeff(n - k)).collect();
        let b_coef: Vec<f64> = (0..=n).map(|k| tf.num.coeff(n - k)).collect();
        let d0 = b_coef[0];
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        for j in 0..n {
            a[(0, j)] = -a_coef[j];
            c[(0, j)] = b_coef[j + 1] - a_coef[j] * d0;
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        if n > 0 {
            b[(0, 0)] = 1.0;
        }
        LinearSystem::new(a, b, c, DMatrix::from_element(1, 1, d0))
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        if self.n_states() == 0 {
            return Vec::new();
        }
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Response of output `out` to input `inp` at s = jω.
    pub fn eval_channel(&self, omega: f64, out: usize, inp: usize) -> Result<Complex64> {
        if out >= self.n_outputs() || inp >= self.n_inputs() {
            return Err(Error::invalid(format!("no channel {inp} -> {out}")));
        }
        let n = self.n_states();
        let d = Complex64::new(self.d[(out, inp)], 0.0);
        if n == 0 {
            return Ok(d);
        }
        let s = Complex64::new(0.0, omega);
        let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
            let diag = if i == j { s } else { Complex64::new(0.0, 0.0) };
            diag - self.a[(i, j)]
        });
        let rhs = DVector::<Complex64>::from_fn(n, |i, _| Complex64::new(self.b[(i, inp)], 0.0));
        let x = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("jω = {s} is an eigenvalue of A")))?;
        let y = (0..n).fold(d, |acc, i| acc + x[i] * self.c[(out, i)]);
        if !y.re.is_finite() || !y.im.is_finite() {
            return Err(Error::Singular(format!("jω = {s} is an eigenvalue of A")));
        }
        Ok(y)
    }

    /// Unity negative feedback around a SISO system: the closed-loop state matrix.
    pub fn unity_feedback_matrix(&self) -> Result<DMatrix<f64>> {
        self.require_siso()?;
        let k = 1.0 + self.d[(0, 0)];
        if k == 0.0 {
            return Err(Error::Singular("1 + D = 0 in unity feedback".into()));
        }
        Ok(&self.a - &self.b * &self.c / k)
    }

    fn require_siso(&self) -> Result<()> {
        if self.n_inputs() == 1 && self.n_outputs() == 1 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "expected a SISO system, got {} inputs and {} outputs",
                self.n_inputs(),
                self.n_outputs()
            )))
        }
    }
}

impl FrequencyDomain for LinearSystem {
    fn eval(&self, omega: f64) -> Result<Complex64> {
        self.require_siso()?;
        self.eval_channel(omega, 0, 0)
    }

    fn unstable_pole_count(&self) -> Option<usize> {
        Some(self.eigenvalues().into_iter().filter(|&e| is_unstable_pole(e)).count())
    }
}

impl ContinuousSystem for LinearSystem {
    fn n_states(&self) -> usize {
        self.a.nrows()
    }

    fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    fn derivatives(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let x = DVector::from_column_slice(x);
        let u = DVector::from_column_slice(u);
        Ok((&self.a * x + &self.b * u).as_slice().to_vec())
    }

    fn outputs(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        let x = DVector::from_column_slice(x);
        let u = DVector::from_column_slice(u);
        Ok((&self.c * x + &self.d * u).as_slice().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_dimensions() {
        let a = DMatrix::zeros(2, 2);
        assert!(LinearSystem::new(a.clone(), DMatrix::zeros(3, 1), DMatrix::zeros(1, 2), DMatrix::zeros(1, 1)).is_err());
        assert!(LinearSystem::new(a, DMatrix::zeros(2, 1), DMatrix::zeros(1, 2), DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn realization_matches_transfer_function() {
        let tfs = [
            TransferFunction::from_coeffs(&[2.0, 3.0], &[1.0, 4.0, 6.25]).unwrap(),
            TransferFunction::from_coeffs(&[5.0, 1.0, 2.0], &[2.0, 3.0, 1.0]).unwrap(),
            TransferFunction::from_coeffs(&[-7.0], &[1.0, 0.3, -1.2, 0.5]).unwrap(),
        ];
        for tf in &tfs {
            let ss = LinearSystem::from_tf(tf).unwrap();
            for w in [0.013, 0.7, 3.0, 41.0] {
                let a = tf.eval(w).unwrap();
                let b = ss.eval(w).unwrap();
                assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "{tf:?} at {w}");
            }
        }
        let improper = TransferFunction::from_coeffs(&[1.0, 0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(LinearSystem::from_tf(&improper).is_err());
    }

    #[test]
    fn eigenvalues_and_unstable_count() {
        let tf = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0, -2.0]).unwrap();
        let ss = LinearSystem::from_tf(&tf).unwrap();
        assert_eq!(ss.unstable_pole_count(), Some(1));
        let mut re: Vec<f64> = ss.eigenvalues().iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_on_imaginary_eigenvalue() {
        let ss = LinearSystem::from_tf(&TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0]).unwrap()).unwrap();
        assert!(ss.eval(0.0).is_err());
        assert!((ss.eval(2.0).unwrap() - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn unity_feedback_poles() {
        // L = 2 / (s (s + 3)) closes to s² + 3s + 2.
        let ss = LinearSystem::from_tf(&TransferFunction::from_coeffs(&[2.0], &[1.0, 3.0, 0.0]).unwrap()).unwrap();
        let acl = ss.unity_feedback_matrix().unwrap();
        let mut re: Vec<f64> = acl.complex_eigenvalues().iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] + 1.0).abs() < 1e-12);
    }
}

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Real polynomial with coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Leading zeros are stripped; the zero polynomial is `[0]`.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        let first = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
        coeffs.drain(..first);
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self::new(vec![1.0, 0.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    /// Coefficient of `s^k`.
    pub fn coeff(&self, k: usize) -> f64 {
        if k > self.degree() {
            0.0
        } else {
            self.coeffs[self.degree() - k]
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Roots from the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            m[(0, j)] = -self.coeffs[j + 1] / lead;
        }
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        m.complex_eigenvalues().iter().copied().collect()
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0.0; n];
        for (k, c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - k] += c;
        }
        for (k, c) in rhs.coeffs.iter().rev().enumerate() {
            out[n - 1 - k] += c;
        }
        Polynomial::new(out)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Polynomial {
        Polynomial::new(c.to_vec())
    }

    #[test]
    fn integer_arithmetic_is_exact() {
        let a = p(&[1.0, 2.0, 3.0]);
        let b = p(&[4.0, -5.0]);
        assert_eq!((&a + &b).coeffs(), &[1.0, 6.0, -2.0]);
        assert_eq!((&a - &a).coeffs(), &[0.0]);
        assert!((&a - &a).is_zero());
        assert_eq!((&a * &b).coeffs(), &[4.0, 3.0, 2.0, -15.0]);
        assert_eq!(p(&[0.0, 0.0, 1.0, 2.0]).degree(), 1);
        assert_eq!(a.coeff(0), 3.0);
        assert_eq!(a.coeff(2), 1.0);
        assert_eq!(a.coeff(5), 0.0);
        assert_eq!(a.eval(2.0), 11.0);
    }

    #[test]
    fn roots_of_known_polynomial() {
        // (s + 1)(s − 2)(s² + 4)
        let poly = &(&p(&[1.0, 1.0]) * &p(&[1.0, -2.0])) * &p(&[1.0, 0.0, 4.0]);
        let mut re: Vec<f64> = poly.roots().iter().map(|r| r.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 1.0).abs() < 1e-9);
        assert!((re[3] - 2.0).abs() < 1e-9);
        let imag = poly.roots().iter().filter(|r| (r.im.abs() - 2.0).abs() < 1e-9).count();
        assert_eq!(imag, 2);
    }
}

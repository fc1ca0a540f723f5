use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Anything that can be evaluated on the imaginary axis.
pub trait FrequencyDomain {
    /// G(jω).
    fn eval(&self, omega: f64) -> Result<Complex64>;

    /// Number of open-loop poles in the open right half-plane, when known.
    fn unstable_pole_count(&self) -> Option<usize> {
        None
    }
}

/// Poles this close to the origin act as integrators on any frequency grid
/// the margin tools use and are accounted for by the low-frequency slope.
pub(crate) const ORIGIN_POLE_RADIUS: f64 = 1e-7;

/// Strictly right-half-plane pole, away from the origin.
pub(crate) fn is_unstable_pole(p: Complex64) -> bool {
    p.norm() > ORIGIN_POLE_RADIUS && p.re > 1e-9 * p.norm().max(1.0)
}

impl<T: FrequencyDomain + ?Sized> FrequencyDomain for &T {
    fn eval(&self, omega: f64) -> Result<Complex64> {
        (**self).eval(omega)
    }

    fn unstable_pole_count(&self) -> Option<usize> {
        (**self).unstable_pole_count()
    }
}

pub const DEFAULT_GRID_MIN: f64 = 1e-2;
pub const DEFAULT_GRID_MAX: f64 = 1e3;
pub const DEFAULT_GRID_POINTS: usize = 200;

/// `n` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(Error::invalid(format!("bad frequency grid [{lo}, {hi}] with {n} points")));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

/// 200 points over [1e-2, 1e3] rad/s.
pub fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_POINTS).expect("static grid")
}

/// Sampled SISO frequency response.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    omega: Vec<f64>,
    values: Vec<Complex64>,
}

pub const FREQUENCY_RESPONSE_HEADER: [&str; 5] = ["omega", "re", "im", "mag_db", "phase_deg"];

impl FrequencyResponse {
    pub fn new(omega: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if omega.len() != values.len() || omega.is_empty() {
            return Err(Error::invalid("frequency grid and response lengths differ or are empty"));
        }
        if omega[0] <= 0.0 || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequencies must be positive and strictly increasing"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("frequency response value".into()));
        }
        Ok(FrequencyResponse { omega, values })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn mag_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| 20.0 * v.norm().log10()).collect()
    }

    /// Phase in degrees, continuous along the grid. The first point is
    /// placed in (−315°, 45°] so integrators read −90°, −180°, −270°.
    pub fn phase_deg(&self) -> Vec<f64> {
        unwrap_phase_deg(&self.values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(FREQUENCY_RESPONSE_HEADER)?;
        let (mag, phase) = (self.mag_db(), self.phase_deg());
        for i in 0..self.len() {
            let v = self.values[i];
            w.write_record([
                self.omega[i].to_string(),
                v.re.to_string(),
                v.im.to_string(),
                mag[i].to_string(),
                phase[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Anchors one phase value (deg) into (−315, 45].
pub(crate) fn anchor_phase_deg(p: f64) -> f64 {
    let mut p = p;
    while p > 45.0 {
        p -= 360.0;
    }
    while p <= -315.0 {
        p += 360.0;
    }
    p
}

/// Moves `raw` (deg) by multiples of 360 to the branch closest to `prev`.
pub(crate) fn nearest_branch_deg(raw: f64, prev: f64) -> f64 {
    raw - 360.0 * ((raw - prev) / 360.0).round()
}

pub(crate) fn unwrap_phase_deg(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        let raw = v.arg().to_degrees();
        let p = if i == 0 { anchor_phase_deg(raw) } else { nearest_branch_deg(raw, out[i - 1]) };
        out.push(p);
    }
    out
}

pub fn freq_response<S: FrequencyDomain + ?Sized>(system: &S, omega: &[f64]) -> Result<FrequencyResponse> {
    let values = omega.iter().map(|&w| system.eval(w)).collect::<Result<Vec<_>>>()?;
    FrequencyResponse::new(omega.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::tf::{tvc_tf, TransferFunction};

    #[test]
    fn grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 1e-2);
        assert_eq!(g[199], 1e3);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(log_grid(0.0, 1.0, 10).is_err());
        assert!(log_grid(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn integrator_examples() {
        let int1 = TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0]).unwrap();
        let r = freq_response(&int1, &[1.0]).unwrap();
        assert!((r.mag_db()[0]).abs() < 1e-12);
        assert!((r.phase_deg()[0] + 90.0).abs() < 1e-12);

        let int2 = TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0, 0.0]).unwrap();
        let r = freq_response(&int2, &[2.0]).unwrap();
        assert!((r.values()[0].norm() - 0.25).abs() < 1e-15);
        assert!((r.phase_deg()[0] + 180.0).abs() < 1e-12);

        let int3 = TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = freq_response(&int3, &default_grid()).unwrap();
        assert!(r.phase_deg().iter().all(|p| (p + 270.0).abs() < 1e-9));
    }

    #[test]
    fn tvc_low_frequency_limit() {
        let r = freq_response(&tvc_tf(), &[1e-6]).unwrap();
        assert!((r.values()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn pole_on_axis_is_an_error() {
        let osc = TransferFunction::from_coeffs(&[1.0], &[1.0, 0.0, 4.0]).unwrap();
        assert!(freq_response(&osc, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn unwrap_is_continuous() {
        // Fifth-order lag: phase runs from 0 to −450°.
        let den = crate::linear::poly::Polynomial::new(vec![1.0, 1.0]);
        let mut d = den.clone();
        for _ in 0..4 {
            d = &d * &den;
        }
        let tf = TransferFunction::new(crate::linear::poly::Polynomial::constant(1.0), d).unwrap();
        let r = freq_response(&tf, &default_grid()).unwrap();
        let p = r.phase_deg();
        assert!(p.windows(2).all(|w| (w[1] - w[0]).abs() < 30.0));
        let w = r.omega()[199];
        assert!((p[199] + 5.0 * w.atan().to_degrees()).abs() < 1e-9);
        assert!(p[199] < -449.0);
    }

    #[test]
    fn csv_export() {
        let tf = TransferFunction::from_coeffs(&[1.0], &[1.0, 1.0]).unwrap();
        let r = freq_response(&tf, &default_grid()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega,re,im,mag_db,phase_deg\n"));
        assert_eq!(text.lines().count(), 201);
    }
}

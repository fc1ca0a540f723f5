//! Time-varying vehicle and environment parameters along the ascent.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One time-tagged node of the trajectory parameter table. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    #[serde(rename = "m")]
    pub mass: f64,
    #[serde(rename = "J")]
    pub inertia: f64,
    #[serde(rename = "g")]
    pub gravity: f64,
    #[serde(rename = "T")]
    pub thrust: f64,
    /// Distance from the centre of gravity to the nozzle pivot.
    #[serde(rename = "l_c")]
    pub tvc_arm: f64,
    /// Distance from the centre of pressure to the centre of gravity.
    #[serde(rename = "l_alpha")]
    pub aero_arm: f64,
    #[serde(rename = "S")]
    pub ref_area: f64,
    #[serde(rename = "C_N_alpha")]
    pub cn_alpha: f64,
    pub rho: f64,
    #[serde(rename = "V")]
    pub airspeed: f64,
    #[serde(rename = "m_n")]
    pub nozzle_mass: f64,
    #[serde(rename = "l_n")]
    pub nozzle_arm: f64,
    #[serde(rename = "J_n")]
    pub nozzle_inertia: f64,
    /// Reference pitch used by the coupled linear model.
    pub theta0: f64,
}

pub const TRAJECTORY_HEADER: [&str; 15] = [
    "t", "m", "J", "g", "T", "l_c", "l_alpha", "S", "C_N_alpha", "rho", "V", "m_n", "l_n",
    "J_n", "theta0",
];

impl TrajectoryPoint {
    fn to_array(self) -> [f64; 15] {
        [
            self.t,
            self.mass,
            self.inertia,
            self.gravity,
            self.thrust,
            self.tvc_arm,
            self.aero_arm,
            self.ref_area,
            self.cn_alpha,
            self.rho,
            self.airspeed,
            self.nozzle_mass,
            self.nozzle_arm,
            self.nozzle_inertia,
            self.theta0,
        ]
    }

    fn from_array(a: [f64; 15]) -> Self {
        TrajectoryPoint {
            t: a[0],
            mass: a[1],
            inertia: a[2],
            gravity: a[3],
            thrust: a[4],
            tvc_arm: a[5],
            aero_arm: a[6],
            ref_area: a[7],
            cn_alpha: a[8],
            rho: a[9],
            airspeed: a[10],
            nozzle_mass: a[11],
            nozzle_arm: a[12],
            nozzle_inertia: a[13],
            theta0: a[14],
        }
    }

    /// Checks the physical invariants of a node.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.to_array().iter().position(|v| !v.is_finite()) {
            return Err(Error::Schema(format!(
                "non-finite value in column {} at t = {}",
                TRAJECTORY_HEADER[i], self.t
            )));
        }
        let checks = [
            (self.mass > 0.0, "m > 0"),
            (self.inertia > 0.0, "J > 0"),
            (self.airspeed > 0.0, "V > 0"),
            (self.thrust >= 0.0, "T >= 0"),
            (self.rho >= 0.0, "rho >= 0"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(Error::Schema(format!("{what} violated at t = {}", self.t)));
            }
        }
        Ok(())
    }

    /// Dynamic pressure ½ρV².
    pub fn dynamic_pressure(&self) -> f64 {
        0.5 * self.rho * self.airspeed * self.airspeed
    }

    fn lerp(a: &Self, b: &Self, s: f64) -> Self {
        let (xa, xb) = (a.to_array(), b.to_array());
        let mut out = [0.0; 15];
        for i in 0..15 {
            out[i] = xa[i] + s * (xb[i] - xa[i]);
        }
        Self::from_array(out)
    }
}

/// Ordered, validated table of trajectory nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    points: Vec<TrajectoryPoint>,
}

impl TrajectoryTable {
    pub fn new(points: Vec<TrajectoryPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Schema(format!(
                "trajectory needs at least 2 points, got {}",
                points.len()
            )));
        }
        for p in &points {
            p.validate()?;
        }
        for (row, w) in points.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(Error::NonIncreasingTime {
                    row: row + 1,
                    prev: w[0].t,
                    next: w[1].t,
                });
            }
        }
        Ok(TrajectoryTable { points })
    }

    pub fn points(&self) -> &[TrajectoryPoint] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0].t
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    pub fn duration(&self) -> f64 {
        self.end() - self.start()
    }

    /// Componentwise linear interpolation; exact at nodes.
    pub fn sample(&self, t: f64) -> Result<TrajectoryPoint> {
        let (start, end) = (self.start(), self.end());
        // Absorbs round-off from integer-tick time bookkeeping.
        let slack = 1e-9 * (1.0 + end.abs());
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let t = t.clamp(start, end);
        let i = self.points.partition_point(|p| p.t <= t);
        if i == 0 {
            return Ok(self.points[0]);
        }
        if i >= self.points.len() {
            return Ok(self.points[self.points.len() - 1]);
        }
        let (a, b) = (&self.points[i - 1], &self.points[i]);
        if t == a.t {
            return Ok(*a);
        }
        let s = (t - a.t) / (b.t - a.t);
        let mut p = TrajectoryPoint::lerp(a, b, s);
        p.t = t;
        Ok(p)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        for col in TRAJECTORY_HEADER {
            if !headers.iter().any(|h| h == col) {
                return Err(Error::Schema(format!("missing column `{col}`")));
            }
        }
        let mut points = Vec::new();
        for (row, rec) in rdr.deserialize::<TrajectoryPoint>().enumerate() {
            let p = rec.map_err(|e| Error::Schema(format!("row {}: {e}", row + 1)))?;
            points.push(p);
        }
        TrajectoryTable::new(points)
    }
}

/// Reads and validates a trajectory CSV file.
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<TrajectoryTable> {
    let file = std::fs::File::open(path)?;
    TrajectoryTable::read_csv(std::io::BufReader::new(file))
}

/// Shape parameters of the synthetic ascent profile.
///
/// Airspeed follows `v0 + accel·t + jerk·t²`, altitude integrates
/// `V·sin(theta0)` from `h0`, and density is an exponential atmosphere.
/// Mass burns linearly down to `final_mass_fraction·m0` at the end of the
/// window; inertia and TVC arm follow the burnt fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthProfile {
    pub v0: f64,
    pub accel: f64,
    pub jerk: f64,
    pub h0: f64,
    pub scale_height: f64,
    pub rho_sea_level: f64,
    pub m0: f64,
    pub final_mass_fraction: f64,
    pub inertia0: f64,
    pub inertia_final: f64,
    pub thrust0: f64,
    pub thrust_altitude_gain: f64,
    pub tvc_arm0: f64,
    pub tvc_arm_final: f64,
    pub aero_arm0: f64,
    pub aero_arm_final: f64,
    pub ref_area: f64,
    pub cn_alpha: f64,
    pub gravity: f64,
    pub nozzle_mass: f64,
    pub nozzle_arm: f64,
    pub nozzle_inertia: f64,
    pub pitch_start_deg: f64,
    pub pitch_end_deg: f64,
    pub node_spacing: f64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            v0: 100.0,
            accel: 8.0,
            jerk: 0.1,
            h0: 500.0,
            scale_height: 7200.0,
            rho_sea_level: 1.225,
            m0: 120_000.0,
            final_mass_fraction: 0.4,
            inertia0: 2.0e6,
            inertia_final: 0.9e6,
            thrust0: 2.6e6,
            thrust_altitude_gain: 0.08,
            tvc_arm0: 9.0,
            tvc_arm_final: 10.0,
            aero_arm0: 3.0,
            aero_arm_final: 2.5,
            ref_area: 7.0,
            cn_alpha: 2.5,
            gravity: 9.81,
            nozzle_mass: 600.0,
            nozzle_arm: 0.8,
            nozzle_inertia: 900.0,
            pitch_start_deg: 90.0,
            pitch_end_deg: 45.0,
            node_spacing: 1.0,
        }
    }
}

/// Generates a smooth single-max-Q ascent parameter table starting at t = 0.
pub fn synth_reference_trajectory(duration: f64, profile: &SynthProfile) -> Result<TrajectoryTable> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::invalid(format!("duration must be > 0, got {duration}")));
    }
    if !(profile.node_spacing > 0.0) {
        return Err(Error::invalid("node spacing must be > 0"));
    }
    let p = profile;
    let n_nodes = (duration / p.node_spacing).ceil().max(1.0) as usize + 1;
    let speed = |t: f64| p.v0 + p.accel * t + p.jerk * t * t;
    let pitch = |t: f64| {
        (p.pitch_start_deg + (p.pitch_end_deg - p.pitch_start_deg) * t / duration).to_radians()
    };
    let climb = |t: f64| speed(t) * pitch(t).sin();

    const SUBSTEPS: usize = 100;
    let mut altitude = p.h0;
    let mut t_prev = 0.0;
    let mut points = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let t = duration * i as f64 / (n_nodes - 1) as f64;
        // Simpson integration of the climb rate between nodes.
        let h = (t - t_prev) / SUBSTEPS as f64;
        for k in 0..SUBSTEPS {
            let a = t_prev + k as f64 * h;
            altitude += h / 6.0 * (climb(a) + 4.0 * climb(a + 0.5 * h) + climb(a + h));
        }
        t_prev = t;

        let burnt = (1.0 - p.final_mass_fraction) * t / duration;
        let frac = burnt / (1.0 - p.final_mass_fraction).max(f64::MIN_POSITIVE);
        let rho = p.rho_sea_level * (-altitude / p.scale_height).exp();
        points.push(TrajectoryPoint {
            t,
            mass: p.m0 * (1.0 - burnt),
            inertia: p.inertia0 + (p.inertia_final - p.inertia0) * frac,
            gravity: p.gravity,
            thrust: p.thrust0 * (1.0 + p.thrust_altitude_gain * (1.0 - rho / p.rho_sea_level)),
            tvc_arm: p.tvc_arm0 + (p.tvc_arm_final - p.tvc_arm0) * frac,
            aero_arm: p.aero_arm0 + (p.aero_arm_final - p.aero_arm0) * frac,
            ref_area: p.ref_area,
            cn_alpha: p.cn_alpha,
            rho,
            airspeed: speed(t),
            nozzle_mass: p.nozzle_mass,
            nozzle_arm: p.nozzle_arm,
            nozzle_inertia: p.nozzle_inertia,
            theta0: pitch(t),
        });
    }
    TrajectoryTable::new(points)
}

/// The eight dispersed parameters, in corner-case enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UncertainParam {
    CnAlpha,
    AeroArm,
    Rho,
    Airspeed,
    Mass,
    Inertia,
    TvcArm,
    Thrust,
}

impl UncertainParam {
    pub const ALL: [UncertainParam; 8] = [
        UncertainParam::CnAlpha,
        UncertainParam::AeroArm,
        UncertainParam::Rho,
        UncertainParam::Airspeed,
        UncertainParam::Mass,
        UncertainParam::Inertia,
        UncertainParam::TvcArm,
        UncertainParam::Thrust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UncertainParam::CnAlpha => "C_N_alpha",
            UncertainParam::AeroArm => "l_alpha",
            UncertainParam::Rho => "rho",
            UncertainParam::Airspeed => "V",
            UncertainParam::Mass => "m",
            UncertainParam::Inertia => "J",
            UncertainParam::TvcArm => "l_c",
            UncertainParam::Thrust => "T",
        }
    }

    /// Uncertainty level at Δ = 100%: 20% aerodynamics, 10% mass/propulsion.
    pub fn level(self) -> f64 {
        match self {
            UncertainParam::CnAlpha
            | UncertainParam::AeroArm
            | UncertainParam::Rho
            | UncertainParam::Airspeed => 0.20,
            UncertainParam::Mass
            | UncertainParam::Inertia
            | UncertainParam::TvcArm
            | UncertainParam::Thrust => 0.10,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for UncertainParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multiplicative scale factors for the eight uncertain parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    multipliers: [f64; 8],
}

impl Default for UncertaintySet {
    fn default() -> Self {
        Self::identity()
    }
}

impl UncertaintySet {
    pub fn identity() -> Self {
        UncertaintySet { multipliers: [1.0; 8] }
    }

    pub fn get(&self, p: UncertainParam) -> f64 {
        self.multipliers[p.index()]
    }

    pub fn with(mut self, p: UncertainParam, factor: f64) -> Self {
        self.multipliers[p.index()] = factor;
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (UncertainParam, f64)> + '_ {
        UncertainParam::ALL.iter().map(move |&p| (p, self.get(p)))
    }

    pub fn is_identity(&self) -> bool {
        self.multipliers.iter().all(|&m| m == 1.0)
    }
}

/// Scales the eight uncertain parameters; every other field is untouched.
pub fn apply_dispersion(point: &TrajectoryPoint, u: &UncertaintySet) -> TrajectoryPoint {
    let mut p = *point;
    p.cn_alpha *= u.get(UncertainParam::CnAlpha);
    p.aero_arm *= u.get(UncertainParam::AeroArm);
    p.rho *= u.get(UncertainParam::Rho);
    p.airspeed *= u.get(UncertainParam::Airspeed);
    p.mass *= u.get(UncertainParam::Mass);
    p.inertia *= u.get(UncertainParam::Inertia);
    p.tvc_arm *= u.get(UncertainParam::TvcArm);
    p.thrust *= u.get(UncertainParam::Thrust);
    p
}

pub const N_CORNER_CASES: usize = 1 << 8;

/// All 2⁸ vertices of the uncertainty box scaled by `delta` (1.0 = nominal levels).
///
/// Case `i` takes the `+` side of parameter `k` (in [`UncertainParam::ALL`]
/// order) when bit `k` of `i` is set, so case 0 is all-minus and case 255
/// all-plus.
pub fn enumerate_corner_cases(delta: f64) -> Result<Vec<UncertaintySet>> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    Ok((0..N_CORNER_CASES).map(|i| corner_case(i, delta)).collect())
}

pub fn corner_case(case_id: usize, delta: f64) -> UncertaintySet {
    let mut u = UncertaintySet::identity();
    for (k, p) in UncertainParam::ALL.iter().enumerate() {
        let sign = if case_id >> k & 1 == 1 { 1.0 } else { -1.0 };
        u.multipliers[k] = 1.0 + sign * delta * p.level();
    }
    u
}

/// Rotational (μ) and translational (n) model coefficients at one flight condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantCoefficients {
    pub mu_alpha: f64,
    pub mu_c: f64,
    pub mu_n: f64,
    pub n_alpha: f64,
    pub n_c: f64,
    pub n_n: f64,
}

pub fn plant_coefficients(p: &TrajectoryPoint) -> PlantCoefficients {
    let qs_cn = p.dynamic_pressure() * p.ref_area * p.cn_alpha;
    PlantCoefficients {
        mu_alpha: p.aero_arm * qs_cn / p.inertia,
        mu_c: p.tvc_arm * p.thrust / p.inertia,
        mu_n: (p.nozzle_mass * p.nozzle_arm * p.tvc_arm + p.nozzle_inertia) / p.inertia,
        n_alpha: qs_cn / p.mass,
        n_c: p.thrust / p.mass,
        n_n: p.nozzle_mass * p.nozzle_arm / p.mass,
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn interpolation_is_piecewise_linear(s1 in 0.0f64..1.0, s2 in 0.0f64..1.0, node in 0usize..79) {
            let table = synth_reference_trajectory(80.0, &SynthProfile::default()).unwrap();
            let t0 = table.points()[node].t;
            let t1 = table.points()[node + 1].t;
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            let ta = t0 + lo * (t1 - t0);
            let tb = t0 + hi * (t1 - t0);
            let tm = 0.5 * (ta + tb);
            let (a, b, m) = (table.sample(ta).unwrap(), table.sample(tb).unwrap(), table.sample(tm).unwrap());
            // Collinearity of three points inside one segment.
            prop_assert!((m.mass - 0.5 * (a.mass + b.mass)).abs() <= 1e-9 * a.mass);
            prop_assert!((m.rho - 0.5 * (a.rho + b.rho)).abs() <= 1e-12);
        }

        #[test]
        fn coefficients_scale_with_inertia(k in 0.1f64..10.0, node in 0usize..81) {
            let p = synth_reference_trajectory(80.0, &SynthProfile::default()).unwrap().points()[node];
            let scaled = TrajectoryPoint { inertia: p.inertia * k, ..p };
            let (a, b) = (plant_coefficients(&p), plant_coefficients(&scaled));
            prop_assert!((a.mu_alpha / k - b.mu_alpha).abs() <= 1e-12 * a.mu_alpha.abs().max(1e-300));
            prop_assert!((a.mu_c / k - b.mu_c).abs() <= 1e-12 * a.mu_c);
            prop_assert!((a.mu_n / k - b.mu_n).abs() <= 1e-12 * a.mu_n);
        }

        #[test]
        fn corner_enumeration_distinct(delta in 0.01f64..3.0) {
            let cases = enumerate_corner_cases(delta).unwrap();
            let again = enumerate_corner_cases(delta).unwrap();
            prop_assert_eq!(&cases, &again);
            for i in 0..cases.len() {
                for j in (i + 1)..cases.len() {
                    prop_assert!(cases[i] != cases[j]);
                }
            }
        }
    }
}

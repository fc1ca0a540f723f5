//! Monte-Carlo corner-case campaigns, noise/delay sensitivity grids and
//! bandwidth trade-off sweeps.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::control::ControllerKind;
use crate::error::{Error, Result};
use crate::sim::{simulate, CommandProfile, SimScenario, TelemetryLog};
use crate::trajectory::corner_case;

/// √(mean of squares).
pub fn rms(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::invalid("rms of an empty series"));
    }
    Ok((series.iter().map(|v| v * v).sum::<f64>() / series.len() as f64).sqrt())
}

/// Metrics of one run. Diverged runs carry no values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    pub case_id: usize,
    pub seed: u64,
    pub diverged: bool,
    /// RMS pitch error (rad).
    pub rms_theta_err: Option<f64>,
    /// RMS gimbal rate from the actuator state (rad/s).
    pub rms_beta_rate: Option<f64>,
    /// Peak |Qα| (Pa·rad).
    pub max_abs_q_alpha: Option<f64>,
}

impl RunMetrics {
    pub fn from_log(case_id: usize, seed: u64, log: &TelemetryLog) -> Result<Self> {
        Ok(RunMetrics {
            case_id,
            seed,
            diverged: false,
            rms_theta_err: Some(rms(&log.theta_err)?),
            rms_beta_rate: Some(rms(&log.beta_dot)?),
            max_abs_q_alpha: Some(log.q_alpha.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        })
    }

    pub fn diverged(case_id: usize, seed: u64) -> Self {
        RunMetrics {
            case_id,
            seed,
            diverged: true,
            rms_theta_err: None,
            rms_beta_rate: None,
            max_abs_q_alpha: None,
        }
    }
}

/// Runs one scenario; divergence becomes a flagged row, anything else an error.
pub fn run_metrics(scenario: &SimScenario, case_id: usize) -> Result<RunMetrics> {
    match simulate(scenario) {
        Ok(log) => RunMetrics::from_log(case_id, scenario.seed, &log),
        Err(Error::Diverged { .. }) => Ok(RunMetrics::diverged(case_id, scenario.seed)),
        Err(e) => Err(e),
    }
}

pub const METRICS_HEADER: [&str; 6] = [
    "case_id",
    "seed",
    "diverged",
    "rms_theta_err_deg",
    "rms_beta_rate_dps",
    "max_abs_qalpha_pa_rad",
];

fn metric_fields(m: &RunMetrics) -> [String; 6] {
    let opt = |v: Option<f64>, scale: f64| v.map_or(String::new(), |x| (x * scale).to_string());
    let deg = 180.0 / std::f64::consts::PI;
    [
        m.case_id.to_string(),
        m.seed.to_string(),
        m.diverged.to_string(),
        opt(m.rms_theta_err, deg),
        opt(m.rms_beta_rate, deg),
        opt(m.max_abs_q_alpha, 1.0),
    ]
}

/// One campaign: rows ordered by case id.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignTable {
    pub rows: Vec<RunMetrics>,
}

impl CampaignTable {
    pub fn diverged_count(&self) -> usize {
        self.rows.iter().filter(|r| r.diverged).count()
    }

    fn max_of(&self, f: impl Fn(&RunMetrics) -> Option<f64>) -> Option<f64> {
        self.rows.iter().filter_map(f).reduce(f64::max)
    }

    /// Largest RMS pitch error over the non-diverged cases (rad).
    pub fn max_rms_theta_err(&self) -> Option<f64> {
        self.max_of(|r| r.rms_theta_err)
    }

    /// Largest RMS gimbal rate over the non-diverged cases (rad/s).
    pub fn max_rms_beta_rate(&self) -> Option<f64> {
        self.max_of(|r| r.rms_beta_rate)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(METRICS_HEADER)?;
        for r in &self.rows {
            w.write_record(metric_fields(r))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Runs the listed corner cases at uncertainty level `delta`, all with the
/// template's wind realization. Runs execute in parallel; rows come back in
/// `case_ids` order.
pub fn run_campaign(template: &SimScenario, delta: f64, case_ids: &[usize]) -> Result<CampaignTable> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
    }
    if let Some(&bad) = case_ids.iter().find(|&&id| id >= crate::trajectory::N_CORNER_CASES) {
        return Err(Error::invalid(format!("corner case id {bad} out of range")));
    }
    template.validate()?;
    let rows = case_ids
        .par_iter()
        .map(|&id| {
            let mut s = template.clone();
            s.dispersion = corner_case(id, delta);
            s.case_id = id as u64;
            run_metrics(&s, id)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignTable { rows })
}

/// Every `n_cases / k`-th case, `k` cases in total; `k = 256` is the full set.
pub fn case_subsample(k: usize) -> Result<Vec<usize>> {
    let n = crate::trajectory::N_CORNER_CASES;
    if k == 0 || k > n || !n.is_multiple_of(k) {
        return Err(Error::invalid(format!("subsample size must divide {n}, got {k}")));
    }
    Ok((0..k).map(|i| i * (n / k)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub gyro_3sigma_dps: f64,
    pub delay_samples: usize,
    pub table: CampaignTable,
}

/// Campaigns over the noise × delay grid.
pub fn sensitivity_grid(
    template: &SimScenario,
    delta: f64,
    case_ids: &[usize],
    noise_levels_dps: &[f64],
    delays: &[usize],
) -> Result<Vec<SensitivityCell>> {
    let mut cells = Vec::with_capacity(noise_levels_dps.len() * delays.len());
    for &noise in noise_levels_dps {
        for &delay in delays {
            let mut s = template.clone();
            s.sensors.gyro_3sigma_dps = noise;
            s.tvc_delay_samples = delay;
            cells.push(SensitivityCell {
                gyro_3sigma_dps: noise,
                delay_samples: delay,
                table: run_campaign(&s, delta, case_ids)?,
            });
        }
    }
    Ok(cells)
}

pub fn write_sensitivity_csv<W: Write>(cells: &[SensitivityCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["gyro_3sigma_dps", "delay_samples"];
    header.extend(METRICS_HEADER);
    w.write_record(&header)?;
    for c in cells {
        for r in &c.table.rows {
            let mut rec = vec![c.gyro_3sigma_dps.to_string(), c.delay_samples.to_string()];
            rec.extend(metric_fields(r));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sensitivity_summary_csv<W: Write>(cells: &[SensitivityCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "gyro_3sigma_dps",
        "delay_samples",
        "max_rms_theta_err_deg",
        "max_rms_beta_rate_dps",
        "diverged",
    ])?;
    let deg = |v: Option<f64>| v.map_or(String::new(), |x| x.to_degrees().to_string());
    for c in cells {
        w.write_record([
            c.gyro_3sigma_dps.to_string(),
            c.delay_samples.to_string(),
            deg(c.table.max_rms_theta_err()),
            deg(c.table.max_rms_beta_rate()),
            c.table.diverged_count().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Default step command for the trade-off runs.
pub const PARETO_STEP: CommandProfile = CommandProfile::Step { time: 1.0, amplitude_deg: 1.0 };

/// Sets the bandwidth a trade-off sweep varies for `kind`.
pub fn set_bandwidth(scenario: &mut SimScenario, kind: ControllerKind, bandwidth: f64) -> Result<()> {
    scenario.controller = kind;
    match kind {
        ControllerKind::PdQdot => scenario.tuning.omega_qdot = bandwidth,
        ControllerKind::IndiLpf => scenario.tuning.omega_beta = bandwidth,
        other => {
            return Err(Error::invalid(format!(
                "bandwidth sweeps apply to pd_qdot and indi_lpf, not {other}"
            )))
        }
    }
    Ok(())
}

/// Nominal, wind- and noise-free version of `template` for trade-off runs.
pub fn pareto_scenario(template: &SimScenario) -> SimScenario {
    let mut s = template.clone();
    s.dispersion = crate::trajectory::UncertaintySet::identity();
    s.wind.enabled = false;
    s.sensors = Default::default();
    if s.command == CommandProfile::Zero {
        s.command = PARETO_STEP;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub bandwidth: f64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoTable {
    pub kind: ControllerKind,
    pub points: Vec<ParetoPoint>,
}

impl ParetoTable {
    /// RMS pitch error never increases with bandwidth (no diverged points).
    pub fn error_monotone(&self) -> bool {
        let errs: Option<Vec<f64>> = self.points.iter().map(|p| p.metrics.rms_theta_err).collect();
        errs.is_some_and(|e| e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)))
    }

    /// RMS gimbal rate never decreases with bandwidth (no diverged points).
    pub fn rate_monotone(&self) -> bool {
        let rates: Option<Vec<f64>> = self.points.iter().map(|p| p.metrics.rms_beta_rate).collect();
        rates.is_some_and(|r| r.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["controller", "bandwidth_rad_s", "diverged", "rms_theta_err_deg", "rms_beta_rate_dps"])?;
        let deg = |v: Option<f64>| v.map_or(String::new(), |x| x.to_degrees().to_string());
        for p in &self.points {
            w.write_record([
                self.kind.name().to_string(),
                p.bandwidth.to_string(),
                p.metrics.diverged.to_string(),
                deg(p.metrics.rms_theta_err),
                deg(p.metrics.rms_beta_rate),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One nominal step-command run per bandwidth, sorted by bandwidth.
pub fn pareto_sweep(template: &SimScenario, kind: ControllerKind, bandwidths: &[f64]) -> Result<ParetoTable> {
    if bandwidths.is_empty() || bandwidths.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::invalid("bandwidth grid must be non-empty and positive"));
    }
    let mut grid = bandwidths.to_vec();
    grid.sort_by(f64::total_cmp);
    let base = pareto_scenario(template);
    let points = grid
        .par_iter()
        .map(|&bw| {
            let mut s = base.clone();
            set_bandwidth(&mut s, kind, bw)?;
            Ok(ParetoPoint { bandwidth: bw, metrics: run_metrics(&s, 0)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParetoTable { kind, points })
}

/// Nominal step-run RMS pitch error (rad) of `kind` at one bandwidth.
pub fn nominal_error(template: &SimScenario, kind: ControllerKind, bandwidth: f64) -> Result<Option<f64>> {
    let mut s = pareto_scenario(template);
    set_bandwidth(&mut s, kind, bandwidth)?;
    Ok(run_metrics(&s, 0)?.rms_theta_err)
}

/// Relative tolerance of the equal-error calibration.
pub const CALIBRATION_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub kind: ControllerKind,
    pub bandwidth: f64,
    pub rms_theta_err: f64,
    pub target: f64,
}

/// Bandwidth in `[lo, hi]` whose nominal RMS pitch error is within 2% of
/// `target` (rad), by bisection in log-bandwidth. The error must decrease
/// with bandwidth across the bracket.
pub fn calibrate_bandwidth(
    template: &SimScenario,
    kind: ControllerKind,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<Calibration> {
    if !(target > 0.0) || !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!("bad calibration target {target} or bracket [{lo}, {hi}]")));
    }
    let err = |bw: f64| -> Result<f64> {
        nominal_error(template, kind, bw)?
            .ok_or_else(|| Error::invalid(format!("{kind} diverges at bandwidth {bw}")))
    };
    let done = |e: f64| (e / target - 1.0).abs() <= CALIBRATION_TOL;
    let (mut a, mut b) = (lo, hi);
    let (ea, eb) = (err(a)?, err(b)?);
    for (bw, e) in [(a, ea), (b, eb)] {
        if done(e) {
            return Ok(Calibration { kind, bandwidth: bw, rms_theta_err: e, target });
        }
    }
    if !(ea > target && eb < target) {
        return Err(Error::invalid(format!(
            "target {target} not bracketed: error {ea} at {lo}, {eb} at {hi}"
        )));
    }
    for _ in 0..60 {
        let m = (a * b).sqrt();
        let em = err(m)?;
        if done(em) {
            return Ok(Calibration { kind, bandwidth: m, rms_theta_err: em, target });
        }
        if em > target {
            a = m;
        } else {
            b = m;
        }
    }
    Err(Error::invalid("bandwidth calibration did not converge"))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::trajectory::{synth_reference_trajectory, SynthProfile};

    #[test]
    fn rms_examples() {
        assert_eq!(rms(&[0.0; 5]).unwrap(), 0.0);
        assert!((rms(&[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rms(&[-2.5; 7]).unwrap(), 2.5);
        assert!(rms(&[]).is_err());
    }

    #[test]
    fn subsample_ids() {
        assert_eq!(case_subsample(4).unwrap(), vec![0, 64, 128, 192]);
        assert_eq!(case_subsample(256).unwrap().len(), 256);
        assert!(case_subsample(3).is_err());
    }

    fn template() -> SimScenario {
        let table = Arc::new(synth_reference_trajectory(80.0, &SynthProfile::default()).unwrap());
        let mut s = SimScenario::new(table, ControllerKind::IndiLpf);
        s.duration = Some(10.0);
        s
    }

    #[test]
    fn zero_delta_rows_identical() {
        let t = run_campaign(&template(), 0.0, &[0, 1, 77, 255]).unwrap();
        let first = t.rows[0];
        for r in &t.rows {
            assert_eq!(r.rms_theta_err, first.rms_theta_err);
            assert_eq!(r.rms_beta_rate, first.rms_beta_rate);
        }
        assert_eq!(t.rows.iter().map(|r| r.case_id).collect::<Vec<_>>(), vec![0, 1, 77, 255]);
    }

    #[test]
    fn metrics_match_telemetry() {
        let s = template();
        let log = simulate(&s).unwrap();
        let m = run_metrics(&s, 0).unwrap();
        let offline = (log.theta_err.iter().map(|v| v * v).sum::<f64>() / log.len() as f64).sqrt();
        assert!((m.rms_theta_err.unwrap() - offline).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_only_for_filtered_kinds() {
        let mut s = template();
        assert!(set_bandwidth(&mut s, ControllerKind::Pd, 5.0).is_err());
        assert!(pareto_sweep(&template(), ControllerKind::IndiLpf, &[]).is_err());
        let one = pareto_sweep(&template(), ControllerKind::IndiLpf, &[10.0]).unwrap();
        assert_eq!(one.points.len(), 1);
    }
}

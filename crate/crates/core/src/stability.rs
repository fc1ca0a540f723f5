//! Gain and phase margins, Nyquist stability, Nichols data and margin
//! sweeps over flight time and corner cases.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linear::freq::{anchor_phase_deg, log_grid, nearest_branch_deg, unwrap_phase_deg, ORIGIN_POLE_RADIUS};
use crate::linear::{linearize_closed_loop, FrequencyDomain, FrequencyResponse, LoopChannel, LoopConfig};
use crate::sim::SimScenario;
use crate::trajectory::UncertaintySet;

/// Largest |ln G(jω₂) − ln G(jω₁)| tolerated between neighbouring samples.
pub const MAX_LOG_STEP: f64 = 0.1;
const MAX_POINTS: usize = 20_000;
const MAX_BISECTIONS: usize = 80;

/// One crossing: a gain crossover with its phase margin (deg), or a phase
/// crossover with its gain margin (dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub omega: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginResult {
    /// Smallest phase margin (deg), +∞ without a unity-gain crossing.
    pub phase_margin: f64,
    /// Gain margin (dB) closest to 0 dB, sign kept: negative values are
    /// gain-reduction margins. +∞ without a −180° crossing.
    pub gain_margin: f64,
    /// Frequency of the reported phase margin.
    pub wgc: Option<f64>,
    /// Frequency of the reported gain margin.
    pub wpc: Option<f64>,
    /// Closed-loop stability from the Nyquist winding count.
    pub stable: bool,
    pub gain_crossings: Vec<Crossing>,
    pub phase_crossings: Vec<Crossing>,
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("frequency grid must have >= 2 positive, increasing points"));
    }
    Ok(())
}

fn log_step(a: Complex64, b: Complex64) -> f64 {
    let r = b / a;
    Complex64::new(r.norm().ln(), r.arg()).norm()
}

/// Samples `f` on `grid` and bisects (geometrically) every interval whose
/// log-change exceeds `max_step`.
fn refine<F>(grid: &[f64], f: F, max_step: f64) -> Result<Vec<(f64, Complex64)>>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut pts = grid.iter().map(|&w| Ok((w, f(w)?))).collect::<Result<Vec<_>>>()?;
    loop {
        let mut out = Vec::with_capacity(pts.len() * 2);
        let mut inserted = false;
        for i in 0..pts.len() {
            out.push(pts[i]);
            if i + 1 == pts.len() {
                break;
            }
            let (w1, g1) = pts[i];
            let (w2, g2) = pts[i + 1];
            let resolvable = w2 / w1 > 1.0 + 1e-9;
            if resolvable && pts.len() + out.len() < 2 * MAX_POINTS && log_step(g1, g2) > max_step {
                let wm = (w1 * w2).sqrt();
                out.push((wm, f(wm)?));
                inserted = true;
            }
        }
        pts = out;
        if !inserted || pts.len() >= MAX_POINTS {
            return Ok(pts);
        }
    }
}

fn bisect(mut lo: f64, mut hi: f64, g_lo: f64, g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut s_lo = g_lo.signum();
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let v = g(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == s_lo {
            lo = mid;
            s_lo = v.signum();
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

fn normalize_pm(pm: f64) -> f64 {
    let r = pm - 360.0 * (pm / 360.0).round();
    if r <= -180.0 {
        r + 360.0
    } else {
        r
    }
}

/// Margins of the open loop `sys` (negative unity feedback), sampled on
/// `grid` with internal refinement and crossing bisection on `sys`.
pub fn gain_phase_margins<S: FrequencyDomain + ?Sized>(sys: &S, grid: &[f64]) -> Result<MarginResult> {
    validate_grid(grid)?;
    let pts = refine(grid, |w| sys.eval(w), MAX_LOG_STEP)?;
    let values: Vec<Complex64> = pts.iter().map(|p| p.1).collect();
    let phase = unwrap_phase_deg(&values);
    let lnmag: Vec<f64> = values.iter().map(|v| v.norm().ln()).collect();

    let phase_near = |w: f64, i: usize| -> Result<f64> {
        let (w1, w2) = (pts[i].0, pts[i + 1].0);
        let s = ((w / w1).ln() / (w2 / w1).ln()).clamp(0.0, 1.0);
        let guess = phase[i] + s * (phase[i + 1] - phase[i]);
        Ok(nearest_branch_deg(sys.eval(w)?.arg().to_degrees(), guess))
    };

    let mut gain_crossings = Vec::new();
    let mut phase_crossings = Vec::new();
    for i in 0..pts.len() - 1 {
        let (w1, w2) = (pts[i].0, pts[i + 1].0);
        let (l1, l2) = (lnmag[i], lnmag[i + 1]);
        let wgc = if l1 == 0.0 {
            Some(w1)
        } else if l1 * l2 < 0.0 {
            Some(bisect(w1, w2, l1, |w| Ok(sys.eval(w)?.norm().ln()))?)
        } else if i + 2 == pts.len() && l2 == 0.0 {
            Some(w2)
        } else {
            None
        };
        if let Some(w) = wgc {
            let p = if w == w1 { phase[i] } else if w == w2 { phase[i + 1] } else { phase_near(w, i)? };
            gain_crossings.push(Crossing { omega: w, margin: normalize_pm(180.0 + p) });
        }

        let (p1, p2) = (phase[i], phase[i + 1]);
        let lo_k = ((p1.min(p2) + 180.0) / 360.0).ceil() as i64;
        let hi_k = ((p1.max(p2) + 180.0) / 360.0).floor() as i64;
        for k in lo_k..=hi_k {
            let target = -180.0 + 360.0 * k as f64;
            let (d1, d2) = (p1 - target, p2 - target);
            let w = if d1 * d2 < 0.0 {
                bisect(w1, w2, d1, |w| Ok(phase_near(w, i)? - target))?
            } else if d1 == 0.0 && i > 0 && (phase[i - 1] - target) * d2 < 0.0 {
                w1
            } else {
                continue;
            };
            let gm = -20.0 * sys.eval(w)?.norm().log10();
            phase_crossings.push(Crossing { omega: w, margin: gm });
        }
    }

    let pm = gain_crossings.iter().copied().min_by(|a, b| a.margin.total_cmp(&b.margin));
    let gm = phase_crossings.iter().copied().min_by(|a, b| a.margin.abs().total_cmp(&b.margin.abs()));
    let stable = nyquist_rhp_closed_loop_poles(sys, grid)?.abs() < 0.5;
    Ok(MarginResult {
        phase_margin: pm.map_or(f64::INFINITY, |c| c.margin),
        gain_margin: gm.map_or(f64::INFINITY, |c| c.margin),
        wgc: pm.map(|c| c.omega),
        wpc: gm.map(|c| c.omega),
        stable,
        gain_crossings,
        phase_crossings,
    })
}

/// Closed-loop right-half-plane pole count of `1 + L` from the winding of
/// the sampled Nyquist curve: Z = P + k/2 − Δarg(1 + L)/π, with P the
/// unstable open-loop poles, k the poles at the origin and Δarg taken from
/// ω → 0⁺ to ω → ∞.
pub fn nyquist_rhp_closed_loop_poles<S: FrequencyDomain + ?Sized>(sys: &S, grid: &[f64]) -> Result<f64> {
    validate_grid(grid)?;
    let lo = 100.0 * ORIGIN_POLE_RADIUS;
    let hi = (grid[grid.len() - 1] * 1e3).max(1e6);
    let base = log_grid(lo, hi, 400)?;
    let pts = refine(&base, |w| Ok(sys.eval(w)? + 1.0), 0.05)?;

    let l_lo = (sys.eval(lo)?).norm().ln();
    let l_lo2 = (sys.eval(2.0 * lo)?).norm().ln();
    let k = (-(l_lo2 - l_lo) / 2f64.ln()).round().max(0.0);

    let mut delta = 0.0;
    for w in pts.windows(2) {
        delta += (w[1].1 / w[0].1).arg();
    }
    let p = sys.unstable_pole_count().unwrap_or(0) as f64;
    Ok(p + k / 2.0 - delta / std::f64::consts::PI)
}

/// One Nichols-chart sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NicholsPoint {
    pub omega: f64,
    pub phase_deg: f64,
    pub gain_db: f64,
}

pub fn nichols_data(open_loop: &FrequencyResponse) -> Vec<NicholsPoint> {
    let phase = open_loop.phase_deg();
    let mag = open_loop.mag_db();
    open_loop
        .omega()
        .iter()
        .zip(phase.iter().zip(&mag))
        .map(|(&omega, (&phase_deg, &gain_db))| NicholsPoint { omega, phase_deg, gain_db })
        .collect()
}

pub const NICHOLS_HEADER: [&str; 3] = ["omega", "phase_deg", "gain_db"];

pub fn write_nichols_csv<W: Write>(points: &[NicholsPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(NICHOLS_HEADER)?;
    for p in points {
        w.write_record([p.omega.to_string(), p.phase_deg.to_string(), p.gain_db.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Float for CSV: `inf` for +∞, `nan` for missing values.
pub fn format_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else {
        v.to_string()
    }
}

/// `n` instants from the table start spaced by `spacing`, clipped to its end.
pub fn sweep_times(start: f64, end: f64, spacing: f64) -> Result<Vec<f64>> {
    if !(spacing > 0.0) || !(end > start) {
        return Err(Error::invalid(format!("bad sweep window [{start}, {end}] step {spacing}")));
    }
    let n = ((end - start) / spacing + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (start + k as f64 * spacing).min(end)).collect())
}

/// Margins of the closed loop of `scenario` at time `t`.
pub fn margins_at(
    scenario: &SimScenario,
    t: f64,
    channel: LoopChannel,
    config: &LoopConfig,
    grid: &[f64],
) -> Result<MarginResult> {
    let sys = linearize_closed_loop(scenario, t, channel, config)?;
    gain_phase_margins(&sys, grid)
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub t: f64,
    /// `None` for the nominal (undispersed) plant.
    pub case_id: Option<usize>,
    /// Per-cell failures are recorded as their diagnostic.
    pub result: std::result::Result<MarginResult, String>,
}

impl SweepCell {
    pub fn pm(&self) -> f64 {
        self.result.as_ref().map_or(f64::NAN, |r| r.phase_margin)
    }

    pub fn gm(&self) -> f64 {
        self.result.as_ref().map_or(f64::NAN, |r| r.gain_margin)
    }
}

/// Margin table over (time, case), with the nominal plant at every time.
#[derive(Debug, Clone)]
pub struct MarginSweep {
    pub times: Vec<f64>,
    pub nominal: Vec<SweepCell>,
    /// Ordered by time, then case id.
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSummary {
    pub t: f64,
    pub nominal_pm: f64,
    pub nominal_gm: f64,
    pub worst_pm: f64,
    pub worst_gm: f64,
    pub worst_pm_case: Option<usize>,
    pub worst_gm_case: Option<usize>,
    pub failures: usize,
}

/// Orders gain margins by distance from 0 dB.
fn gm_worse(a: f64, b: f64) -> bool {
    a.abs() < b.abs()
}

fn pm_worse(a: f64, b: f64) -> bool {
    a < b
}

fn worst_by(cells: &[&SweepCell], key: impl Fn(&SweepCell) -> f64, worse: fn(f64, f64) -> bool) -> (f64, Option<usize>) {
    cells
        .iter()
        .filter(|c| c.result.is_ok())
        .map(|c| (key(c), c.case_id))
        .fold((f64::INFINITY, None), |acc, (v, id)| if worse(v, acc.0) { (v, id) } else { acc })
}

fn worst_of(values: impl Iterator<Item = f64>, worse: fn(f64, f64) -> bool) -> f64 {
    values.filter(|v| !v.is_nan()).fold(f64::INFINITY, |acc, v| if worse(v, acc) { v } else { acc })
}

impl MarginSweep {
    pub fn per_time(&self) -> Vec<TimeSummary> {
        self.times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let cells: Vec<&SweepCell> = self.cells.iter().filter(|c| c.t == t).collect();
                let (worst_pm, worst_pm_case) = worst_by(&cells, |c| c.pm(), pm_worse);
                let (worst_gm, worst_gm_case) = worst_by(&cells, |c| c.gm(), gm_worse);
                TimeSummary {
                    t,
                    nominal_pm: self.nominal[i].pm(),
                    nominal_gm: self.nominal[i].gm(),
                    worst_pm,
                    worst_gm,
                    worst_pm_case,
                    worst_gm_case,
                    failures: cells.iter().filter(|c| c.result.is_err()).count(),
                }
            })
            .collect()
    }

    /// Global worst margins: (nominal PM, nominal GM, worst PM, worst GM).
    pub fn global_minima(&self) -> (f64, f64, f64, f64) {
        (
            worst_of(self.nominal.iter().map(SweepCell::pm), pm_worse),
            worst_of(self.nominal.iter().map(SweepCell::gm), gm_worse),
            worst_of(self.cells.iter().map(SweepCell::pm), pm_worse),
            worst_of(self.cells.iter().map(SweepCell::gm), gm_worse),
        )
    }

    /// `t,case_id,pm_deg,gm_db,wgc,wpc,stable`, one row per corner cell.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(MARGINS_HEADER)?;
        for c in &self.cells {
            w.write_record(cell_record(c))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "t",
            "nominal_pm_deg",
            "nominal_gm_db",
            "worst_pm_deg",
            "worst_gm_db",
            "worst_pm_case",
            "worst_gm_case",
            "failures",
        ])?;
        let id = |c: Option<usize>| c.map_or(String::new(), |v| v.to_string());
        for s in self.per_time() {
            w.write_record([
                s.t.to_string(),
                format_value(s.nominal_pm),
                format_value(s.nominal_gm),
                format_value(s.worst_pm),
                format_value(s.worst_gm),
                id(s.worst_pm_case),
                id(s.worst_gm_case),
                s.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Every crossing of every cell: `t,case_id,kind,omega,margin`.
    pub fn write_crossings_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "case_id", "kind", "omega", "margin"])?;
        for c in self.nominal.iter().chain(&self.cells) {
            let Ok(r) = &c.result else { continue };
            let id = c.case_id.map_or("nominal".to_string(), |v| v.to_string());
            let rows = r
                .gain_crossings
                .iter()
                .map(|x| ("pm_deg", x))
                .chain(r.phase_crossings.iter().map(|x| ("gm_db", x)));
            for (kind, x) in rows {
                w.write_record([c.t.to_string(), id.clone(), kind.to_string(), x.omega.to_string(), x.margin.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let open = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
            Ok(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))
        };
        self.write_csv(open("margins_vs_time.csv")?)?;
        self.write_summary_csv(open("margins_summary.csv")?)?;
        self.write_crossings_csv(open("margin_crossings.csv")?)?;
        Ok(())
    }
}

pub const MARGINS_HEADER: [&str; 7] = ["t", "case_id", "pm_deg", "gm_db", "wgc", "wpc", "stable"];

fn cell_record(c: &SweepCell) -> [String; 7] {
    let id = c.case_id.map_or("nominal".to_string(), |v| v.to_string());
    match &c.result {
        Ok(r) => [
            c.t.to_string(),
            id,
            format_value(r.phase_margin),
            format_value(r.gain_margin),
            format_value(r.wgc.unwrap_or(f64::NAN)),
            format_value(r.wpc.unwrap_or(f64::NAN)),
            r.stable.to_string(),
        ],
        Err(_) => [c.t.to_string(), id, "nan".into(), "nan".into(), "nan".into(), "nan".into(), "false".into()],
    }
}

/// Margins over `times` × `cases` (corner-case ids with their dispersion),
/// plus the nominal plant at each time. Cells are evaluated in parallel and
/// assembled in (time, case) order.
pub fn margin_sweep(
    template: &SimScenario,
    cases: &[(usize, UncertaintySet)],
    times: &[f64],
    channel: LoopChannel,
    config: &LoopConfig,
    grid: &[f64],
) -> Result<MarginSweep> {
    validate_grid(grid)?;
    let eval = |t: f64, case_id: Option<usize>, u: UncertaintySet| -> SweepCell {
        let mut s = template.clone();
        s.dispersion = u;
        let result = margins_at(&s, t, channel, config, grid).map_err(|e| e.to_string());
        SweepCell { t, case_id, result }
    };
    let nominal = times
        .par_iter()
        .map(|&t| eval(t, None, UncertaintySet::identity()))
        .collect();
    let jobs: Vec<(f64, usize, UncertaintySet)> = times
        .iter()
        .flat_map(|&t| cases.iter().map(move |&(id, u)| (t, id, u)))
        .collect();
    let cells = jobs.par_iter().map(|&(t, id, u)| eval(t, Some(id), u)).collect();
    Ok(MarginSweep { times: times.to_vec(), nominal, cells })
}

/// All corner cases at level `delta`, tagged with their ids.
pub fn corner_case_set(delta: f64) -> Result<Vec<(usize, UncertaintySet)>> {
    Ok(crate::trajectory::enumerate_corner_cases(delta)?.into_iter().enumerate().collect())
}

/// Nominal margins on a fine time grid, for the worst inter-node instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterNodeWorst {
    pub pm: f64,
    pub pm_t: f64,
    pub gm: f64,
    pub gm_t: f64,
}

pub fn internode_worst(
    template: &SimScenario,
    step: f64,
    channel: LoopChannel,
    config: &LoopConfig,
    grid: &[f64],
) -> Result<InterNodeWorst> {
    let times = sweep_times(template.table.start(), template.table.end(), step)?;
    let results = times
        .par_iter()
        .map(|&t| margins_at(template, t, channel, config, grid).map(|r| (t, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut w = InterNodeWorst { pm: f64::INFINITY, pm_t: f64::NAN, gm: f64::INFINITY, gm_t: f64::NAN };
    for (t, r) in results {
        if r.phase_margin < w.pm {
            w.pm = r.phase_margin;
            w.pm_t = t;
        }
        if gm_worse(r.gain_margin, w.gm) {
            w.gm = r.gain_margin;
            w.gm_t = t;
        }
    }
    Ok(w)
}

/// Phase (deg) of a single complex value on the Nichols branch convention.
pub fn phase_deg(v: Complex64) -> f64 {
    anchor_phase_deg(v.arg().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{default_grid, freq_response, LinearSystem, TransferFunction};

    fn tf(num: &[f64], den: &[f64]) -> TransferFunction {
        TransferFunction::from_coeffs(num, den).unwrap()
    }

    #[test]
    fn double_integrator_pd() {
        let l = tf(&[4.0, 6.25], &[1.0, 0.0, 0.0]);
        let r = gain_phase_margins(&l, &default_grid()).unwrap();
        assert!((r.phase_margin - 69.84).abs() < 0.05, "{}", r.phase_margin);
        assert_eq!(r.gain_margin, f64::INFINITY);
        assert!(r.wpc.is_none());
        assert!(r.stable);
        assert!((r.wgc.unwrap() - 4.2605).abs() < 1e-3);
    }

    #[test]
    fn pure_double_integrator() {
        let r = gain_phase_margins(&tf(&[1.0], &[1.0, 0.0, 0.0]), &default_grid()).unwrap();
        assert!(r.phase_margin.abs() < 1e-9);
        assert!((r.wgc.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn routh_boundary() {
        // K / (s (s+1) (s+2)) at K = 6 is marginally stable at ω = √2.
        let den = [1.0, 3.0, 2.0, 0.0];
        let r = gain_phase_margins(&tf(&[6.0], &den), &default_grid()).unwrap();
        assert!(r.gain_margin.abs() < 0.01, "{}", r.gain_margin);
        assert!((r.wpc.unwrap() - 2f64.sqrt()).abs() < 1e-6);

        let r = gain_phase_margins(&tf(&[3.0], &den), &default_grid()).unwrap();
        assert!((r.gain_margin - 20.0 * 2f64.log10()).abs() < 1e-6);
        assert!(r.stable);
        let r = gain_phase_margins(&tf(&[12.0], &den), &default_grid()).unwrap();
        assert!((r.gain_margin + 20.0 * 2f64.log10()).abs() < 1e-6);
        assert!(!r.stable);
    }

    #[test]
    fn gain_scaling_shifts_gm_only() {
        let den = [1.0, 3.0, 2.0, 0.0];
        let a = gain_phase_margins(&tf(&[1.0], &den), &default_grid()).unwrap();
        let b = gain_phase_margins(&tf(&[2.5], &den), &default_grid()).unwrap();
        assert!((a.gain_margin - b.gain_margin - 20.0 * 2.5f64.log10()).abs() < 1e-9);
        assert!((a.wpc.unwrap() - b.wpc.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn refinement_converges() {
        let l = tf(&[30.0, 20.0], &[1.0, 6.0, 5.0, 0.0, 0.0]);
        let coarse = gain_phase_margins(&l, &default_grid()).unwrap();
        let fine = gain_phase_margins(&l, &log_grid(1e-2, 1e3, 2000).unwrap()).unwrap();
        assert!((coarse.phase_margin - fine.phase_margin).abs() < 0.01);
        if coarse.gain_margin.is_finite() {
            assert!((coarse.gain_margin - fine.gain_margin).abs() < 0.01);
        }
    }

    #[test]
    fn nyquist_matches_closed_loop_eigenvalues() {
        let loops = [
            tf(&[6.25], &[1.0, 4.0, 0.0]),
            tf(&[2.0, 2.0], &[1.0, 0.0, -1.0]),
            tf(&[0.5], &[1.0, 0.0, -1.0]),
            tf(&[-3.0, -2.0], &[1.0, 0.5, -1.2]),
            tf(&[5.0, 6.0], &[1.0, 1.0, -2.0]),
            tf(&[20.0], &[1.0, 3.0, 2.0, 0.0]),
            tf(&[1.0, 2.0], &[1.0, 2.0, 3.0, 4.0, 0.0]),
            // slow unstable pole next to a stiff one
            tf(&[2e6, 2e6], &[1.0, 1999.999, 999998.0, -1000.0]),
        ];
        for l in &loops {
            let ss = LinearSystem::from_tf(l).unwrap();
            let acl = ss.unity_feedback_matrix().unwrap();
            let unstable = acl.complex_eigenvalues().iter().filter(|e| e.re > 1e-9).count();
            let z = nyquist_rhp_closed_loop_poles(l, &default_grid()).unwrap();
            assert!((z - unstable as f64).abs() < 0.05, "{l:?}: winding {z}, eigenvalues {unstable}");
            let z_ss = nyquist_rhp_closed_loop_poles(&ss, &default_grid()).unwrap();
            assert!((z_ss - unstable as f64).abs() < 0.05);
        }
    }

    #[test]
    fn nichols_points() {
        let r = freq_response(&tf(&[1.0], &[1.0, 0.0, 0.0, 0.0]), &default_grid()).unwrap();
        let n = nichols_data(&r);
        assert_eq!(n.len(), 200);
        assert!(n.iter().all(|p| (p.phase_deg + 270.0).abs() < 1e-9));
        let one = freq_response(&tf(&[1.0], &[1.0]), &[1.0]).unwrap();
        assert_eq!(nichols_data(&one)[0].gain_db, 0.0);
    }

    #[test]
    fn sweep_time_grid() {
        let t = sweep_times(0.0, 80.0, 2.5).unwrap();
        assert_eq!(t.len(), 33);
        assert_eq!(t[32], 80.0);
    }

    #[test]
    fn csv_infinity_literal() {
        assert_eq!(format_value(f64::INFINITY), "inf");
        assert_eq!(format_value(1.5), "1.5");
    }
}

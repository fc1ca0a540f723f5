use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ascent::campaign::{
    calibrate_bandwidth, case_subsample, nominal_error, pareto_sweep, run_campaign, run_metrics, sensitivity_grid,
    write_sensitivity_csv, write_sensitivity_summary_csv, CampaignTable,
};
use ascent::config::{parse_override, ScenarioConfig};
use ascent::control::ControllerKind;
use ascent::linear::{freq_response, linearize_closed_loop, LauncherLoop};
use ascent::sim::simulate;
use ascent::stability::{
    corner_case_set, format_value, gain_phase_margins, internode_worst, margin_sweep, nichols_data, sweep_times,
    write_nichols_csv,
};
use clap::{Args, Parser, Subcommand};

type CliResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

/// Launcher ascent attitude control: simulation, tuning, campaigns and
/// stability margins.
#[derive(Parser)]
#[command(name = "ascent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON); defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set wind.sigma=2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, short, default_value = "out")]
    out: PathBuf,
    /// Controller kind: pd, pd_qdot, indi, indi_lpf.
    #[arg(long)]
    controller: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One closed-loop run: telemetry.csv and metrics.csv.
    Simulate(Common),
    /// Prints and writes the gain schedule (gains.csv).
    Tune(Common),
    /// Corner-case Monte-Carlo campaign per controller.
    Campaign {
        #[command(flatten)]
        common: Common,
        /// Uncertainty level (1.0 = nominal dispersion box).
        #[arg(long)]
        delta: Option<f64>,
        /// Number of corner cases, a divisor of 256.
        #[arg(long)]
        cases: Option<usize>,
        /// Extra controllers to run alongside the configured one.
        #[arg(long = "also", value_name = "KIND")]
        also: Vec<String>,
    },
    /// Campaigns over the gyro-noise × command-delay grid.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Bandwidth trade-off sweep and equal-error calibration.
    Pareto {
        #[command(flatten)]
        common: Common,
        /// Skip the equal-error calibration.
        #[arg(long)]
        no_calibrate: bool,
    },
    /// Linear model and frequency response at one flight time.
    Linearize {
        #[command(flatten)]
        common: Common,
        /// Flight time (s).
        #[arg(long)]
        t: Option<f64>,
        /// Loop cut: nu_to_theta or thetaerr_to_theta.
        #[arg(long)]
        channel: Option<String>,
    },
    /// Margin sweep over corner cases and flight times.
    Margins {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        delta: Option<f64>,
        /// Spacing of the sweep instants (s).
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        channel: Option<String>,
    },
    /// Writes the synthetic reference trajectory (trajectory.csv).
    SynthTraj(Common),
}

impl Common {
    fn load(&self, extra: &[(&str, Option<String>)]) -> CliResult<ScenarioConfig> {
        let mut ov = self.overrides.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
        if let Some(k) = &self.controller {
            ov.push(("controller.kind".into(), k.clone()));
        }
        for (key, value) in extra {
            if let Some(v) = value {
                ov.push((key.to_string(), v.clone()));
            }
        }
        let cfg = ScenarioConfig::load(self.config.as_deref(), &ov)?;
        std::fs::create_dir_all(&self.out)
            .map_err(|e| format!("cannot create output directory {}: {e}", self.out.display()))?;
        Ok(cfg)
    }
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn string(v: Option<f64>) -> Option<String> {
    v.map(|x| x.to_string())
}

fn json_string(v: &Option<String>) -> Option<String> {
    v.as_ref().map(|s| format!("\"{s}\""))
}

fn kinds_of(primary: ControllerKind, also: &[String]) -> CliResult<Vec<ControllerKind>> {
    let mut kinds = vec![primary];
    for name in also {
        let k: ControllerKind = name.parse()?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    Ok(kinds)
}

fn cmd_simulate(c: &Common) -> CliResult<()> {
    let cfg = c.load(&[])?;
    let scenario = cfg.scenario()?;
    let log = simulate(&scenario)?;
    log.save(c.out.join("telemetry.csv"))?;
    let metrics = run_metrics(&scenario, 0)?;
    CampaignTable { rows: vec![metrics] }.save(c.out.join("metrics.csv"))?;
    println!("{}: {} samples -> {}", scenario.controller, log.t.len(), c.out.display());
    Ok(())
}

fn cmd_tune(c: &Common) -> CliResult<()> {
    let cfg = c.load(&[])?;
    let scenario = cfg.scenario()?;
    let controller = scenario.build_controller()?;
    let mut w = csv::Writer::from_writer(create(&c.out, "gains.csv")?);
    w.write_record(["t", "kp", "kd", "ka", "mu_c"])?;
    println!("controller {}", scenario.controller);
    println!("{:>8} {:>14} {:>14} {:>14} {:>12}", "t", "kp", "kd", "ka", "mu_c");
    for n in controller.schedule().nodes() {
        let g = n.gains;
        println!("{:>8.3} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.6}", n.t, g.kp, g.kd, g.ka, g.mu_c);
        w.write_record([n.t, g.kp, g.kd, g.ka, g.mu_c].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_campaign(c: &Common, delta: Option<f64>, cases: Option<usize>, also: &[String]) -> CliResult<()> {
    let cfg = c.load(&[("campaign.delta", string(delta)), ("campaign.cases", cases.map(|v| v.to_string()))])?;
    let template = cfg.scenario()?;
    let ids = case_subsample(cfg.campaign.cases)?;
    let mut summary = csv::Writer::from_writer(create(&c.out, "campaign_summary.csv")?);
    summary.write_record(["controller", "max_rms_theta_err_deg", "max_rms_beta_rate_dps", "diverged"])?;
    for kind in kinds_of(cfg.controller.kind, also)? {
        let mut s = template.clone();
        s.controller = kind;
        let table = run_campaign(&s, cfg.campaign.delta, &ids)?;
        table.save(c.out.join(format!("campaign_{kind}.csv")))?;
        let deg = |v: Option<f64>| v.map_or(String::new(), |x| x.to_degrees().to_string());
        summary.write_record([
            kind.to_string(),
            deg(table.max_rms_theta_err()),
            deg(table.max_rms_beta_rate()),
            table.diverged_count().to_string(),
        ])?;
        println!(
            "{kind}: {} runs, {} diverged, max RMS theta_err {} deg",
            table.rows.len(),
            table.diverged_count(),
            deg(table.max_rms_theta_err())
        );
    }
    summary.flush()?;
    Ok(())
}

fn cmd_sensitivity(c: &Common, delta: Option<f64>, cases: Option<usize>) -> CliResult<()> {
    let cfg = c.load(&[("campaign.delta", string(delta)), ("campaign.cases", cases.map(|v| v.to_string()))])?;
    let template = cfg.scenario()?;
    let ids = case_subsample(cfg.campaign.cases)?;
    let cells = sensitivity_grid(
        &template,
        cfg.campaign.delta,
        &ids,
        &cfg.campaign.noise_levels_dps,
        &cfg.campaign.delay_samples,
    )?;
    write_sensitivity_csv(&cells, create(&c.out, "sensitivity.csv")?)?;
    write_sensitivity_summary_csv(&cells, create(&c.out, "sensitivity_summary.csv")?)?;
    println!("{} cells x {} cases -> {}", cells.len(), ids.len(), c.out.display());
    Ok(())
}

fn cmd_pareto(c: &Common, no_calibrate: bool) -> CliResult<()> {
    let cfg = c.load(&[])?;
    let template = cfg.scenario()?;
    let kinds = match c.controller {
        Some(_) => vec![cfg.controller.kind],
        None => vec![ControllerKind::PdQdot, ControllerKind::IndiLpf],
    };
    for &kind in &kinds {
        let table = pareto_sweep(&template, kind, &cfg.campaign.pareto_bandwidths)?;
        table.write_csv(create(&c.out, &format!("pareto_{kind}.csv"))?)?;
        println!(
            "{kind}: error non-increasing {}, rate non-decreasing {}",
            table.error_monotone(),
            table.rate_monotone()
        );
    }
    if no_calibrate {
        return Ok(());
    }
    let target = match cfg.campaign.calibration_target_deg {
        Some(deg) => deg.to_radians(),
        None => nominal_error(&template, ControllerKind::IndiLpf, cfg.tuning.omega_beta)?
            .ok_or("indi_lpf diverges at its configured bandwidth")?,
    };
    let [lo, hi] = cfg.campaign.calibration_bracket;
    let mut w = csv::Writer::from_writer(create(&c.out, "calibration.csv")?);
    w.write_record(["controller", "bandwidth", "rms_theta_err_deg", "target_deg"])?;
    for &kind in &kinds {
        let cal = calibrate_bandwidth(&template, kind, target, lo, hi)?;
        w.write_record([
            kind.to_string(),
            cal.bandwidth.to_string(),
            cal.rms_theta_err.to_degrees().to_string(),
            cal.target.to_degrees().to_string(),
        ])?;
        println!("{kind}: equal-error bandwidth {:.4} rad/s", cal.bandwidth);
    }
    w.flush()?;
    Ok(())
}

fn cmd_linearize(c: &Common, t: Option<f64>, channel: &Option<String>) -> CliResult<()> {
    let cfg = c.load(&[("linearization.time", string(t)), ("linearization.channel", json_string(channel))])?;
    let scenario = cfg.scenario()?;
    let lin = &cfg.linearization;
    let model = LauncherLoop::new(&scenario, lin.time, lin.channel, lin.loop_config)?;
    let sys = linearize_closed_loop(&scenario, lin.time, lin.channel, &lin.loop_config)?;

    let mut w = csv::Writer::from_writer(create(&c.out, "state_space.csv")?);
    w.write_record(["matrix", "row", "col", "value"])?;
    for (name, m) in [("A", &sys.a), ("B", &sys.b), ("C", &sys.c), ("D", &sys.d)] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                w.write_record([name.to_string(), i.to_string(), j.to_string(), m[(i, j)].to_string()])?;
            }
        }
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(create(&c.out, "states.csv")?);
    w.write_record(["index", "state"])?;
    for (i, s) in model.states().iter().enumerate() {
        w.write_record([i.to_string(), s.name().to_string()])?;
    }
    w.flush()?;

    let grid = cfg.frequency_grid()?;
    let resp = freq_response(&sys, &grid)?;
    resp.save(c.out.join("frequency_response.csv"))?;
    write_nichols_csv(&nichols_data(&resp), create(&c.out, "nichols.csv")?)?;
    let m = gain_phase_margins(&sys, &grid)?;
    println!(
        "t = {} s, {}: {} states, PM {} deg, GM {} dB, stable {}",
        lin.time,
        lin.channel.name(),
        sys.n_states(),
        format_value(m.phase_margin),
        format_value(m.gain_margin),
        m.stable
    );
    Ok(())
}

fn cmd_margins(c: &Common, delta: Option<f64>, spacing: Option<f64>, channel: &Option<String>) -> CliResult<()> {
    let cfg = c.load(&[
        ("campaign.delta", string(delta)),
        ("linearization.spacing", string(spacing)),
        ("linearization.channel", json_string(channel)),
    ])?;
    let template = cfg.scenario()?;
    let lin = &cfg.linearization;
    let grid = cfg.frequency_grid()?;
    let times = sweep_times(template.table.start(), template.table.end(), lin.spacing)?;
    let cases = corner_case_set(cfg.campaign.delta)?;
    let sweep = margin_sweep(&template, &cases, &times, lin.channel, &lin.loop_config, &grid)?;
    sweep.save(&c.out)?;

    let sys = linearize_closed_loop(&template, lin.time, lin.channel, &lin.loop_config)?;
    write_nichols_csv(&nichols_data(&freq_response(&sys, &grid)?), create(&c.out, "nichols.csv")?)?;

    let inter = internode_worst(&template, lin.internode_step, lin.channel, &lin.loop_config, &grid)?;
    let mut w = csv::Writer::from_writer(create(&c.out, "internode_worst.csv")?);
    w.write_record(["pm_deg", "pm_t", "gm_db", "gm_t"])?;
    w.write_record([inter.pm, inter.pm_t, inter.gm, inter.gm_t].map(format_value))?;
    w.flush()?;

    let (npm, ngm, wpm, wgm) = sweep.global_minima();
    println!(
        "{} cells: nominal PM {} deg / GM {} dB, worst PM {} deg / GM {} dB",
        sweep.cells.len(),
        format_value(npm),
        format_value(ngm),
        format_value(wpm),
        format_value(wgm)
    );
    Ok(())
}

fn cmd_synth_traj(c: &Common) -> CliResult<()> {
    let cfg = c.load(&[])?;
    let table = cfg.load_table()?;
    table.save(c.out.join("trajectory.csv"))?;
    println!("{} rows over {} s -> {}", table.points().len(), table.duration(), c.out.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Simulate(c) => cmd_simulate(c),
        Command::Tune(c) => cmd_tune(c),
        Command::Campaign { common, delta, cases, also } => cmd_campaign(common, *delta, *cases, also),
        Command::Sensitivity { common, delta, cases } => cmd_sensitivity(common, *delta, *cases),
        Command::Pareto { common, no_calibrate } => cmd_pareto(common, *no_calibrate),
        Command::Linearize { common, t, channel } => cmd_linearize(common, *t, channel),
        Command::Margins { common, delta, spacing, channel } => cmd_margins(common, *delta, *spacing, channel),
        Command::SynthTraj(c) => cmd_synth_traj(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            eprintln!("{}", text.lines().next().unwrap_or("error: bad arguments"));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

use std::io::Write;

use ascent::campaign::{rms, run_campaign};
use ascent::config::ScenarioConfig;
use ascent::control::ControllerKind;
use ascent::sim::{simulate, CommandProfile, SimScenario, TELEMETRY_HEADER};
use ascent::trajectory::{synth_reference_trajectory, SynthProfile, TrajectoryTable};

fn base(kind: ControllerKind) -> SimScenario {
    let mut s = ScenarioConfig::default().scenario().unwrap();
    s.controller = kind;
    s
}

fn step(kind: ControllerKind) -> SimScenario {
    let mut s = base(kind);
    s.wind.enabled = false;
    s.duration = Some(12.0);
    s.command = CommandProfile::Step { time: 1.0, amplitude_deg: 1.0 };
    s
}

#[test]
fn quiet_run_stays_at_trim() {
    for kind in ControllerKind::ALL {
        let mut s = base(kind);
        s.wind.enabled = false;
        s.duration = Some(20.0);
        let log = simulate(&s).unwrap();
        assert_eq!(log.len(), 20 * 25 + 1);
        assert!(log.theta.iter().chain(&log.beta).all(|v| *v == 0.0), "{kind}");
    }
}

#[test]
fn step_responses_settle() {
    for kind in ControllerKind::ALL {
        let log = simulate(&step(kind)).unwrap();
        let last = log.theta.last().unwrap().to_degrees();
        // PD has a proportional-only steady state; the others track closely.
        let tol = if kind == ControllerKind::Pd { 0.3 } else { 0.08 };
        assert!((last - 1.0).abs() < tol, "{kind}: {last}");
        let peak = log.theta.iter().cloned().fold(f64::MIN, f64::max).to_degrees();
        assert!(peak < 1.3, "{kind} overshoot {peak}");
    }
}

#[test]
fn integrator_rate_convergence() {
    let run = |hz: u32| {
        let mut s = step(ControllerKind::IndiLpf);
        s.rates.integrator_hz = hz;
        simulate(&s).unwrap()
    };
    let (coarse, mid, fine) = (run(500), run(1000), run(2000));
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let d1 = diff(&coarse.theta, &fine.theta);
    let d2 = diff(&mid.theta, &fine.theta);
    assert!(d2 < d1 && d1 < 1e-6, "{d1} {d2}");
}

#[test]
fn wind_raises_error_and_seed_changes_realization() {
    let mut s = base(ControllerKind::IndiLpf);
    s.duration = Some(30.0);
    let a = simulate(&s).unwrap();
    s.wind.seed += 1;
    let b = simulate(&s).unwrap();
    assert!(rms(&a.theta_err).unwrap() > 0.0);
    assert_ne!(a.v_w, b.v_w);
    s.wind.sigma = 0.0;
    let c = simulate(&s).unwrap();
    assert!(c.v_w.iter().all(|v| *v == 0.0));
}

#[test]
fn telemetry_csv_is_reproducible() {
    let mut s = step(ControllerKind::Indi);
    s.sensors.gyro_3sigma_dps = 0.1;
    s.tvc_delay_samples = 1;
    let csv = || {
        let mut buf = Vec::new();
        simulate(&s).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    let a = csv();
    assert_eq!(a, csv());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next().unwrap(), TELEMETRY_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 12 * 25 + 1);
}

#[test]
fn campaign_rows_follow_case_order() {
    let mut s = base(ControllerKind::Pd);
    s.duration = Some(10.0);
    let ids = [200, 3, 77];
    let t = run_campaign(&s, 1.0, &ids).unwrap();
    assert_eq!(t.rows.iter().map(|r| r.case_id).collect::<Vec<_>>(), ids);
    assert!(run_campaign(&s, 1.0, &[256]).is_err());
    assert!(run_campaign(&s, -1.0, &ids).is_err());
}

#[test]
fn config_file_with_trajectory_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let table = synth_reference_trajectory(40.0, &SynthProfile::default()).unwrap();
    table.save(dir.path().join("traj.csv")).unwrap();
    let cfg = dir.path().join("scenario.json");
    let mut f = std::fs::File::create(&cfg).unwrap();
    write!(
        f,
        r#"{{"trajectory": {{"path": "traj.csv"}}, "controller": {{"kind": "pd_qdot"}}, "wind": {{"sigma": 1.5}}}}"#
    )
    .unwrap();
    drop(f);

    let overrides = vec![("delays.tvc_samples".to_string(), "2".to_string())];
    let c = ScenarioConfig::load(Some(&cfg), &overrides).unwrap();
    let s = c.scenario().unwrap();
    assert_eq!(s.controller, ControllerKind::PdQdot);
    assert_eq!(s.tvc_delay_samples, 2);
    assert_eq!(s.wind.sigma, 1.5);
    assert_eq!(s.table.duration(), 40.0);
    let loaded: &TrajectoryTable = &s.table;
    assert_eq!(loaded, &table);

    let bad = vec![("tuning.zeta".to_string(), "-1".to_string())];
    assert!(ScenarioConfig::load(Some(&cfg), &bad).is_err());
    let unknown = vec![("wind.gust".to_string(), "1".to_string())];
    assert!(ScenarioConfig::load(Some(&cfg), &unknown).is_err());
}

#[test]
fn shipped_configs_load() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let nominal = ScenarioConfig::load(Some(&dir.join("nominal.json")), &[]).unwrap();
    assert_eq!(nominal, ScenarioConfig::default());
    for name in ["step_response.json", "sensitivity_quick.json"] {
        ScenarioConfig::load(Some(&dir.join(name)), &[]).unwrap().scenario().unwrap();
    }
}

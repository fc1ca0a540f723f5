use std::sync::Arc;

use proptest::prelude::*;

use ascent::control::ControllerKind;
use ascent::linear::{default_grid, log_grid, LoopChannel, LoopConfig, TransferFunction};
use ascent::sim::SimScenario;
use ascent::stability::{corner_case_set, gain_phase_margins, margin_sweep, sweep_times};
use ascent::trajectory::{synth_reference_trajectory, SynthProfile, UncertaintySet, N_CORNER_CASES};

fn third_order(k: f64) -> TransferFunction {
    TransferFunction::from_coeffs(&[k], &[1.0, 3.0, 2.0, 0.0]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gain_scaling_shifts_gain_margin(k in 0.2f64..3.0, scale in 1.01f64..4.0) {
        let grid = default_grid();
        let a = gain_phase_margins(&third_order(k), &grid).unwrap();
        let b = gain_phase_margins(&third_order(k * scale), &grid).unwrap();
        prop_assert!((a.gain_margin - b.gain_margin - 20.0 * scale.log10()).abs() < 1e-6);
        prop_assert!((a.wpc.unwrap() - b.wpc.unwrap()).abs() < 1e-6);
    }

    #[test]
    fn refinement_converges(kp in 1.0f64..20.0, kd in 0.5f64..10.0) {
        let l = TransferFunction::from_coeffs(&[kd, kp], &[1.0, 0.0, 0.0]).unwrap();
        let coarse = gain_phase_margins(&l, &log_grid(1e-2, 1e3, 40).unwrap()).unwrap();
        let fine = gain_phase_margins(&l, &log_grid(1e-2, 1e3, 2000).unwrap()).unwrap();
        prop_assert!((coarse.phase_margin - fine.phase_margin).abs() < 0.01);
        let exact = {
            // |kp + j kd w| = w² at crossover.
            let w2 = 0.5 * (kd * kd + (kd.powi(4) + 4.0 * kp * kp).sqrt());
            (kd * w2.sqrt() / kp).atan().to_degrees()
        };
        prop_assert!((fine.phase_margin - exact).abs() < 1e-6);
    }
}

#[test]
fn stability_boundary_of_third_order_loop() {
    let grid = default_grid();
    assert!(gain_phase_margins(&third_order(5.0), &grid).unwrap().stable);
    assert!(!gain_phase_margins(&third_order(7.0), &grid).unwrap().stable);
}

#[test]
fn worst_case_never_exceeds_nominal() {
    let table = Arc::new(synth_reference_trajectory(80.0, &SynthProfile::default()).unwrap());
    let s = SimScenario::new(table, ControllerKind::IndiLpf);
    let mut cases: Vec<_> = corner_case_set(1.0).unwrap().into_iter().step_by(8).collect();
    cases.push((N_CORNER_CASES, UncertaintySet::identity()));
    let times = sweep_times(0.0, 80.0, 20.0).unwrap();
    let sweep =
        margin_sweep(&s, &cases, &times, LoopChannel::ThetaerrToTheta, &LoopConfig::full(), &default_grid()).unwrap();
    assert_eq!(sweep.cells.len(), cases.len() * times.len());
    for row in sweep.per_time() {
        assert_eq!(row.failures, 0);
        assert!(row.worst_pm <= row.nominal_pm);
        assert!(row.worst_gm.abs() <= row.nominal_gm.abs());
    }
}

#[test]
fn margin_csv_layout() {
    let table = Arc::new(synth_reference_trajectory(80.0, &SynthProfile::default()).unwrap());
    let s = SimScenario::new(table, ControllerKind::Indi);
    let cases = corner_case_set(1.0).unwrap();
    let sweep = margin_sweep(&s, &cases[..3], &[0.0, 40.0], LoopChannel::NuToTheta, &LoopConfig::perfect_inversion(), &default_grid())
        .unwrap();
    let mut buf = Vec::new();
    sweep.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,case_id,pm_deg,gm_db,wgc,wpc,stable");
    assert_eq!(lines.len(), 1 + 6);
}

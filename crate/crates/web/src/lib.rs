//! WebAssembly bindings for the browser demo. Every export takes plain
//! numbers and strings and returns a JSON document; non-finite values
//! (infinite margins) come out as `null`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ascent::campaign::rms;
use ascent::config::ScenarioConfig;
use ascent::control::ControllerKind;
use ascent::linear::{default_grid, freq_response, linearize_closed_loop, LoopChannel, LoopConfig};
use ascent::sim::{simulate, CommandProfile, SimScenario};
use ascent::stability::{gain_phase_margins, nichols_data, MarginResult};
use ascent::trajectory::{corner_case, N_CORNER_CASES};

fn scenario(controller: &str) -> Result<SimScenario, String> {
    let mut s = ScenarioConfig::default().scenario().map_err(|e| e.to_string())?;
    s.controller = controller.parse::<ControllerKind>().map_err(|e| e.to_string())?;
    Ok(s)
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn degrees(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.to_degrees()).collect()
}

fn margins_json(r: &MarginResult) -> Value {
    json!({
        "pm_deg": num(r.phase_margin),
        "gm_db": num(r.gain_margin),
        "wgc": r.wgc.map_or(Value::Null, num),
        "wpc": r.wpc.map_or(Value::Null, num),
        "stable": r.stable,
    })
}

fn channel_for(kind: ControllerKind, name: &str) -> Result<LoopChannel, String> {
    let channel = name.parse::<LoopChannel>().map_err(|e| e.to_string())?;
    if channel == LoopChannel::NuToTheta && !kind.is_indi() {
        return Err(format!("{kind} has no virtual control; use thetaerr_to_theta"));
    }
    Ok(channel)
}

fn finish(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Step response of one controller in wind: pitch, deflection and the
/// two RMS metrics.
pub fn step_response(
    controller: &str,
    amplitude_deg: f64,
    wind_sigma: f64,
    gyro_3sigma_dps: f64,
    delay_samples: u32,
    duration: f64,
) -> Result<Value, String> {
    let mut s = scenario(controller)?;
    s.command = CommandProfile::Step { time: 1.0, amplitude_deg };
    s.wind.enabled = wind_sigma > 0.0;
    s.wind.sigma = wind_sigma;
    s.sensors.gyro_3sigma_dps = gyro_3sigma_dps;
    s.tvc_delay_samples = delay_samples as usize;
    s.duration = Some(duration);
    let log = simulate(&s).map_err(|e| e.to_string())?;
    Ok(json!({
        "t": log.t,
        "theta_cmd_deg": degrees(&log.theta_cmd),
        "theta_deg": degrees(&log.theta),
        "beta_deg": degrees(&log.beta),
        "rms_theta_err_deg": num(rms(&log.theta_err).map_err(|e| e.to_string())?.to_degrees()),
        "rms_beta_rate_dps": num(rms(&log.beta_dot).map_err(|e| e.to_string())?.to_degrees()),
    }))
}

/// Margins and Nichols curve of the linearized loop at flight time `t`.
/// `full` keeps actuator, filters, drift and nozzle dynamics; otherwise the
/// ideal-inversion model is used.
pub fn nichols_at(controller: &str, t: f64, channel: &str, full: bool) -> Result<Value, String> {
    let s = scenario(controller)?;
    let channel = channel_for(s.controller, channel)?;
    let config = if full { LoopConfig::full() } else { LoopConfig::perfect_inversion() };
    let grid = default_grid();
    let sys = linearize_closed_loop(&s, t, channel, &config).map_err(|e| e.to_string())?;
    let margins = gain_phase_margins(&sys, &grid).map_err(|e| e.to_string())?;
    let response = freq_response(&sys, &grid).map_err(|e| e.to_string())?;
    let points = nichols_data(&response);
    Ok(json!({
        "margins": margins_json(&margins),
        "phase_deg": points.iter().map(|p| num(p.phase_deg)).collect::<Vec<_>>(),
        "gain_db": points.iter().map(|p| num(p.gain_db)).collect::<Vec<_>>(),
    }))
}

/// Margins of every `stride`-th corner case at level `delta`, plus the
/// nominal plant, at flight time `t`.
pub fn corner_margins(controller: &str, t: f64, delta: f64, stride: u32) -> Result<Value, String> {
    let mut s = scenario(controller)?;
    let channel = LoopChannel::ThetaerrToTheta;
    let config = LoopConfig::full();
    let grid = default_grid();
    let eval = |s: &SimScenario| {
        linearize_closed_loop(s, t, channel, &config)
            .and_then(|sys| gain_phase_margins(&sys, &grid))
            .map_err(|e| e.to_string())
    };
    let nominal = eval(&s)?;
    let mut cases = Vec::new();
    for id in (0..N_CORNER_CASES).step_by(stride.max(1) as usize) {
        s.dispersion = corner_case(id, delta);
        let entry = match eval(&s) {
            Ok(r) => json!({ "id": id, "margins": margins_json(&r) }),
            Err(e) => json!({ "id": id, "error": e }),
        };
        cases.push(entry);
    }
    Ok(json!({ "nominal": margins_json(&nominal), "cases": cases }))
}

#[wasm_bindgen(js_name = stepResponse)]
pub fn step_response_json(
    controller: &str,
    amplitude_deg: f64,
    wind_sigma: f64,
    gyro_3sigma_dps: f64,
    delay_samples: u32,
    duration: f64,
) -> String {
    finish(step_response(controller, amplitude_deg, wind_sigma, gyro_3sigma_dps, delay_samples, duration))
}

#[wasm_bindgen(js_name = nicholsAt)]
pub fn nichols_at_json(controller: &str, t: f64, channel: &str, full: bool) -> String {
    finish(nichols_at(controller, t, channel, full))
}

#[wasm_bindgen(js_name = cornerMargins)]
pub fn corner_margins_json(controller: &str, t: f64, delta: f64, stride: u32) -> String {
    finish(corner_margins(controller, t, delta, stride))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn step_response_shape() {
        let v = parse(step_response_json("indi_lpf", 1.0, 0.0, 0.0, 0, 10.0));
        assert_eq!(v["t"].as_array().unwrap().len(), 251);
        let theta = v["theta_deg"].as_array().unwrap();
        assert!((theta.last().unwrap().as_f64().unwrap() - 1.0).abs() < 0.1);
        assert!(v["rms_beta_rate_dps"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn ideal_nichols_has_infinite_gain_margin() {
        let v = parse(nichols_at_json("indi", 30.0, "thetaerr_to_theta", false));
        assert!((v["margins"]["pm_deg"].as_f64().unwrap() - 69.84).abs() < 0.05);
        assert!(v["margins"]["gm_db"].is_null());
        assert_eq!(v["phase_deg"].as_array().unwrap().len(), 200);
    }

    #[test]
    fn corner_margins_subset() {
        let v = parse(corner_margins_json("indi_lpf", 40.0, 1.0, 64));
        let cases = v["cases"].as_array().unwrap();
        assert_eq!(cases.len(), 4);
        assert!(cases.iter().all(|c| c["margins"]["gm_db"].as_f64().is_some()));
    }

    #[test]
    fn errors_become_json() {
        assert!(parse(step_response_json("lqr", 1.0, 0.0, 0.0, 0, 5.0))["error"].is_string());
        assert!(parse(nichols_at_json("pd", 10.0, "nu_to_theta", true))["error"].is_string());
        assert!(parse(step_response_json("pd", 1.0, 0.0, 0.0, 0, 7.03))["error"].is_string());
    }
}

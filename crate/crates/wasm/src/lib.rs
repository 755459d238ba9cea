//! Browser bindings for the tracker demo. Every export returns a JSON string.

use std::collections::BTreeMap;

use rpmtrack::grid::{GridLogLikelihood, RpmGrid};
use rpmtrack::ingest::frame_signal;
use rpmtrack::pipeline::{frame_evidence, run_signal, GridConfig, RunConfig, SignalSource, TRACKER_METHOD};
use rpmtrack::synth::{synthesize, Scenario, ScenarioSpec};
use rpmtrack::tracker::{curvature_sigma, PosteriorState, TrackerConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, rpmtrack::Error>;

#[derive(Serialize)]
struct ScenarioRun {
    scenario: String,
    times_s: Vec<f64>,
    reference: Vec<f64>,
    tracker_mmse: Vec<f64>,
    tracker_sigma: Vec<f64>,
    baselines: BTreeMap<String, Vec<f64>>,
    rmse: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct CurvatureDemo {
    rpm: Vec<f64>,
    mass: Vec<f64>,
    sigma: Vec<f64>,
    sigma_at_mode: f64,
}

#[derive(Serialize)]
struct FrameView {
    frame_index: usize,
    time_s: f64,
    truth_rpm: f64,
    rpm: Vec<f64>,
    /// Normalized probabilities per estimator, plus "fused".
    curves: BTreeMap<String, Vec<f64>>,
}

fn config(scenario: &str, seed: u32, duration_s: f64, grid_step: f64) -> Result<(RunConfig, ScenarioSpec)> {
    let sc: Scenario = scenario.parse()?;
    let spec = ScenarioSpec {
        duration_s,
        ..ScenarioSpec::new(sc, seed as u64)
    };
    let cfg = RunConfig {
        source: SignalSource::Scenario(spec.clone()),
        grid: GridConfig {
            r_min: 300.0,
            r_max: 4000.0,
            step: grid_step,
        },
        baselines: ["yin", "cepstrum", "comb", "framewise"].map(String::from).to_vec(),
        ..RunConfig::default()
    };
    cfg.validate()?;
    Ok((cfg, spec))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn probabilities(l: &GridLogLikelihood) -> Vec<f64> {
    l.log_values.iter().map(|v| v.exp()).collect()
}

pub fn scenario_run_json(scenario: &str, seed: u32, duration_s: f64, grid_step: f64) -> Result<String> {
    let (cfg, spec) = config(scenario, seed, duration_s, grid_step)?;
    let (signal, truth) = synthesize(&spec)?;
    let reference = truth.per_frame(&cfg.framing, signal.len(), signal.sample_rate_hz);
    let res = run_signal(&signal, Some(reference.clone()), &cfg)?;
    let rmse = res
        .report
        .methods
        .iter()
        .filter_map(|(k, m)| m.rmse.map(|r| (k.clone(), r)))
        .collect();
    Ok(to_json(&ScenarioRun {
        scenario: scenario.to_string(),
        times_s: res.trajectory.iter().map(|p| p.time_s).collect(),
        reference,
        tracker_mmse: res.tracker_mmse(),
        tracker_sigma: res.trajectory.iter().map(|p| p.sigma_rpm).collect(),
        baselines: res.baselines.iter().map(|b| (b.method.clone(), b.rpms())).collect(),
        rmse,
    }))
}

/// Gaussian posterior of standard deviation `spread_rpm` at 2150 RPM on a 300–4000 grid.
pub fn curvature_demo_json(spread_rpm: f64) -> Result<String> {
    let grid = RpmGrid::with_step(300.0, 4000.0, 1.0)?;
    let rpm = grid.values();
    let mut mass: Vec<f64> = rpm.iter().map(|r| (-0.5 * ((r - 2150.0) / spread_rpm).powi(2)).exp()).collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(rpmtrack::Error::param("spread_rpm", "must be positive"));
    }
    mass.iter_mut().for_each(|m| *m /= total);
    let state = PosteriorState {
        grid,
        mass,
        frame_index: 1,
    };
    let sigma = curvature_sigma(&state, &TrackerConfig::default())?;
    let mode = grid.nearest_index(2150.0);
    Ok(to_json(&CurvatureDemo {
        sigma_at_mode: sigma[mode],
        rpm,
        mass: state.mass,
        sigma,
    }))
}

/// Evidence for one (1-based) frame of a synthetic scenario.
pub fn frame_view_json(scenario: &str, seed: u32, frame_index: usize, grid_step: f64) -> Result<String> {
    let (cfg, spec) = config(scenario, seed, 5.0, grid_step)?;
    let (signal, truth) = synthesize(&spec)?;
    let frames = frame_signal(&signal, &cfg.framing)?;
    let frame = frame_index
        .checked_sub(1)
        .and_then(|i| frames.get(i))
        .ok_or_else(|| rpmtrack::Error::param("frame_index", format!("must be in 1..={}", frames.len())))?;
    let grid = cfg.grid.build()?;
    let ev = frame_evidence(frame, signal.sample_rate_hz, &grid, &cfg.estimator_kinds()?, &cfg)?;
    let mut curves: BTreeMap<String, Vec<f64>> =
        ev.likelihoods.iter().map(|l| (l.estimator_id.clone(), probabilities(l))).collect();
    curves.insert("fused".into(), probabilities(&ev.fused));
    let reference = truth.per_frame(&cfg.framing, signal.len(), signal.sample_rate_hz);
    Ok(to_json(&FrameView {
        frame_index,
        time_s: frame.time_s,
        truth_rpm: reference[frame_index - 1],
        rpm: grid.values(),
        curves,
    }))
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

/// Synthesize a scenario, track it, and return all trajectories.
#[wasm_bindgen]
pub fn run_scenario(scenario: &str, seed: u32, duration_s: f64, grid_step: f64) -> std::result::Result<String, JsError> {
    js(scenario_run_json(scenario, seed, duration_s, grid_step))
}

#[wasm_bindgen]
pub fn curvature_demo(spread_rpm: f64) -> std::result::Result<String, JsError> {
    js(curvature_demo_json(spread_rpm))
}

#[wasm_bindgen]
pub fn frame_view(scenario: &str, seed: u32, frame_index: usize, grid_step: f64) -> std::result::Result<String, JsError> {
    js(frame_view_json(scenario, seed, frame_index, grid_step))
}

/// Name under which the tracker trajectory appears in `rmse`.
#[wasm_bindgen]
pub fn tracker_method() -> String {
    TRACKER_METHOD.to_string()
}

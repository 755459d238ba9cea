//! End-to-end wiring: configuration, per-frame evidence, tracking, baselines,
//! metrics and result files. Used by the CLI and the benchmark harness.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{c2g_fusion_framewise, single_estimator_pick, viterbi_stft, BaselinePoint, BaselineTrajectory, ViterbiConfig};
use crate::c2g::{curve_to_grid_loglik, C2gConfig};
use crate::error::{Error, Result};
use crate::estimators::{evidence_curve, EstimatorKind, EstimatorParams, EvidenceCurve};
use crate::fusion::{fuse_loglik, FusionWeights};
use crate::grid::{GridLogLikelihood, RpmGrid};
use crate::ingest::{frame_signal, load_signal, Frame, FramingConfig, Signal, SignalFormat};
use crate::metrics::{compute_metrics, stability, Metrics};
use crate::plot::{render_svg, Band, Series};
use crate::synth::{synthesize, Scenario, ScenarioSpec};
use crate::tracker::{track, TrackerConfig, TrajectoryPoint};

pub const TRACKER_METHOD: &str = "tracker";
pub const FRAMEWISE_METHOD: &str = "framewise";
pub const VITERBI_METHOD: &str = "viterbi";

/// Where the signal comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSource {
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<SignalFormat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_rate_hz: Option<f64>,
    },
    Scenario(ScenarioSpec),
}

impl Default for SignalSource {
    fn default() -> Self {
        SignalSource::Scenario(ScenarioSpec::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_min: 300.0,
            r_max: 4000.0,
            step: 1.0,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<RpmGrid> {
        RpmGrid::with_step(self.r_min, self.r_max, self.step).map_err(|e| Error::Config {
            field: "grid".into(),
            msg: e.to_string(),
        })
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub source: SignalSource,
    pub framing: FramingConfig,
    pub grid: GridConfig,
    pub estimators: Vec<String>,
    pub estimator_params: EstimatorParams,
    pub c2g: C2gConfig,
    pub fusion_weights: FusionWeights,
    pub tracker: TrackerConfig,
    pub viterbi: ViterbiConfig,
    /// Any of `yin`, `cepstrum`, `comb`, `framewise`, `viterbi`.
    pub baselines: Vec<String>,
    pub output_dir: Option<PathBuf>,
    pub dump_posteriors: bool,
    pub plot: bool,
    /// Seeds for `benchmark`/`ablate`.
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: SignalSource::default(),
            framing: FramingConfig::default(),
            grid: GridConfig::default(),
            estimators: EstimatorKind::ALL.iter().map(|k| k.id().to_string()).collect(),
            estimator_params: EstimatorParams::default(),
            c2g: C2gConfig::default(),
            fusion_weights: FusionWeights::default(),
            tracker: TrackerConfig::default(),
            viterbi: ViterbiConfig::default(),
            baselines: ["yin", "cepstrum", "comb", "framewise"].map(String::from).to_vec(),
            output_dir: None,
            dump_posteriors: false,
            plot: false,
            seeds: (1..=20).collect(),
        }
    }
}

fn config_err(field: &str, e: Error) -> Error {
    Error::Config {
        field: field.into(),
        msg: e.to_string(),
    }
}

/// A method that can be reported alongside the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Baseline {
    Single(EstimatorKind),
    Framewise,
    Viterbi,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Single(k) => k.id(),
            Baseline::Framewise => FRAMEWISE_METHOD,
            Baseline::Viterbi => VITERBI_METHOD,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            FRAMEWISE_METHOD | "c2g-fusion" | "fusion" => Ok(Baseline::Framewise),
            VITERBI_METHOD | "viterbi-stft" => Ok(Baseline::Viterbi),
            other => other.parse::<EstimatorKind>().map(Baseline::Single).map_err(|_| Error::Config {
                field: "baselines".into(),
                msg: format!("unknown baseline {other:?} (expected yin, cepstrum, comb, framewise or viterbi)"),
            }),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn estimator_kinds(&self) -> Result<Vec<EstimatorKind>> {
        if self.estimators.is_empty() {
            return Err(Error::Config {
                field: "estimators".into(),
                msg: "at least one estimator is required".into(),
            });
        }
        let mut kinds = Vec::new();
        for name in &self.estimators {
            let k: EstimatorKind = name.parse()?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        Ok(kinds)
    }

    pub fn baseline_kinds(&self) -> Result<Vec<Baseline>> {
        let mut out = Vec::new();
        for b in &self.baselines {
            let b = Baseline::parse(b)?;
            if !out.contains(&b) {
                out.push(b);
            }
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator_kinds()?;
        self.baseline_kinds()?;
        self.framing.validate().map_err(|e| config_err("framing", e))?;
        self.grid.build()?;
        self.c2g.validate().map_err(|e| config_err("c2g", e))?;
        self.fusion_weights.validate().map_err(|e| config_err("fusion_weights", e))?;
        self.tracker.validate().map_err(|e| config_err("tracker", e))?;
        if let SignalSource::Scenario(spec) = &self.source {
            spec.validate().map_err(|e| config_err("source", e))?;
        }
        Ok(())
    }
}

/// The evidence of a single frame at every stage.
#[derive(Debug, Clone)]
pub struct FrameEvidence {
    pub curves: Vec<EvidenceCurve>,
    pub likelihoods: Vec<GridLogLikelihood>,
    pub fused: GridLogLikelihood,
}

pub fn frame_evidence(
    frame: &Frame<'_>,
    sample_rate_hz: f64,
    grid: &RpmGrid,
    kinds: &[EstimatorKind],
    cfg: &RunConfig,
) -> Result<FrameEvidence> {
    let mut curves = Vec::with_capacity(kinds.len());
    let mut likelihoods = Vec::with_capacity(kinds.len());
    for &k in kinds {
        let curve = evidence_curve(k, frame, sample_rate_hz, grid.r_min(), grid.r_max(), &cfg.estimator_params)?;
        likelihoods.push(curve_to_grid_loglik(&curve, grid, &cfg.c2g, sample_rate_hz)?);
        curves.push(curve);
    }
    let fused = fuse_loglik(&likelihoods, &cfg.fusion_weights)?;
    Ok(FrameEvidence {
        curves,
        likelihoods,
        fused,
    })
}

/// Per-frame outputs that the tracker and all framewise methods need.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub grid: RpmGrid,
    pub times_s: Vec<f64>,
    pub fused: Vec<GridLogLikelihood>,
    /// Framewise single-estimator picks, keyed by estimator.
    pub picks: BTreeMap<EstimatorKind, Vec<f64>>,
}

struct FrameSummary {
    fused: GridLogLikelihood,
    picks: Vec<(EstimatorKind, f64)>,
}

fn summarize(frame: &Frame<'_>, fs: f64, grid: &RpmGrid, kinds: &[EstimatorKind], cfg: &RunConfig) -> Result<FrameSummary> {
    let ev = frame_evidence(frame, fs, grid, kinds, cfg)?;
    let mut picks = Vec::with_capacity(kinds.len());
    for (k, c) in kinds.iter().zip(&ev.curves) {
        picks.push((*k, single_estimator_pick(c, grid.r_min(), grid.r_max(), fs)?));
    }
    Ok(FrameSummary { fused: ev.fused, picks })
}

pub fn analyze(signal: &Signal, cfg: &RunConfig) -> Result<Analysis> {
    let grid = cfg.grid.build()?;
    let kinds = cfg.estimator_kinds()?;
    let frames = frame_signal(signal, &cfg.framing)?;
    let fs = signal.sample_rate_hz;
    #[cfg(feature = "parallel")]
    let iter = frames.par_iter();
    #[cfg(not(feature = "parallel"))]
    let iter = frames.iter();
    let summaries: Vec<FrameSummary> = iter
        .map(|f| summarize(f, fs, &grid, &kinds, cfg))
        .collect::<Result<_>>()?;

    let mut picks: BTreeMap<EstimatorKind, Vec<f64>> = BTreeMap::new();
    let mut fused = Vec::with_capacity(summaries.len());
    for s in summaries {
        for (k, r) in s.picks {
            picks.entry(k).or_default().push(r);
        }
        fused.push(s.fused);
    }
    Ok(Analysis {
        grid,
        times_s: frames.iter().map(|f| f.time_s).collect(),
        fused,
        picks,
    })
}

/// Per-method metrics; accuracy fields are present only when a reference exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p95: Option<f64>,
    pub jitter: f64,
    pub max_jump: f64,
}

impl MethodMetrics {
    pub fn evaluate(estimated: &[f64], reference: Option<&[f64]>) -> Result<Self> {
        match reference {
            Some(r) => {
                let Metrics { rmse, p95, jitter, max_jump } = compute_metrics(estimated, r)?;
                Ok(Self {
                    rmse: Some(rmse),
                    p95: Some(p95),
                    jitter,
                    max_jump,
                })
            }
            None => {
                let s = stability(estimated)?;
                Ok(Self {
                    rmse: None,
                    p95: None,
                    jitter: s.jitter,
                    max_jump: s.max_jump,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: usize,
    pub methods: BTreeMap<String, MethodMetrics>,
    /// Frames with the highest posterior entropy, most ambiguous first.
    pub conflict_frames: Vec<usize>,
}

/// In-memory result of [`run_signal`].
#[derive(Debug, Clone)]
pub struct RunResult {
    pub trajectory: Vec<TrajectoryPoint>,
    pub baselines: Vec<BaselineTrajectory>,
    pub reference: Option<Vec<f64>>,
    pub report: MetricsReport,
    pub posteriors: Option<Vec<Vec<f64>>>,
    pub grid: RpmGrid,
}

impl RunResult {
    pub fn baseline(&self, method: &str) -> Option<&BaselineTrajectory> {
        self.baselines.iter().find(|b| b.method == method)
    }

    pub fn tracker_mmse(&self) -> Vec<f64> {
        self.trajectory.iter().map(|p| p.mmse_rpm).collect()
    }
}

/// Frame indices (1-based) of the `k` highest-entropy posteriors; ties keep frame order.
pub fn conflict_frames(points: &[TrajectoryPoint], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[b].entropy_nats.total_cmp(&points[a].entropy_nats).then(a.cmp(&b)));
    idx.into_iter().take(k).map(|i| points[i].frame_index).collect()
}

/// Track an analysed signal and evaluate every configured baseline.
pub fn run_analysis(
    analysis: &Analysis,
    signal: Option<&Signal>,
    reference: Option<Vec<f64>>,
    cfg: &RunConfig,
) -> Result<RunResult> {
    let tracked = track(&analysis.fused, &analysis.times_s, &analysis.grid, &cfg.tracker, cfg.dump_posteriors)?;
    let mut baselines = Vec::new();
    for b in cfg.baseline_kinds()? {
        let traj = match b {
            Baseline::Framewise => c2g_fusion_framewise(&analysis.fused, &analysis.times_s)?,
            Baseline::Single(k) => {
                let picks = analysis.picks.get(&k).ok_or_else(|| Error::Config {
                    field: "baselines".into(),
                    msg: format!("baseline {k} requires estimator {k} to be enabled"),
                })?;
                BaselineTrajectory {
                    method: k.id().into(),
                    points: picks
                        .iter()
                        .zip(&analysis.times_s)
                        .enumerate()
                        .map(|(i, (&rpm, &time_s))| BaselinePoint {
                            frame_index: i + 1,
                            time_s,
                            rpm,
                        })
                        .collect(),
                }
            }
            Baseline::Viterbi => {
                let signal = signal.ok_or_else(|| Error::Config {
                    field: "baselines".into(),
                    msg: "viterbi needs the raw signal".into(),
                })?;
                viterbi_stft(signal, &cfg.framing, &analysis.grid, &cfg.viterbi)?
            }
        };
        baselines.push(traj);
    }

    let reference_slice = reference.as_deref();
    let mut methods = BTreeMap::new();
    let mmse: Vec<f64> = tracked.points.iter().map(|p| p.mmse_rpm).collect();
    methods.insert(TRACKER_METHOD.to_string(), MethodMetrics::evaluate(&mmse, reference_slice)?);
    for b in &baselines {
        methods.insert(b.method.clone(), MethodMetrics::evaluate(&b.rpms(), reference_slice)?);
    }
    let report = MetricsReport {
        frames: tracked.points.len(),
        methods,
        conflict_frames: conflict_frames(&tracked.points, 5),
    };
    Ok(RunResult {
        trajectory: tracked.points,
        baselines,
        reference,
        report,
        posteriors: tracked.posteriors,
        grid: analysis.grid,
    })
}

/// Load or synthesize the configured signal, plus its per-frame reference when known.
pub fn acquire_signal(cfg: &RunConfig) -> Result<(Signal, Option<Vec<f64>>)> {
    match &cfg.source {
        SignalSource::File {
            path,
            format,
            sample_rate_hz,
        } => {
            let format = format.or_else(|| SignalFormat::from_path(path)).ok_or_else(|| Error::Config {
                field: "source.format".into(),
                msg: format!("cannot infer format of {}", path.display()),
            })?;
            Ok((load_signal(path, format, *sample_rate_hz)?, None))
        }
        SignalSource::Scenario(spec) => {
            let (signal, truth) = synthesize(spec)?;
            let reference = truth.per_frame(&cfg.framing, signal.len(), signal.sample_rate_hz);
            Ok((signal, Some(reference)))
        }
    }
}

pub fn run_signal(signal: &Signal, reference: Option<Vec<f64>>, cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let analysis = analyze(signal, cfg)?;
    run_analysis(&analysis, Some(signal), reference, cfg)
}

/// Run the configured pipeline and write results to `cfg.output_dir` if set.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let (signal, reference) = acquire_signal(cfg)?;
    let result = run_signal(&signal, reference, cfg)?;
    if let Some(dir) = &cfg.output_dir {
        write_results(&result, cfg, dir)?;
    }
    Ok(result)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn trajectory_csv(points: &[TrajectoryPoint]) -> String {
    let mut s = String::from("frame_index,time_s,map_rpm,mmse_rpm,sigma_rpm,entropy_nats\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            p.frame_index, p.time_s, p.map_rpm, p.mmse_rpm, p.sigma_rpm, p.entropy_nats
        );
    }
    s
}

pub fn baseline_csv(traj: &BaselineTrajectory) -> String {
    let mut s = String::from("frame_index,time_s,rpm\n");
    for p in &traj.points {
        let _ = writeln!(s, "{},{},{}", p.frame_index, p.time_s, p.rpm);
    }
    s
}

pub fn reference_csv(points: &[TrajectoryPoint], reference: &[f64]) -> String {
    let mut s = String::from("frame_index,time_s,rpm_ref\n");
    for (p, r) in points.iter().zip(reference) {
        let _ = writeln!(s, "{},{},{}", p.frame_index, p.time_s, r);
    }
    s
}

/// One row per frame, one column per grid bin; the header lists the bin RPMs.
pub fn posterior_csv(grid: &RpmGrid, posteriors: &[Vec<f64>]) -> String {
    let mut s = String::with_capacity(posteriors.len() * grid.len() * 12);
    let header: Vec<String> = grid.values().iter().map(|r| r.to_string()).collect();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in posteriors {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            first = false;
            let _ = write!(s, "{v:e}");
        }
        s.push('\n');
    }
    s
}

pub fn trajectory_svg(result: &RunResult) -> String {
    let times: Vec<f64> = result.trajectory.iter().map(|p| p.time_s).collect();
    let mmse = result.tracker_mmse();
    let lo: Vec<f64> = result.trajectory.iter().map(|p| p.mmse_rpm - p.sigma_rpm).collect();
    let hi: Vec<f64> = result.trajectory.iter().map(|p| p.mmse_rpm + p.sigma_rpm).collect();
    const COLORS: [&str; 5] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    let base_rpms: Vec<Vec<f64>> = result.baselines.iter().map(|b| b.rpms()).collect();
    let mut series = Vec::new();
    if let Some(r) = &result.reference {
        series.push(Series {
            name: "reference",
            xs: &times,
            ys: r,
            color: "black",
            dashed: false,
        });
    }
    for (i, (b, ys)) in result.baselines.iter().zip(&base_rpms).enumerate() {
        series.push(Series {
            name: &b.method,
            xs: &times,
            ys,
            color: COLORS[i % COLORS.len()],
            dashed: true,
        });
    }
    series.push(Series {
        name: TRACKER_METHOD,
        xs: &times,
        ys: &mmse,
        color: "#d62728",
        dashed: false,
    });
    render_svg(
        "RPM trajectory (tracker MMSE ± σ)",
        "time [s]",
        "rpm",
        &series,
        Some(&Band {
            xs: &times,
            lo: &lo,
            hi: &hi,
            color: "#d62728",
        }),
    )
}

pub fn write_results(result: &RunResult, cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("trajectory.csv"), &trajectory_csv(&result.trajectory))?;
    for b in &result.baselines {
        write_file(&dir.join(format!("baseline_{}.csv", b.method)), &baseline_csv(b))?;
    }
    if let Some(r) = &result.reference {
        write_file(&dir.join("reference.csv"), &reference_csv(&result.trajectory, r))?;
    }
    let json = serde_json::to_string_pretty(&result.report)?;
    write_file(&dir.join("metrics.json"), &(json + "\n"))?;
    write_file(&dir.join("config.json"), &(cfg.to_json() + "\n"))?;
    if let Some(p) = &result.posteriors {
        write_file(&dir.join("posteriors.csv"), &posterior_csv(&result.grid, p))?;
    }
    if cfg.plot {
        write_file(&dir.join("trajectory.svg"), &trajectory_svg(result))?;
    }
    Ok(())
}

/// Mean RMSE/P95 of one method on one scenario over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub scenario: Scenario,
    pub method: String,
    pub rmse: f64,
    pub p95: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub scenarios: Vec<Scenario>,
    pub methods: Vec<String>,
    pub cells: Vec<BenchmarkCell>,
}

impl BenchmarkTable {
    pub fn cell(&self, scenario: Scenario, method: &str) -> Option<&BenchmarkCell> {
        self.cells.iter().find(|c| c.scenario == scenario && c.method == method)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scenario,method,rmse,p95,seeds\n");
        for c in &self.cells {
            let _ = writeln!(s, "{},{},{:.4},{:.4},{}", c.scenario, c.method, c.rmse, c.p95, c.seeds);
        }
        s
    }

    /// Methods as rows, one (RMSE, P95) column pair per scenario.
    pub fn to_text(&self) -> String {
        let width = self.methods.iter().map(|m| m.len()).max().unwrap_or(6).max(6);
        let mut s = format!("{:<width$}", "method");
        for sc in &self.scenarios {
            let _ = write!(s, " | {:>9} {:>9}", format!("{sc} RMSE"), format!("{sc} P95"));
        }
        s.push('\n');
        s.push_str(&"-".repeat(s.len() - 1));
        s.push('\n');
        for m in &self.methods {
            let _ = write!(s, "{m:<width$}");
            for sc in &self.scenarios {
                match self.cell(*sc, m) {
                    Some(c) => {
                        let _ = write!(s, " | {:>9.1} {:>9.1}", c.rmse, c.p95);
                    }
                    None => {
                        let _ = write!(s, " | {:>9} {:>9}", "-", "-");
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Synthetic run of `scenario` with `seed`, keeping every other setting from `cfg`.
/// A scenario source in `cfg` acts as the template for the generator parameters.
pub fn scenario_config(cfg: &RunConfig, scenario: Scenario, seed: u64) -> RunConfig {
    let template = match &cfg.source {
        SignalSource::Scenario(spec) if spec.scenario == scenario => spec.clone(),
        SignalSource::Scenario(spec) => ScenarioSpec {
            scenario,
            seed,
            duration_s: spec.duration_s,
            sample_rate_hz: spec.sample_rate_hz,
            ..ScenarioSpec::new(scenario, seed)
        },
        SignalSource::File { .. } => ScenarioSpec::new(scenario, seed),
    };
    RunConfig {
        source: SignalSource::Scenario(ScenarioSpec { seed, ..template }),
        output_dir: None,
        dump_posteriors: false,
        plot: false,
        ..cfg.clone()
    }
}

/// Every (scenario, seed) run; results in scenario-major, seed-minor order.
pub fn run_batch(cfg: &RunConfig, scenarios: &[Scenario], seeds: &[u64]) -> Result<Vec<(Scenario, u64, RunResult)>> {
    cfg.validate()?;
    let jobs: Vec<(Scenario, u64)> = scenarios.iter().flat_map(|&s| seeds.iter().map(move |&seed| (s, seed))).collect();
    let run = |&(s, seed): &(Scenario, u64)| -> Result<(Scenario, u64, RunResult)> {
        Ok((s, seed, run_pipeline(&scenario_config(cfg, s, seed))?))
    };
    #[cfg(feature = "parallel")]
    let out = jobs.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let out = jobs.iter().map(run).collect();
    out
}

/// Mean RMSE and P95 per scenario and method over `seeds`. Methods are the tracker plus
/// the configured baselines.
pub fn run_benchmark(cfg: &RunConfig, scenarios: &[Scenario], seeds: &[u64]) -> Result<BenchmarkTable> {
    if scenarios.is_empty() || seeds.is_empty() {
        return Err(Error::EmptyInput("scenarios and seeds"));
    }
    let runs = run_batch(cfg, scenarios, seeds)?;
    let mut methods: Vec<String> = cfg.baseline_kinds()?.iter().map(|b| b.name().to_string()).collect();
    methods.push(TRACKER_METHOD.to_string());
    let mut cells = Vec::new();
    for &sc in scenarios {
        for m in &methods {
            let (mut rmse, mut p95, mut n) = (0.0, 0.0, 0usize);
            for (_, _, r) in runs.iter().filter(|(s, _, _)| *s == sc) {
                let mm = r.report.methods.get(m).ok_or_else(|| Error::Config {
                    field: "baselines".into(),
                    msg: format!("method {m} missing from run"),
                })?;
                rmse += mm.rmse.unwrap_or(f64::NAN);
                p95 += mm.p95.unwrap_or(f64::NAN);
                n += 1;
            }
            cells.push(BenchmarkCell {
                scenario: sc,
                method: m.clone(),
                rmse: rmse / n as f64,
                p95: p95 / n as f64,
                seeds: n,
            });
        }
    }
    Ok(BenchmarkTable {
        scenarios: scenarios.to_vec(),
        methods,
        cells,
    })
}

/// Mean metrics of framewise fusion and the tracker over seeds of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub method: String,
    pub rmse: f64,
    pub p95: f64,
    pub jitter: f64,
    pub max_jump: f64,
    pub seeds: usize,
}

pub fn run_ablation(cfg: &RunConfig, scenario: Scenario, seeds: &[u64]) -> Result<Vec<AblationRow>> {
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seeds"));
    }
    let cfg = RunConfig {
        baselines: vec![FRAMEWISE_METHOD.to_string()],
        ..cfg.clone()
    };
    let runs = run_batch(&cfg, &[scenario], seeds)?;
    let reports: Vec<&MetricsReport> = runs.iter().map(|(_, _, r)| &r.report).collect();
    Ok(aggregate_methods(&reports, &[FRAMEWISE_METHOD, TRACKER_METHOD]))
}

/// Average per-method metrics over several reports. Missing accuracy fields average to NaN.
pub fn aggregate_methods(reports: &[&MetricsReport], methods: &[&str]) -> Vec<AblationRow> {
    methods
        .iter()
        .map(|&m| {
            let rows: Vec<&MethodMetrics> = reports.iter().filter_map(|r| r.methods.get(m)).collect();
            let n = rows.len() as f64;
            let mean = |f: &dyn Fn(&MethodMetrics) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
            AblationRow {
                method: m.to_string(),
                rmse: mean(&|r| r.rmse.unwrap_or(f64::NAN)),
                p95: mean(&|r| r.p95.unwrap_or(f64::NAN)),
                jitter: mean(&|r| r.jitter),
                max_jump: mean(&|r| r.max_jump),
                seeds: rows.len(),
            }
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("method,rmse,p95,jitter,max_jump,seeds\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.4},{:.4},{:.4},{:.4},{}", r.method, r.rmse, r.p95, r.jitter, r.max_jump, r.seeds);
    }
    s
}

/// Fused likelihood of a white Gaussian noise frame with standard deviation `rms`: what a
/// sensor dropout looks like to the estimators. Used as the corruption in burst tests.
pub fn dropout_likelihood(cfg: &RunConfig, sample_rate_hz: f64, rms: f64, seed: u64) -> Result<GridLogLikelihood> {
    let grid = cfg.grid.build()?;
    let kinds = cfg.estimator_kinds()?;
    let noise = Normal::new(0.0, rms).map_err(|e| Error::param("rms", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..cfg.framing.frame_len).map(|_| noise.sample(&mut rng)).collect();
    let frame = Frame {
        index: 1,
        start_sample: 0,
        data: &data,
        time_s: 0.0,
    };
    Ok(frame_evidence(&frame, sample_rate_hz, &grid, &kinds, cfg)?.fused)
}

/// Replace the fused likelihood of frames `start..start+len` (0-based) with `corrupt`.
pub fn inject_burst(fused: &mut [GridLogLikelihood], start: usize, len: usize, corrupt: &GridLogLikelihood) -> Result<()> {
    if start + len > fused.len() {
        return Err(Error::param("burst", "extends past the last frame"));
    }
    if fused.iter().any(|f| f.grid != corrupt.grid) {
        return Err(Error::GridMismatch);
    }
    for f in &mut fused[start..start + len] {
        *f = corrupt.clone();
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rpmtrack::ingest::{write_csv, write_wav, SignalFormat};
use rpmtrack::pipeline::{
    ablation_csv, run_ablation, run_benchmark, run_pipeline, GridConfig, RunConfig, SignalSource,
};
use rpmtrack::synth::{synthesize, Scenario, ScenarioSpec};

#[derive(Parser, Debug)]
#[command(name = "rpmtrack", version, about = "Tacho-less RPM tracking from vibration signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Track one recording or synthetic scenario and write the result bundle.
    Run(Common),
    /// Write a synthetic scenario as WAV/CSV plus its ground truth.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Signal file format.
        #[arg(long, value_enum, default_value_t = OutFormat::Wav)]
        format: OutFormat,
    },
    /// Mean RMSE/P95 per scenario and method over seeds.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Comma-separated scenarios.
        #[arg(long, value_delimiter = ',', default_value = "S1,S2,S3,S4")]
        scenarios: Vec<String>,
    },
    /// Framewise fusion versus the tracker on one scenario (default S5).
    Ablate(Common),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Wav,
    Csv,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input signal (.wav or .csv).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample rate for CSV input.
    #[arg(long = "sample-rate")]
    sample_rate: Option<f64>,
    /// Synthetic scenario S0..S5.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seed range `a..b` (inclusive) or comma list.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "dump-posteriors")]
    dump_posteriors: bool,
    #[arg(long)]
    plot: bool,
    /// Comma-separated baselines: yin, cepstrum, comb, framewise, viterbi.
    #[arg(long)]
    baselines: Option<String>,
    /// RPM grid `min:max:step`.
    #[arg(long)]
    grid: Option<String>,
    /// Frame length in samples.
    #[arg(long)]
    frame: Option<usize>,
    /// Hop in samples.
    #[arg(long)]
    hop: Option<usize>,
}

fn parse_grid(s: &str) -> Result<GridConfig> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--grid expects min:max:step, got {s:?}");
    }
    let num = |p: &str| -> Result<f64> { p.trim().parse().with_context(|| format!("--grid: bad number {p:?}")) };
    Ok(GridConfig {
        r_min: num(parts[0])?,
        r_max: num(parts[1])?,
        step: num(parts[2])?,
    })
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().with_context(|| format!("--seeds: bad start in {s:?}"))?;
        let b: u64 = b.trim().trim_start_matches('=').parse().with_context(|| format!("--seeds: bad end in {s:?}"))?;
        if b < a {
            bail!("--seeds: empty range {s:?}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("--seeds: bad seed {p:?}")))
        .collect()
}

fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &c.input {
        if c.scenario.is_some() {
            bail!("--input and --scenario are mutually exclusive");
        }
        let format = SignalFormat::from_path(path)
            .with_context(|| format!("--input: cannot tell format of {} (use .wav or .csv)", path.display()))?;
        cfg.source = SignalSource::File {
            path: path.clone(),
            format: Some(format),
            sample_rate_hz: c.sample_rate,
        };
    } else if let SignalSource::File { sample_rate_hz, .. } = &mut cfg.source {
        if c.sample_rate.is_some() {
            *sample_rate_hz = c.sample_rate;
        }
    }
    if let Some(name) = &c.scenario {
        let scenario: Scenario = name.parse()?;
        let seed = c.seed.unwrap_or(1);
        cfg.source = match &cfg.source {
            SignalSource::Scenario(spec) if spec.scenario == scenario => SignalSource::Scenario(ScenarioSpec { seed, ..spec.clone() }),
            _ => SignalSource::Scenario(ScenarioSpec::new(scenario, seed)),
        };
    } else if let (Some(seed), SignalSource::Scenario(spec)) = (c.seed, &mut cfg.source) {
        spec.seed = seed;
    }
    if let Some(s) = &c.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if let Some(out) = &c.out {
        cfg.output_dir = Some(out.clone());
    }
    cfg.dump_posteriors |= c.dump_posteriors;
    cfg.plot |= c.plot;
    if let Some(b) = &c.baselines {
        cfg.baselines = b.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(g) = &c.grid {
        cfg.grid = parse_grid(g)?;
    }
    if let Some(n) = c.frame {
        cfg.framing.frame_len = n;
    }
    if let Some(h) = c.hop {
        cfg.framing.hop = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn cmd_run(c: &Common) -> Result<()> {
    let cfg = build_config(c)?;
    let result = run_pipeline(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&result.report)?);
    if let Some(dir) = &cfg.output_dir {
        eprintln!("wrote results to {}", dir.display());
    }
    Ok(())
}

fn cmd_synth(c: &Common, format: OutFormat) -> Result<()> {
    let cfg = build_config(c)?;
    let spec = match &cfg.source {
        SignalSource::Scenario(spec) => spec.clone(),
        SignalSource::File { .. } => bail!("synth needs a scenario, not --input"),
    };
    let dir = cfg.output_dir.clone().context("synth needs --out <dir>")?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let (signal, truth) = synthesize(&spec)?;
    let signal_path = match format {
        OutFormat::Wav => {
            let p = dir.join("signal.wav");
            write_wav(&signal, &p)?;
            p
        }
        OutFormat::Csv => {
            let p = dir.join("signal.csv");
            write_csv(&signal, &p)?;
            p
        }
    };
    let reference = truth.per_frame(&cfg.framing, signal.len(), signal.sample_rate_hz);
    let mut gt = String::from("frame_index,time_s,rpm_ref\n");
    for (i, r) in reference.iter().enumerate() {
        let t = cfg.framing.center_time_s(i + 1, signal.sample_rate_hz);
        gt.push_str(&format!("{},{},{}\n", i + 1, t, r));
    }
    write(&dir.join("ground_truth.csv"), &gt)?;
    write(&dir.join("scenario.json"), &(serde_json::to_string_pretty(&spec)? + "\n"))?;
    eprintln!(
        "{} ({}): {} samples at {} Hz -> {}",
        spec.scenario,
        spec.scenario.describe(),
        signal.len(),
        signal.sample_rate_hz,
        signal_path.display()
    );
    Ok(())
}

fn cmd_benchmark(c: &Common, scenarios: &[String]) -> Result<()> {
    let mut cfg = build_config(c)?;
    if c.baselines.is_none() && c.config.is_none() {
        cfg.baselines = ["yin", "cepstrum", "comb"].map(String::from).to_vec();
    }
    let scenarios: Vec<Scenario> = scenarios.iter().map(|s| s.parse()).collect::<rpmtrack::Result<_>>()?;
    let table = run_benchmark(&cfg, &scenarios, &cfg.seeds)?;
    let text = table.to_text();
    print!("{text}");
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("benchmark.csv"), &table.to_csv())?;
        write(&dir.join("benchmark.txt"), &text)?;
    }
    Ok(())
}

fn cmd_ablate(c: &Common) -> Result<()> {
    let cfg = build_config(c)?;
    let scenario = match &cfg.source {
        SignalSource::File { .. } => bail!("ablate runs on synthetic scenarios"),
        _ if c.scenario.is_none() && c.config.is_none() => Scenario::S5,
        SignalSource::Scenario(spec) => spec.scenario,
    };
    let rows = run_ablation(&cfg, scenario, &cfg.seeds)?;
    let csv = ablation_csv(&rows);
    println!("{scenario} ({}) over {} seeds", scenario.describe(), cfg.seeds.len());
    println!("{:<10} {:>9} {:>9} {:>9} {:>9}", "method", "rmse", "p95", "jitter", "max_jump");
    for r in &rows {
        println!("{:<10} {:>9.2} {:>9.2} {:>9.2} {:>9.2}", r.method, r.rmse, r.p95, r.jitter, r.max_jump);
    }
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write(&dir.join("ablation.csv"), &csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Synth { common, format } => cmd_synth(common, *format),
        Command::Benchmark { common, scenarios } => cmd_benchmark(common, scenarios),
        Command::Ablate(c) => cmd_ablate(c),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

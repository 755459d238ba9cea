//! Synthetic stress-test signals with known speed trajectories.
//!
//! Every scenario is a harmonic series driven by an instantaneous fundamental
//! `f0(t) = rpm(t) / 60`, integrated at sample resolution, plus one stressor:
//!
//! | scenario | stressor |
//! |----------|----------|
//! | `S0` | none, constant speed |
//! | `S1` | half-order subharmonic |
//! | `S2` | white Gaussian noise at a target SNR |
//! | `S3` | non-harmonic periodic interference at `alpha * f0` |
//! | `S4` | detuned harmonics `m f0 (1 + δ_m)` |
//! | `S5` | speed step, no other stressor |
//!
//! S1–S4 ride on a slow sinusoidal speed wobble. Each component gets a seeded random
//! initial phase so that seeds produce distinct realizations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FramingConfig, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    S0,
    S1,
    S2,
    S3,
    S4,
    S5,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::S0,
        Scenario::S1,
        Scenario::S2,
        Scenario::S3,
        Scenario::S4,
        Scenario::S5,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            Scenario::S0 => "clean constant speed",
            Scenario::S1 => "octave ambiguity (subharmonic)",
            Scenario::S2 => "low SNR",
            Scenario::S3 => "periodic interference",
            Scenario::S4 => "inharmonicity",
            Scenario::S5 => "speed step",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S0" | "S0-CLEAN" | "CLEAN" => Ok(Scenario::S0),
            "S1" => Ok(Scenario::S1),
            "S2" => Ok(Scenario::S2),
            "S3" => Ok(Scenario::S3),
            "S4" => Ok(Scenario::S4),
            "S5" => Ok(Scenario::S5),
            other => Err(Error::Config {
                field: "scenario".into(),
                msg: format!("unknown scenario {other:?} (expected S0..S5)"),
            }),
        }
    }
}

/// Full description of one synthetic recording. Fields that do not belong to the
/// chosen scenario are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub base_rpm: f64,
    pub n_harmonics: usize,
    /// Defaults to `1/m` when absent.
    pub harmonic_amps: Option<Vec<f64>>,
    pub seed: u64,
    /// Relative wobble amplitude for S1–S4 (0.01 = ±1 %).
    pub wobble_fraction: f64,
    pub wobble_period_s: f64,
    /// S1: amplitude of the 0.5× component relative to the fundamental.
    pub sub_ratio: f64,
    /// S2
    pub snr_db: f64,
    /// S3: interference amplitude relative to the fundamental.
    pub interference_level: f64,
    /// S3: interference frequency ratio, must not be an integer.
    pub alpha: f64,
    /// S4: per-harmonic detuning δ_m; missing entries are zero.
    pub detuning: Vec<f64>,
    /// S5
    pub jump_rpm: f64,
    pub jump_time_s: f64,
    /// The trajectory must stay inside these bounds.
    pub rpm_bounds: (f64, f64),
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            scenario: Scenario::S0,
            duration_s: 5.0,
            sample_rate_hz: 12800.0,
            base_rpm: 1500.0,
            n_harmonics: 5,
            harmonic_amps: None,
            seed: 0,
            wobble_fraction: 0.01,
            wobble_period_s: 2.0,
            sub_ratio: 0.9,
            snr_db: -8.0,
            interference_level: 1.0,
            alpha: 3.7,
            detuning: vec![0.0, 0.004, -0.006, 0.008, -0.01],
            jump_rpm: 600.0,
            jump_time_s: 2.5,
            rpm_bounds: (300.0, 4000.0),
        }
    }
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        let mut spec = Self {
            scenario,
            seed,
            ..Self::default()
        };
        if scenario == Scenario::S5 {
            spec.base_rpm = 1200.0;
        }
        spec
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        match &self.harmonic_amps {
            Some(a) => a.clone(),
            None => (1..=self.n_harmonics).map(|m| 1.0 / m as f64).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::param("duration_s", "must be positive"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if self.n_harmonics == 0 {
            return Err(Error::param("n_harmonics", "must be at least 1"));
        }
        if let Some(a) = &self.harmonic_amps {
            if a.len() != self.n_harmonics {
                return Err(Error::param("harmonic_amps", "length must equal n_harmonics"));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(Error::param("snr_db", "must be finite"));
        }
        if self.scenario == Scenario::S3 && (self.alpha - self.alpha.round()).abs() < 1e-6 {
            return Err(Error::param("alpha", "interference ratio must not be an integer"));
        }
        if self.rpm_bounds.0 >= self.rpm_bounds.1 {
            return Err(Error::param("rpm_bounds", "lower bound must be below upper"));
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let trajectory = match self.scenario {
            Scenario::S0 => Trajectory::Constant,
            Scenario::S5 => Trajectory::Step {
                jump_rpm: self.jump_rpm,
                jump_time_s: self.jump_time_s,
            },
            _ => Trajectory::Wobble {
                fraction: self.wobble_fraction,
                period_s: self.wobble_period_s,
                phase: seeded_rng(self.seed, 1).gen_range(0.0..2.0 * PI),
            },
        };
        GroundTruth {
            base_rpm: self.base_rpm,
            trajectory,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    Constant,
    Wobble { fraction: f64, period_s: f64, phase: f64 },
    Step { jump_rpm: f64, jump_time_s: f64 },
}

/// Prescribed speed trajectory of a synthetic recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub base_rpm: f64,
    pub trajectory: Trajectory,
}

impl GroundTruth {
    pub fn rpm_at(&self, t: f64) -> f64 {
        match self.trajectory {
            Trajectory::Constant => self.base_rpm,
            Trajectory::Wobble {
                fraction,
                period_s,
                phase,
            } => self.base_rpm * (1.0 + fraction * (2.0 * PI * t / period_s + phase).sin()),
            Trajectory::Step { jump_rpm, jump_time_s } => {
                if t > jump_time_s {
                    self.base_rpm + jump_rpm
                } else {
                    self.base_rpm
                }
            }
        }
    }

    /// Reference RPM at every analysis frame center.
    pub fn per_frame(&self, framing: &FramingConfig, n_samples: usize, sample_rate_hz: f64) -> Vec<f64> {
        (1..=framing.frame_count(n_samples))
            .map(|t| self.rpm_at(framing.center_time_s(t, sample_rate_hz)))
            .collect()
    }
}

/// Deterministic RNG for a seed and a stream id (phases, noise, ...).
fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Separately returned parts of a synthetic recording.
#[derive(Debug, Clone)]
pub struct SynthParts {
    /// Harmonic series plus any deterministic stressor.
    pub clean: Vec<f64>,
    /// Additive noise (all zeros unless the scenario adds noise).
    pub noise: Vec<f64>,
    /// Base phase `2π ∫ f0` at every sample, in radians.
    pub phase: Vec<f64>,
    pub truth: GroundTruth,
}

pub fn synthesize_parts(spec: &ScenarioSpec) -> Result<SynthParts> {
    spec.validate()?;
    let fs = spec.sample_rate_hz;
    let n = (spec.duration_s * fs).round() as usize;
    if n == 0 {
        return Err(Error::param("duration_s", "shorter than one sample"));
    }
    let truth = spec.ground_truth();
    let (lo, hi) = spec.rpm_bounds;

    let mut phase = Vec::with_capacity(n);
    let mut theta = 0.0;
    for i in 0..n {
        let rpm = truth.rpm_at(i as f64 / fs);
        if !(rpm >= lo && rpm <= hi) {
            return Err(Error::TrajectoryOutOfBounds { rpm, r_min: lo, r_max: hi });
        }
        phase.push(theta);
        theta += 2.0 * PI * rpm / 60.0 / fs;
    }

    let amps = spec.amplitudes();
    let mut phase_rng = seeded_rng(spec.seed, 2);
    let mut offset = || phase_rng.gen_range(0.0..2.0 * PI);

    // (frequency multiplier, amplitude, initial phase)
    let mut components: Vec<(f64, f64, f64)> = amps
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let m = (i + 1) as f64;
            let detune = if spec.scenario == Scenario::S4 {
                spec.detuning.get(i).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            (m * (1.0 + detune), a, offset())
        })
        .collect();
    let fundamental = amps.first().copied().unwrap_or(1.0);
    match spec.scenario {
        Scenario::S1 => components.push((0.5, spec.sub_ratio * fundamental, offset())),
        Scenario::S3 => components.push((spec.alpha, spec.interference_level * fundamental, offset())),
        _ => {}
    }

    let clean: Vec<f64> = phase
        .iter()
        .map(|&th| components.iter().map(|&(mult, a, p0)| a * (mult * th + p0).sin()).sum())
        .collect();

    let noise = if spec.scenario == Scenario::S2 {
        let mut rng = seeded_rng(spec.seed, 3);
        let raw: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let signal_power = mean_power(&clean);
        let target = signal_power / 10f64.powf(spec.snr_db / 10.0);
        let scale = (target / mean_power(&raw)).sqrt();
        raw.into_iter().map(|v| v * scale).collect()
    } else {
        vec![0.0; n]
    };

    Ok(SynthParts {
        clean,
        noise,
        phase,
        truth,
    })
}

pub fn synthesize(spec: &ScenarioSpec) -> Result<(Signal, GroundTruth)> {
    let parts = synthesize_parts(spec)?;
    let samples = parts.clean.iter().zip(&parts.noise).map(|(c, e)| c + e).collect();
    Ok((Signal::new(samples, spec.sample_rate_hz)?, parts.truth))
}

pub fn mean_power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64
}

//! Reference methods: framewise single-estimator picks, framewise fusion
//! (no temporal recursion), and an STFT peak tracker decoded by dynamic programming.

use serde::{Deserialize, Serialize};

use crate::c2g::map_axis_to_rpm;
use crate::error::{Error, Result};
use crate::estimators::{padded_magnitude_spectrum, EvidenceCurve, Polarity};
use crate::grid::{GridLogLikelihood, RpmGrid};
use crate::ingest::{frame_signal, FramingConfig, Signal};
use crate::tracker::{estimate, PosteriorState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePoint {
    pub frame_index: usize,
    pub time_s: f64,
    pub rpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineTrajectory {
    pub method: String,
    pub points: Vec<BaselinePoint>,
}

impl BaselineTrajectory {
    pub fn rpms(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rpm).collect()
    }
}

/// Best native-axis point (min of a cost, max of a score) among those mapping into
/// `[r_min, r_max]`, converted to RPM. Ties go to the lower native coordinate.
pub fn single_estimator_pick(curve: &EvidenceCurve, r_min: f64, r_max: f64, sample_rate_hz: f64) -> Result<f64> {
    let sign = match curve.polarity {
        Polarity::Score => 1.0,
        Polarity::Cost => -1.0,
    };
    let mut best: Option<(f64, f64)> = None;
    for (&z, &v) in curve.axis.iter().zip(&curve.values) {
        let Ok(rpm) = map_axis_to_rpm(z, curve.axis_type, sample_rate_hz) else {
            continue;
        };
        if !(rpm >= r_min && rpm <= r_max) {
            continue;
        }
        let s = sign * v;
        if best.map_or(true, |(b, _)| s > b) {
            best = Some((s, rpm));
        }
    }
    best.map(|(_, r)| r).ok_or(Error::NoCandidateInBounds { r_min, r_max })
}

/// Per-frame posterior mean of the fused likelihood alone.
pub fn c2g_fusion_framewise(frames_loglik: &[GridLogLikelihood], times_s: &[f64]) -> Result<BaselineTrajectory> {
    if times_s.len() != frames_loglik.len() {
        return Err(Error::LengthMismatch {
            a: times_s.len(),
            b: frames_loglik.len(),
        });
    }
    if let Some(first) = frames_loglik.first() {
        if frames_loglik.iter().any(|l| l.grid != first.grid) {
            return Err(Error::GridMismatch);
        }
    }
    let points = frames_loglik
        .iter()
        .zip(times_s)
        .enumerate()
        .map(|(i, (l, &t))| {
            let state = PosteriorState {
                grid: l.grid,
                mass: l.probabilities(),
                frame_index: i + 1,
            };
            BaselinePoint {
                frame_index: i + 1,
                time_s: t,
                rpm: estimate(&state, t).mmse_rpm,
            }
        })
        .collect();
    Ok(BaselineTrajectory {
        method: "framewise".into(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub rpm: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViterbiConfig {
    pub transition_penalty_per_rpm: f64,
    pub n_candidates_per_frame: usize,
}

impl Default for ViterbiConfig {
    fn default() -> Self {
        Self {
            transition_penalty_per_rpm: 0.02,
            n_candidates_per_frame: 10,
        }
    }
}

/// Maximize `Σ_t score_t − penalty Σ_t |rpm_t − rpm_{t−1}|` over one candidate per frame.
/// Returns the chosen candidate index per frame and the path score.
pub fn viterbi_decode(candidates: &[Vec<Candidate>], penalty: f64) -> Result<(Vec<usize>, f64)> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput("candidate frames"));
    }
    if let Some(t) = candidates.iter().position(|c| c.is_empty()) {
        return Err(Error::NoSpectralPeaks { frame: t + 1 });
    }
    if !(penalty >= 0.0) {
        return Err(Error::param("transition_penalty_per_rpm", "must be nonnegative"));
    }
    let mut acc: Vec<f64> = candidates[0].iter().map(|c| c.score).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(candidates.len());
    back.push(vec![0; acc.len()]);
    for t in 1..candidates.len() {
        let prev = &candidates[t - 1];
        let mut next = Vec::with_capacity(candidates[t].len());
        let mut ptr = Vec::with_capacity(candidates[t].len());
        for c in &candidates[t] {
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (i, (p, &a)) in prev.iter().zip(&acc).enumerate() {
                let v = if penalty == 0.0 { a } else { a - penalty * (c.rpm - p.rpm).abs() };
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            next.push(best + c.score);
            ptr.push(arg);
        }
        acc = next;
        back.push(ptr);
    }
    let mut last = 0;
    for (i, &v) in acc.iter().enumerate() {
        if v > acc[last] {
            last = i;
        }
    }
    let score = acc[last];
    let mut path = vec![0; candidates.len()];
    path[candidates.len() - 1] = last;
    for t in (1..candidates.len()).rev() {
        path[t - 1] = back[t][path[t]];
    }
    Ok((path, score))
}

/// Path score of an explicit candidate choice.
pub fn path_score(candidates: &[Vec<Candidate>], path: &[usize], penalty: f64) -> f64 {
    let mut s = 0.0;
    for (t, &i) in path.iter().enumerate() {
        s += candidates[t][i].score;
        if t > 0 {
            s -= penalty * (candidates[t][i].rpm - candidates[t - 1][path[t - 1]].rpm).abs();
        }
    }
    s
}

/// Top-`k` local maxima of the frame's magnitude spectrum whose frequency lies in the
/// grid's fundamental band. Peak positions are refined by a parabola through the log magnitudes.
pub fn stft_candidates(frame: &[f64], sample_rate_hz: f64, grid: &RpmGrid, k: usize) -> Vec<Candidate> {
    let (mags, bin_hz) = padded_magnitude_spectrum(frame, sample_rate_hz);
    let lo = ((grid.r_min() / 60.0 / bin_hz).floor() as usize).max(1);
    let hi = ((grid.r_max() / 60.0 / bin_hz).ceil() as usize).min(mags.len() - 2);
    let tiny = 1e-300;
    let mut peaks = Vec::new();
    for b in lo..=hi {
        let (l, c, r) = (mags[b - 1], mags[b], mags[b + 1]);
        if c > l && c >= r && c > 0.0 {
            let (ll, lc, lr) = ((l + tiny).ln(), c.ln(), (r + tiny).ln());
            let denom = ll - 2.0 * lc + lr;
            let delta = if denom < 0.0 { (0.5 * (ll - lr) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            let peak_log = lc - 0.25 * (ll - lr) * delta;
            let rpm = 60.0 * (b as f64 + delta) * bin_hz;
            if grid.contains(rpm) {
                peaks.push(Candidate { rpm, score: peak_log });
            }
        }
    }
    peaks.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.rpm.total_cmp(&b.rpm)));
    peaks.truncate(k);
    peaks
}

pub fn viterbi_stft(
    signal: &Signal,
    framing: &FramingConfig,
    grid: &RpmGrid,
    cfg: &ViterbiConfig,
) -> Result<BaselineTrajectory> {
    if cfg.n_candidates_per_frame == 0 {
        return Err(Error::param("n_candidates_per_frame", "must be at least 1"));
    }
    let frames = frame_signal(signal, framing)?;
    let candidates: Vec<Vec<Candidate>> = frames
        .iter()
        .map(|f| stft_candidates(f.data, signal.sample_rate_hz, grid, cfg.n_candidates_per_frame))
        .collect();
    let (path, _) = viterbi_decode(&candidates, cfg.transition_penalty_per_rpm)?;
    let points = frames
        .iter()
        .zip(&path)
        .map(|(f, &i)| BaselinePoint {
            frame_index: f.index,
            time_s: f.time_s,
            rpm: candidates[f.index - 1][i].rpm,
        })
        .collect();
    Ok(BaselineTrajectory {
        method: "viterbi".into(),
        points,
    })
}

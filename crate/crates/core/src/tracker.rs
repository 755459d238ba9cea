//! Curvature-adaptive recursive grid filter.
//!
//! Each frame: the transition spread at every bin is set from the curvature of the
//! previous log-posterior (sharp peak → tight transitions, flat → wide), the posterior is
//! diffused with those per-bin Gaussians, multiplied by the fused likelihood and
//! renormalized. Estimates are read from the updated posterior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::entropy;
use crate::grid::{argmax_first, logsumexp, GridLogLikelihood, RpmGrid};

/// Width of the moving average applied to the log-posterior before differencing.
pub const PRESMOOTH_WIDTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub sigma_min_rpm: f64,
    pub sigma_max_rpm: f64,
    pub eps_c: f64,
    /// Floor inside the logs of the curvature and update steps.
    pub eps_log: f64,
    /// Transition Gaussians are cut off beyond this many standard deviations.
    pub transition_truncation_sigmas: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            sigma_min_rpm: 40.0,
            sigma_max_rpm: 150.0,
            eps_c: 1e-12,
            eps_log: 1e-300,
            transition_truncation_sigmas: 4.0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_min_rpm > 0.0 && self.sigma_min_rpm <= self.sigma_max_rpm && self.sigma_max_rpm.is_finite()) {
            return Err(Error::param("sigma_min_rpm", "need 0 < sigma_min <= sigma_max"));
        }
        if !(self.eps_c > 0.0) {
            return Err(Error::param("eps_c", "must be positive"));
        }
        if !(self.eps_log > 0.0) {
            return Err(Error::param("eps_log", "must be positive"));
        }
        if !(self.transition_truncation_sigmas > 0.0) {
            return Err(Error::param("transition_truncation_sigmas", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState {
    pub grid: RpmGrid,
    pub mass: Vec<f64>,
    /// 0 before any frame has been absorbed.
    pub frame_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub frame_index: usize,
    pub time_s: f64,
    pub map_rpm: f64,
    pub mmse_rpm: f64,
    pub sigma_rpm: f64,
    pub entropy_nats: f64,
}

pub fn init_posterior(grid: &RpmGrid) -> PosteriorState {
    let g = grid.len();
    PosteriorState {
        grid: *grid,
        mass: vec![1.0 / g as f64; g],
        frame_index: 0,
    }
}

/// Per-bin transition standard deviations from the previous posterior's log-curvature.
pub fn curvature_sigma(prev: &PosteriorState, cfg: &TrackerConfig) -> Result<Vec<f64>> {
    let n = prev.mass.len();
    if n < 3 {
        return Err(Error::param("grid", "curvature needs at least 3 bins"));
    }
    let log_post: Vec<f64> = prev.mass.iter().map(|p| (p + cfg.eps_log).ln()).collect();

    let mut smooth = vec![0.0; n];
    smooth[0] = 0.5 * (log_post[0] + log_post[1]);
    smooth[n - 1] = 0.5 * (log_post[n - 2] + log_post[n - 1]);
    for j in 1..n - 1 {
        smooth[j] = (log_post[j - 1] + log_post[j] + log_post[j + 1]) / 3.0;
    }

    let inv_dr2 = 1.0 / prev.grid.step().powi(2);
    let mut curv = vec![0.0; n];
    for j in 1..n - 1 {
        curv[j] = (smooth[j + 1] - 2.0 * smooth[j] + smooth[j - 1]) * inv_dr2;
    }
    curv[0] = curv[1];
    curv[n - 1] = curv[n - 2];

    let lo = cfg.sigma_min_rpm.powi(2);
    let hi = cfg.sigma_max_rpm.powi(2);
    Ok(curv
        .iter()
        .map(|&c| {
            let q = (-c).max(0.0);
            (1.0 / (q + cfg.eps_c)).clamp(lo, hi).sqrt()
        })
        .collect())
}

/// exp(-d² a) for d = 0..=half, from LANES interleaved recurrences
/// k(d + L) = k(d) r(d), r(d + L) = r(d) exp(-2L² a), so that the chains pipeline.
fn gaussian_profile(a: f64, half: usize) -> Vec<f64> {
    const LANES: usize = 8;
    let l = LANES as f64;
    let mut k = [0.0; LANES];
    let mut r = [0.0; LANES];
    for c in 0..LANES {
        let cf = c as f64;
        k[c] = (-cf * cf * a).exp();
        r[c] = (-(2.0 * cf * l + l * l) * a).exp();
    }
    let g = (-2.0 * l * l * a).exp();
    let mut out = Vec::with_capacity(half + LANES);
    while out.len() <= half {
        out.extend_from_slice(&k);
        for c in 0..LANES {
            k[c] *= r[c];
            r[c] *= g;
        }
    }
    out.truncate(half + 1);
    out
}

fn lane_sum(x: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let chunks = x.chunks_exact(8);
    let tail: f64 = chunks.remainder().iter().sum();
    for c in chunks {
        for i in 0..8 {
            acc[i] += c[i];
        }
    }
    acc.iter().sum::<f64>() + tail
}

/// Source columns lighter than this are not diffused. Their spread would be lost next to
/// a unit total anyway and only costs subnormal arithmetic.
pub const NEGLIGIBLE_MASS: f64 = 1e-300;

/// Diffuse `prev` with a Gaussian of stddev `sigmas[j]` around every source bin `j`.
/// Each column is truncated and renormalized over the grid, so total mass is preserved.
pub fn predict(prev: &PosteriorState, sigmas: &[f64], cfg: &TrackerConfig) -> Result<Vec<f64>> {
    let n = prev.mass.len();
    if sigmas.len() != n {
        return Err(Error::LengthMismatch { a: sigmas.len(), b: n });
    }
    let step = prev.grid.step();
    let mut out = vec![0.0; n];
    // Mirrored kernel k[half + d] = k[half - d], rebuilt when sigma changes.
    let mut kernel: Vec<f64> = Vec::new();
    let mut full_side = 0.0;
    let mut cached: Option<(u64, usize)> = None;
    for (j, (&pj, &sigma)) in prev.mass.iter().zip(sigmas).enumerate() {
        if pj < NEGLIGIBLE_MASS {
            continue;
        }
        if !(sigma > 0.0) {
            return Err(Error::param("sigmas", "must be positive"));
        }
        let half = ((cfg.transition_truncation_sigmas * sigma / step).floor() as usize).min(n);
        if cached != Some((sigma.to_bits(), half)) {
            let profile = gaussian_profile(step * step / (2.0 * sigma * sigma), half);
            kernel.clear();
            kernel.extend(profile.iter().rev());
            kernel.extend(&profile[1..]);
            full_side = lane_sum(&profile[1..]);
            cached = Some((sigma.to_bits(), half));
        }
        let left = half.min(j);
        let right = half.min(n - 1 - j);
        let side = |m: usize| if m == half { full_side } else { lane_sum(&kernel[half + 1..=half + m]) };
        let z = 1.0 + side(left) + side(right);
        let scale = pj / z;
        for (o, &k) in out[j - left..=j + right].iter_mut().zip(&kernel[half - left..=half + right]) {
            *o += scale * k;
        }
    }
    Ok(out)
}

/// Multiply the predicted mass by the likelihood in the log domain and renormalize.
pub fn update(
    predicted: &[f64],
    fused: &GridLogLikelihood,
    cfg: &TrackerConfig,
    frame_index: usize,
) -> Result<PosteriorState> {
    if predicted.len() != fused.log_values.len() {
        return Err(Error::LengthMismatch {
            a: predicted.len(),
            b: fused.log_values.len(),
        });
    }
    let log_post: Vec<f64> = predicted
        .iter()
        .zip(&fused.log_values)
        .map(|(p, l)| (p + cfg.eps_log).ln() + l)
        .collect();
    let lse = logsumexp(&log_post);
    if !lse.is_finite() {
        return Err(Error::param("likelihood", "update produced no finite mass"));
    }
    Ok(PosteriorState {
        grid: fused.grid,
        mass: log_post.iter().map(|v| (v - lse).exp()).collect(),
        frame_index,
    })
}

/// MAP (lowest index on ties), posterior mean, posterior stddev and entropy.
pub fn estimate(post: &PosteriorState, time_s: f64) -> TrajectoryPoint {
    let grid = &post.grid;
    let map = grid.value(argmax_first(&post.mass));
    let mut mean = 0.0;
    for (g, p) in post.mass.iter().enumerate() {
        mean += grid.value(g) * p;
    }
    let mut var = 0.0;
    for (g, p) in post.mass.iter().enumerate() {
        var += p * (grid.value(g) - mean).powi(2);
    }
    TrajectoryPoint {
        frame_index: post.frame_index,
        time_s,
        map_rpm: map,
        mmse_rpm: mean.clamp(grid.r_min(), grid.r_max()),
        sigma_rpm: var.sqrt(),
        entropy_nats: entropy(&post.mass),
    }
}

/// Online filter holding the current posterior.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    state: PosteriorState,
}

impl Tracker {
    pub fn new(grid: &RpmGrid, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            state: init_posterior(grid),
        })
    }

    pub fn posterior(&self) -> &PosteriorState {
        &self.state
    }

    /// Absorb one frame's fused likelihood.
    pub fn step(&mut self, fused: &GridLogLikelihood, time_s: f64) -> Result<TrajectoryPoint> {
        if fused.grid != self.state.grid {
            return Err(Error::GridMismatch);
        }
        let sigmas = curvature_sigma(&self.state, &self.cfg)?;
        let predicted = predict(&self.state, &sigmas, &self.cfg)?;
        self.state = update(&predicted, fused, &self.cfg, self.state.frame_index + 1)?;
        Ok(estimate(&self.state, time_s))
    }
}

/// Output of [`track`]; `posteriors` is filled only when requested.
#[derive(Debug, Clone, Default)]
pub struct TrackOutput {
    pub points: Vec<TrajectoryPoint>,
    pub posteriors: Option<Vec<Vec<f64>>>,
}

/// Run the filter over a frame sequence. `times_s[t]` stamps frame `t + 1`.
pub fn track(
    frames_loglik: &[GridLogLikelihood],
    times_s: &[f64],
    grid: &RpmGrid,
    cfg: &TrackerConfig,
    keep_posteriors: bool,
) -> Result<TrackOutput> {
    if frames_loglik.is_empty() {
        return Err(Error::EmptyInput("frames"));
    }
    if times_s.len() != frames_loglik.len() {
        return Err(Error::LengthMismatch {
            a: times_s.len(),
            b: frames_loglik.len(),
        });
    }
    let mut tracker = Tracker::new(grid, *cfg)?;
    let mut out = TrackOutput {
        points: Vec::with_capacity(frames_loglik.len()),
        posteriors: keep_posteriors.then(Vec::new),
    };
    for (l, &t) in frames_loglik.iter().zip(times_s) {
        out.points.push(tracker.step(l, t)?);
        if let Some(p) = out.posteriors.as_mut() {
            p.push(tracker.posterior().mass.clone());
        }
    }
    Ok(out)
}

//! Per-frame evidence curves on each estimator's native search axis.
//!
//! Three estimators are provided:
//!
//! - YIN: cumulative-mean-normalized difference `d'(τ)` over integer lags (a cost).
//! - Real cepstrum: inverse DFT of the log-magnitude spectrum over quefrency (a score).
//! - Harmonic comb: mean spectral magnitude at the first `M` multiples of each
//!   candidate fundamental (a score).
//!
//! The full curve is returned; no peak picking happens here.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Frame;

/// Log-magnitude floor for the cepstrum.
pub const CEPSTRUM_LOG_FLOOR: f64 = 1e-12;
pub const DEFAULT_HARMONICS: usize = 5;
pub const DEFAULT_COMB_CANDIDATES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisType {
    Lag,
    Quefrency,
    Hz,
    Rpm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Score,
    Cost,
}

impl Polarity {
    pub fn sign(self) -> f64 {
        match self {
            Polarity::Score => 1.0,
            Polarity::Cost => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Score => Polarity::Cost,
            Polarity::Cost => Polarity::Score,
        }
    }
}

/// One estimator's raw curve on its native axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceCurve {
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
    pub axis_type: AxisType,
    pub polarity: Polarity,
    pub estimator_id: String,
}

impl EvidenceCurve {
    pub fn new(
        axis: Vec<f64>,
        values: Vec<f64>,
        axis_type: AxisType,
        polarity: Polarity,
        estimator_id: impl Into<String>,
    ) -> Result<Self> {
        let curve = Self {
            axis,
            values,
            axis_type,
            polarity,
            estimator_id: estimator_id.into(),
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axis.len() != self.values.len() {
            return Err(Error::param("curve", "axis and values differ in length"));
        }
        if self.axis.len() < 2 {
            return Err(Error::param("curve", "needs at least two points"));
        }
        if self.axis.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("curve", "axis must be strictly increasing"));
        }
        if self.values.iter().chain(&self.axis).any(|v| !v.is_finite()) {
            return Err(Error::param("curve", "non-finite entry"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Yin,
    Cepstrum,
    Comb,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [EstimatorKind::Yin, EstimatorKind::Cepstrum, EstimatorKind::Comb];

    pub fn id(self) -> &'static str {
        match self {
            EstimatorKind::Yin => "yin",
            EstimatorKind::Cepstrum => "cepstrum",
            EstimatorKind::Comb => "comb",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yin" => Ok(EstimatorKind::Yin),
            "cepstrum" | "cep" => Ok(EstimatorKind::Cepstrum),
            "comb" => Ok(EstimatorKind::Comb),
            other => Err(Error::Config {
                field: "estimators".into(),
                msg: format!("unknown estimator {other:?} (expected yin, cepstrum or comb)"),
            }),
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Symmetric Hann taper of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let denom = (n - 1) as f64;
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / denom).cos())
        .collect()
}

fn check_lag_bounds(name: &'static str, lo: usize, hi: usize, frame_len: usize) -> Result<()> {
    if lo < 2 || lo >= hi || hi > frame_len / 2 {
        return Err(Error::param(
            name,
            format!("need 2 <= min < max <= frame_len/2 (got {lo}..{hi}, frame_len {frame_len})"),
        ));
    }
    Ok(())
}

/// Lag/quefrency support matching an RPM range: `[floor(60 fs / r_max), ceil(60 fs / r_min)]`
/// clamped to `[2, N/2]`.
pub fn lag_bounds(sample_rate_hz: f64, r_min: f64, r_max: f64, frame_len: usize) -> (usize, usize) {
    let hi_cap = frame_len / 2;
    let lo = ((60.0 * sample_rate_hz / r_max).floor() as usize).clamp(2, hi_cap);
    let hi = ((60.0 * sample_rate_hz / r_min).ceil() as usize).clamp(2, hi_cap);
    (lo, hi)
}

/// Raw YIN difference function `d(τ)` for `τ = 0..=tau_max` over an integration
/// window of `N/2` samples, computed through an FFT cross-correlation.
pub fn yin_difference(frame: &[f64], tau_max: usize) -> Vec<f64> {
    let n = frame.len();
    let w = n / 2;
    let fft_len = (n + w).next_power_of_two();
    let mut a: Vec<Complex64> = vec![Complex64::default(); fft_len];
    let mut b: Vec<Complex64> = vec![Complex64::default(); fft_len];
    for (i, &x) in frame.iter().enumerate() {
        if i < w {
            a[i].re = x;
        }
        b[i].re = x;
    }
    let fwd = forward(fft_len);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai = ai.conj() * bi;
    }
    inverse(fft_len).process(&mut a);
    let inv_len = 1.0 / fft_len as f64;

    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &x in frame {
        acc += x * x;
        prefix.push(acc);
    }
    let energy = |tau: usize| prefix[tau + w] - prefix[tau];
    let e0 = energy(0);
    (0..=tau_max)
        .map(|tau| {
            let et = energy(tau);
            let d = e0 + et - 2.0 * a[tau].re * inv_len;
            // cancellation noise below this level is indistinguishable from an exact match
            if d <= 1e-12 * (e0 + et) {
                0.0
            } else {
                d
            }
        })
        .collect()
}

/// Cumulative-mean-normalized difference `d'(τ)` over `[tau_min, tau_max]` (cost curve).
/// Where the running mean of `d` is zero, `d'` is defined as 1.
pub fn yin_curve(frame: &Frame<'_>, _sample_rate_hz: f64, tau_min: usize, tau_max: usize) -> Result<EvidenceCurve> {
    check_lag_bounds("tau", tau_min, tau_max, frame.data.len())?;
    let d = yin_difference(frame.data, tau_max);
    let mut cum = 0.0;
    let mut axis = Vec::with_capacity(tau_max - tau_min + 1);
    let mut values = Vec::with_capacity(tau_max - tau_min + 1);
    for (tau, &dt) in d.iter().enumerate().skip(1) {
        cum += dt;
        if tau >= tau_min {
            let v = if cum > 0.0 { dt * tau as f64 / cum } else { 1.0 };
            axis.push(tau as f64);
            values.push(v);
        }
    }
    EvidenceCurve::new(axis, values, AxisType::Lag, Polarity::Cost, EstimatorKind::Yin.id())
}

/// Real cepstrum of the Hann-tapered frame over quefrencies `[q_min, q_max]` (score curve).
pub fn cepstrum_curve(frame: &Frame<'_>, _sample_rate_hz: f64, q_min: usize, q_max: usize) -> Result<EvidenceCurve> {
    let n = frame.data.len();
    check_lag_bounds("quefrency", q_min, q_max, n)?;
    let win = hann(n);
    let mut buf: Vec<Complex64> = frame
        .data
        .iter()
        .zip(&win)
        .map(|(x, w)| Complex64::new(x * w, 0.0))
        .collect();
    forward(n).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex64::new((c.norm() + CEPSTRUM_LOG_FLOOR).ln(), 0.0);
    }
    inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let axis = (q_min..=q_max).map(|q| q as f64).collect();
    let values = (q_min..=q_max).map(|q| buf[q].re * scale).collect();
    EvidenceCurve::new(axis, values, AxisType::Quefrency, Polarity::Score, EstimatorKind::Cepstrum.id())
}

/// Magnitude spectrum of the Hann-tapered frame zero-padded to `2N`, bins `0..=N`.
/// Returns `(magnitudes, bin_width_hz)`.
pub fn padded_magnitude_spectrum(frame: &[f64], sample_rate_hz: f64) -> (Vec<f64>, f64) {
    let n = frame.len();
    let fft_len = 2 * n;
    let win = hann(n);
    let mut buf = vec![Complex64::default(); fft_len];
    for (i, (x, w)) in frame.iter().zip(&win).enumerate() {
        buf[i].re = x * w;
    }
    forward(fft_len).process(&mut buf);
    let mags = buf[..=fft_len / 2].iter().map(|c| c.norm()).collect();
    (mags, sample_rate_hz / fft_len as f64)
}

fn interp(mags: &[f64], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    if i + 1 >= mags.len() {
        return *mags.last().unwrap_or(&0.0);
    }
    let frac = pos - i as f64;
    mags[i] * (1.0 - frac) + mags[i + 1] * frac
}

/// Harmonic comb score `h(f) = (1/M) Σ_m |X(m f)|` on `n_candidates` uniform
/// fundamentals in `[f_min, f_max]`.
pub fn comb_curve(
    frame: &Frame<'_>,
    sample_rate_hz: f64,
    f_min: f64,
    f_max: f64,
    n_candidates: usize,
    n_harmonics: usize,
) -> Result<EvidenceCurve> {
    if n_candidates < 2 {
        return Err(Error::param("n_candidates", "must be at least 2"));
    }
    if n_harmonics < 1 {
        return Err(Error::param("n_harmonics", "must be at least 1"));
    }
    if !(f_min > 0.0 && f_min < f_max && f_max < sample_rate_hz / (2.0 * n_harmonics as f64)) {
        return Err(Error::param(
            "f_max",
            format!("need 0 < f_min < f_max < fs/(2*{n_harmonics}); highest harmonic would exceed Nyquist"),
        ));
    }
    let (mags, bin_hz) = padded_magnitude_spectrum(frame.data, sample_rate_hz);
    let step = (f_max - f_min) / (n_candidates - 1) as f64;
    let inv_m = 1.0 / n_harmonics as f64;
    let axis: Vec<f64> = (0..n_candidates).map(|j| f_min + j as f64 * step).collect();
    let values = axis
        .iter()
        .map(|&f| {
            let sum: f64 = (1..=n_harmonics).map(|m| interp(&mags, m as f64 * f / bin_hz)).sum();
            sum * inv_m
        })
        .collect();
    EvidenceCurve::new(axis, values, AxisType::Hz, Polarity::Score, EstimatorKind::Comb.id())
}

/// Parameters to run every estimator over an RPM range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorParams {
    pub n_harmonics: usize,
    pub comb_candidates: usize,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            n_harmonics: DEFAULT_HARMONICS,
            comb_candidates: DEFAULT_COMB_CANDIDATES,
        }
    }
}

/// Compute one estimator's curve with search bounds derived from the RPM range.
pub fn evidence_curve(
    kind: EstimatorKind,
    frame: &Frame<'_>,
    sample_rate_hz: f64,
    r_min: f64,
    r_max: f64,
    params: &EstimatorParams,
) -> Result<EvidenceCurve> {
    match kind {
        EstimatorKind::Yin | EstimatorKind::Cepstrum => {
            let (lo, hi) = lag_bounds(sample_rate_hz, r_min, r_max, frame.data.len());
            if kind == EstimatorKind::Yin {
                yin_curve(frame, sample_rate_hz, lo, hi)
            } else {
                cepstrum_curve(frame, sample_rate_hz, lo, hi)
            }
        }
        EstimatorKind::Comb => comb_curve(
            frame,
            sample_rate_hz,
            r_min / 60.0,
            r_max / 60.0,
            params.comb_candidates,
            params.n_harmonics,
        ),
    }
}

//! Curve-to-grid alignment: native axis → RPM, robust standardization,
//! Gibbs energies and Gaussian kernel aggregation onto the shared grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{AxisType, EvidenceCurve, Polarity};
use crate::grid::{GridLogLikelihood, RpmGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct C2gConfig {
    /// Gibbs temperature.
    pub beta: f64,
    pub kernel_bandwidth_rpm: f64,
    /// Added to the IQR in standardization.
    pub eps_norm: f64,
    /// Kernel support in bandwidths; contributions beyond it are dropped.
    pub kernel_truncation_sigmas: f64,
}

impl Default for C2gConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            kernel_bandwidth_rpm: 0.5,
            eps_norm: 1e-10,
            kernel_truncation_sigmas: 6.0,
        }
    }
}

impl C2gConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", "must be positive"));
        }
        if !(self.kernel_bandwidth_rpm > 0.0 && self.kernel_bandwidth_rpm.is_finite()) {
            return Err(Error::param("kernel_bandwidth_rpm", "must be positive"));
        }
        if !(self.eps_norm > 0.0) {
            return Err(Error::param("eps_norm", "must be positive"));
        }
        if !(self.kernel_truncation_sigmas > 0.0) {
            return Err(Error::param("kernel_truncation_sigmas", "must be positive"));
        }
        Ok(())
    }
}

/// A smoothing kernel given by its log-density in bandwidth units, up to a constant.
pub trait SmoothingKernel {
    fn log_density(&self, u: f64) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianKernel;

impl SmoothingKernel for GaussianKernel {
    #[inline]
    fn log_density(&self, u: f64) -> f64 {
        -0.5 * u * u
    }
}

/// RPM of native coordinate `z`: `60 fs / z` for lag/quefrency (samples), `60 z` for Hz.
pub fn map_axis_to_rpm(z: f64, axis_type: AxisType, sample_rate_hz: f64) -> Result<f64> {
    match axis_type {
        AxisType::Lag | AxisType::Quefrency => {
            if !(z > 0.0) {
                return Err(Error::param("z", "lag/quefrency must be positive"));
            }
            Ok(60.0 * sample_rate_hz / z)
        }
        AxisType::Hz => Ok(60.0 * z),
        AxisType::Rpm => Ok(z),
    }
}

/// Percentile `p ∈ [0, 1]` of already sorted data, linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// `(c - median) / (IQR + eps)` with linear-interpolation quartiles.
pub fn robust_standardize(values: &[f64], eps: f64) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile_sorted(&sorted, 0.5);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let denom = iqr + eps;
    values.iter().map(|c| (c - median) / denom).collect()
}

/// `E = -κ c̃`: lower energy means better agreement for both polarities.
pub fn to_energy(standardized: &[f64], polarity: Polarity) -> Vec<f64> {
    let kappa = polarity.sign();
    standardized.iter().map(|c| -kappa * c).collect()
}

/// Build the normalized grid log-likelihood of one evidence curve with the Gaussian kernel.
pub fn curve_to_grid_loglik(
    curve: &EvidenceCurve,
    grid: &RpmGrid,
    cfg: &C2gConfig,
    sample_rate_hz: f64,
) -> Result<GridLogLikelihood> {
    curve_to_grid_loglik_with(curve, grid, cfg, sample_rate_hz, &GaussianKernel)
}

/// Kernel-generic form of [`curve_to_grid_loglik`].
///
/// The unnormalized mass at bin `g` is `Σ_m exp(-β E[m]) K((r_g - r_m)/h)` over curve
/// points within the truncation radius. It is accumulated in the log domain because
/// standardized energies of clean curves routinely reach magnitudes where `exp` overflows.
pub fn curve_to_grid_loglik_with<K: SmoothingKernel>(
    curve: &EvidenceCurve,
    grid: &RpmGrid,
    cfg: &C2gConfig,
    sample_rate_hz: f64,
    kernel: &K,
) -> Result<GridLogLikelihood> {
    cfg.validate()?;
    curve.validate()?;
    let energies = to_energy(&robust_standardize(&curve.values, cfg.eps_norm), curve.polarity);
    let h = cfg.kernel_bandwidth_rpm;
    let trunc = cfg.kernel_truncation_sigmas;
    let cutoff = trunc * h;
    let lo_edge = grid.r_min() - cutoff;
    let hi_edge = grid.r_max() + cutoff;

    let mut points = Vec::with_capacity(curve.len());
    for (&z, &e) in curve.axis.iter().zip(&energies) {
        let r = map_axis_to_rpm(z, curve.axis_type, sample_rate_hz)?;
        if r >= lo_edge && r <= hi_edge {
            points.push((r, -cfg.beta * e));
        }
    }
    if points.is_empty() {
        return Err(Error::CurveDisjointFromGrid);
    }

    let n = grid.len();
    let step = grid.step();
    let last = (n - 1) as isize;
    let window = |r: f64| {
        // one extra bin each side; the |u| test below decides membership
        let lo = ((r - cutoff - grid.r_min()) / step).floor() as isize - 1;
        let hi = ((r + cutoff - grid.r_min()) / step).ceil() as isize + 1;
        (lo.clamp(0, last) as usize, hi.clamp(0, last) as usize)
    };

    let mut max = vec![f64::NEG_INFINITY; n];
    for &(r, logw) in &points {
        let (lo, hi) = window(r);
        for (g, m) in max.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let u = (grid.value(g) - r) / h;
            if u.abs() <= trunc {
                *m = m.max(logw + kernel.log_density(u));
            }
        }
    }
    let mut sum = vec![0.0; n];
    for &(r, logw) in &points {
        let (lo, hi) = window(r);
        for g in lo..=hi {
            let u = (grid.value(g) - r) / h;
            if u.abs() <= trunc {
                sum[g] += (logw + kernel.log_density(u) - max[g]).exp();
            }
        }
    }
    let log_mass: Vec<f64> = max
        .iter()
        .zip(&sum)
        .map(|(&m, &s)| if m == f64::NEG_INFINITY { m } else { m + s.ln() })
        .collect();
    if log_mass.iter().all(|v| *v == f64::NEG_INFINITY) {
        return Err(Error::CurveDisjointFromGrid);
    }
    GridLogLikelihood::from_unnormalized(*grid, log_mass, curve.estimator_id.clone())
}

//! The shared RPM hypothesis grid and log-likelihoods defined on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ln(1e-300)`: the floor applied to grid log-probabilities so they stay finite.
pub const LOG_FLOOR: f64 = -690.775_527_898_213_7;

/// Uniform grid `r[g] = r_min + g * Δr`, `g = 0..G`, with `Δr = (r_max - r_min)/(G - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpmGrid {
    r_min: f64,
    r_max: f64,
    n_points: usize,
}

impl RpmGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite()) {
            return Err(Error::param("r_min", "must be positive"));
        }
        if !(r_max > r_min && r_max.is_finite()) {
            return Err(Error::param("r_max", "must exceed r_min"));
        }
        if n_points < 2 {
            return Err(Error::param("n_points", "need at least two grid points"));
        }
        Ok(Self {
            r_min,
            r_max,
            n_points,
        })
    }

    /// Grid with spacing `step`; `(r_max - r_min)/step` must be (close to) an integer.
    pub fn with_step(r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::param("step", "must be positive"));
        }
        let intervals = (r_max - r_min) / step;
        let rounded = intervals.round();
        if (intervals - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::param(
                "step",
                format!("range {r_min}..{r_max} is not a whole number of {step} rpm steps"),
            ));
        }
        Self::new(r_min, r_max, rounded as usize + 1)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n_points - 1) as f64
    }

    /// RPM value of 0-based bin `g`.
    pub fn value(&self, g: usize) -> f64 {
        if g + 1 == self.n_points {
            self.r_max
        } else {
            self.r_min + g as f64 * self.step()
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_points).map(|g| self.value(g)).collect()
    }

    pub fn contains(&self, rpm: f64) -> bool {
        rpm >= self.r_min && rpm <= self.r_max
    }

    /// Nearest bin to `rpm`, clamped into the grid.
    pub fn nearest_index(&self, rpm: f64) -> usize {
        let pos = ((rpm - self.r_min) / self.step()).round();
        pos.clamp(0.0, (self.n_points - 1) as f64) as usize
    }
}

/// Numerically stable `ln Σ exp(v)`. Returns `-inf` for an empty or all `-inf` input.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Shift log values so they sum to one in probability space.
pub(crate) fn normalize_log(values: &mut [f64]) {
    let lse = logsumexp(values);
    for v in values.iter_mut() {
        *v -= lse;
    }
}

/// Normalized log-probabilities over an [`RpmGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridLogLikelihood {
    pub grid: RpmGrid,
    pub log_values: Vec<f64>,
    pub estimator_id: String,
}

impl GridLogLikelihood {
    /// Normalizes `log_values` (which may contain `-inf`) and floors them at [`LOG_FLOOR`].
    pub fn from_unnormalized(grid: RpmGrid, mut log_values: Vec<f64>, estimator_id: impl Into<String>) -> Result<Self> {
        if log_values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                a: log_values.len(),
                b: grid.len(),
            });
        }
        if log_values.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::param("log_values", "NaN or +inf"));
        }
        if logsumexp(&log_values) == f64::NEG_INFINITY {
            return Err(Error::param("log_values", "no mass anywhere on the grid"));
        }
        normalize_log(&mut log_values);
        for v in log_values.iter_mut() {
            *v = v.max(LOG_FLOOR);
        }
        Ok(Self {
            grid,
            log_values,
            estimator_id: estimator_id.into(),
        })
    }

    pub fn uniform(grid: RpmGrid, estimator_id: impl Into<String>) -> Self {
        let v = -(grid.len() as f64).ln();
        Self {
            grid,
            log_values: vec![v; grid.len()],
            estimator_id: estimator_id.into(),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_values.iter().map(|v| v.exp()).collect()
    }

    pub fn log_normalizer(&self) -> f64 {
        logsumexp(&self.log_values)
    }

    /// Lowest-index bin of maximum likelihood.
    pub fn argmax(&self) -> usize {
        argmax_first(&self.log_values)
    }
}

/// Index of the first maximum.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

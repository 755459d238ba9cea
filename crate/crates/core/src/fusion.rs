//! Weighted log-linear pooling of grid likelihoods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridLogLikelihood, LOG_FLOOR};

pub const FUSED_ID: &str = "fused";

/// Per-estimator exponents; estimators not listed get weight 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FusionWeights {
    pub weights: BTreeMap<String, f64>,
}

impl FusionWeights {
    pub fn uniform() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<String>, weight: f64) -> Self {
        self.weights.insert(id.into(), weight);
        self
    }

    pub fn weight(&self, id: &str) -> f64 {
        self.weights.get(id).copied().unwrap_or(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::param("fusion weights", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// `log L(g) = Σ_i λ_i log p_i(g)`, renormalized over the grid.
pub fn fuse_loglik(likelihoods: &[GridLogLikelihood], weights: &FusionWeights) -> Result<GridLogLikelihood> {
    weights.validate()?;
    let first = likelihoods.first().ok_or(Error::EmptyInput("likelihoods"))?;
    if likelihoods.iter().any(|l| l.grid != first.grid) {
        return Err(Error::GridMismatch);
    }
    if likelihoods.iter().all(|l| weights.weight(&l.estimator_id) == 0.0) {
        return Err(Error::param("fusion weights", "at least one weight must be positive"));
    }
    let mut acc = vec![0.0; first.grid.len()];
    for l in likelihoods {
        let w = weights.weight(&l.estimator_id);
        if w == 0.0 {
            continue;
        }
        for (a, &v) in acc.iter_mut().zip(&l.log_values) {
            *a += w * v.max(LOG_FLOOR);
        }
    }
    GridLogLikelihood::from_unnormalized(first.grid, acc, FUSED_ID)
}

/// Shannon entropy in nats of a probability vector, with `0 ln 0 = 0`.
pub fn entropy(probabilities: &[f64]) -> f64 {
    -probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

pub fn posterior_entropy(loglik: &GridLogLikelihood) -> f64 {
    entropy(&loglik.probabilities())
}

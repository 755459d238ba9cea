//! Trajectory accuracy and stability metrics.

use serde::{Deserialize, Serialize};

use crate::c2g::quantile_sorted;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub p95: f64,
    pub jitter: f64,
    pub max_jump: f64,
}

/// Reference-free part: population stddev and max magnitude of successive increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    pub jitter: f64,
    pub max_jump: f64,
}

/// Linear-interpolation percentile, `p` in percent.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, p / 100.0)
}

pub fn stability(estimated: &[f64]) -> Result<Stability> {
    if estimated.len() < 2 {
        return Err(Error::param("estimated", "need at least two frames"));
    }
    let diffs: Vec<f64> = estimated.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    let max_jump = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    Ok(Stability {
        jitter: var.sqrt(),
        max_jump,
    })
}

pub fn compute_metrics(estimated: &[f64], reference: &[f64]) -> Result<Metrics> {
    if estimated.len() != reference.len() {
        return Err(Error::LengthMismatch {
            a: estimated.len(),
            b: reference.len(),
        });
    }
    let s = stability(estimated)?;
    let abs_err: Vec<f64> = estimated.iter().zip(reference).map(|(e, r)| (e - r).abs()).collect();
    let rmse = (abs_err.iter().map(|e| e * e).sum::<f64>() / abs_err.len() as f64).sqrt();
    Ok(Metrics {
        rmse,
        p95: percentile(&abs_err, 95.0),
        jitter: s.jitter,
        max_jump: s.max_jump,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_estimate() {
        let r = [1.0, 2.0, 3.0];
        let m = compute_metrics(&r, &r).unwrap();
        assert_eq!(m.rmse, 0.0);
        assert_eq!(m.p95, 0.0);
        // increments are all 1: no spread
        assert_eq!(m.jitter, 0.0);
        assert_eq!(m.max_jump, 1.0);
        let flat = [5.0; 4];
        let m = compute_metrics(&flat, &flat).unwrap();
        assert_eq!((m.rmse, m.p95, m.jitter, m.max_jump), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_offset() {
        let r = [100.0; 6];
        let e = [105.0; 6];
        let m = compute_metrics(&e, &r).unwrap();
        assert!((m.rmse - 5.0).abs() < 1e-12);
        assert!((m.p95 - 5.0).abs() < 1e-12);
        assert_eq!(m.jitter, 0.0);
        assert_eq!(m.max_jump, 0.0);
    }

    #[test]
    fn alternating_example() {
        let m = compute_metrics(&[0.0, 10.0, 0.0, 10.0], &[0.0; 4]).unwrap();
        assert!((m.rmse - 50f64.sqrt()).abs() < 1e-12);
        // increments [10, -10, 10]: mean 10/3, population variance 800/9
        assert!((m.jitter - (800.0f64 / 9.0).sqrt()).abs() < 1e-12);
        assert!((m.jitter - 9.428).abs() < 1e-3);
        assert_eq!(m.max_jump, 10.0);
        assert_eq!(m.p95, 10.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_metrics(&[1.0, 2.0], &[1.0]).is_err());
        assert!(compute_metrics(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[0.0, 10.0], 50.0), 5.0);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 100.0), 3.0);
    }
}

//! Independent reference implementations used by the property and acceptance suites.
//! Written from the formulas directly, sharing no code with the library beyond types.
#![allow(dead_code)]

use rpmtrack::estimators::{AxisType, EvidenceCurve, Polarity};
use rpmtrack::grid::{RpmGrid, LOG_FLOOR};
use rpmtrack::tracker::PosteriorState;

pub fn lse(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn percentile_linear(values: &[f64], q: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= s.len() {
        return s[s.len() - 1];
    }
    s[i] * (1.0 - (pos - i as f64)) + s[i + 1] * (pos - i as f64)
}

pub fn to_rpm(z: f64, axis: AxisType, fs: f64) -> f64 {
    match axis {
        AxisType::Lag | AxisType::Quefrency => 60.0 * fs / z,
        AxisType::Hz => 60.0 * z,
        AxisType::Rpm => z,
    }
}

/// Grid log-likelihood by the plain double loop over (bin, curve point).
/// `trunc = None` keeps every kernel term.
pub fn naive_c2g(
    curve: &EvidenceCurve,
    grid: &RpmGrid,
    beta: f64,
    h: f64,
    eps: f64,
    trunc: Option<f64>,
    fs: f64,
) -> Vec<f64> {
    let med = percentile_linear(&curve.values, 0.5);
    let iqr = percentile_linear(&curve.values, 0.75) - percentile_linear(&curve.values, 0.25);
    let kappa = match curve.polarity {
        Polarity::Score => 1.0,
        Polarity::Cost => -1.0,
    };
    let pts: Vec<(f64, f64)> = curve
        .axis
        .iter()
        .zip(&curve.values)
        .map(|(&z, &c)| {
            let energy = -kappa * (c - med) / (iqr + eps);
            (to_rpm(z, curve.axis_type, fs), -beta * energy)
        })
        .collect();
    let mut raw = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let r = grid.r_min() + g as f64 * (grid.r_max() - grid.r_min()) / (grid.len() - 1) as f64;
        let mut terms = Vec::new();
        for &(rm, logw) in &pts {
            let u = (r - rm) / h;
            if trunc.map_or(true, |t| u.abs() <= t) {
                terms.push(logw - 0.5 * u * u);
            }
        }
        raw.push(lse(&terms));
    }
    let z = lse(&raw);
    raw.iter().map(|v| (v - z).max(LOG_FLOOR)).collect()
}

/// π⁻(g) = Σ_j π(j) N_j(g) / Z_j with each column cut at floor(k σ_j / Δr) bins.
pub fn naive_predict(mass: &[f64], sigmas: &[f64], grid: &RpmGrid, k: f64) -> Vec<f64> {
    let n = mass.len();
    let dr = grid.step();
    let r = |i: usize| grid.r_min() + i as f64 * dr;
    let mut out = vec![0.0; n];
    for j in 0..n {
        let half = (k * sigmas[j] / dr).floor() as i64;
        let col: Vec<f64> = (0..n)
            .map(|g| {
                if (g as i64 - j as i64).abs() <= half {
                    (-(r(g) - r(j)).powi(2) / (2.0 * sigmas[j] * sigmas[j])).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let z: f64 = col.iter().sum();
        for g in 0..n {
            out[g] += mass[j] * col[g] / z;
        }
    }
    out
}

/// Discrete Gaussian mass on the grid.
pub fn gaussian_mass(grid: &RpmGrid, center: f64, s: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..grid.len())
        .map(|g| (-(grid.value(g) - center).powi(2) / (2.0 * s * s)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|v| v / z).collect()
}

pub fn gaussian_state(grid: &RpmGrid, center: f64, s: f64) -> PosteriorState {
    PosteriorState {
        grid: *grid,
        mass: gaussian_mass(grid, center, s),
        frame_index: 1,
    }
}

pub fn mean_std(grid: &RpmGrid, mass: &[f64]) -> (f64, f64) {
    let m: f64 = mass.iter().enumerate().map(|(g, p)| p * grid.value(g)).sum();
    let v: f64 = mass.iter().enumerate().map(|(g, p)| p * (grid.value(g) - m).powi(2)).sum();
    (m, v.sqrt())
}

/// Best path score by enumerating every path.
pub fn exhaustive_best(scores: &[Vec<(f64, f64)>], penalty: f64) -> f64 {
    fn rec(scores: &[Vec<(f64, f64)>], t: usize, prev: Option<f64>, acc: f64, penalty: f64, best: &mut f64) {
        if t == scores.len() {
            *best = best.max(acc);
            return;
        }
        for &(rpm, s) in &scores[t] {
            let trans = prev.map_or(0.0, |p| penalty * (rpm - p).abs());
            rec(scores, t + 1, Some(rpm), acc + s - trans, penalty, best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(scores, 0, None, 0.0, penalty, &mut best);
    best
}

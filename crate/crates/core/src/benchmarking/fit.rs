use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper clip of the fitted decay constant.
pub const P_MAX: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub amplitude: f64,
    pub p: f64,
    /// Standard error of `p` from the fit residuals.
    pub stderr: f64,
}

/// Weighted least squares of `ln y = ln A + m ln p`. Weights `w_i` are the
/// inverse variances of `ln y_i`. Returns `(intercept, slope, var(slope)
/// scaled by residuals, var(slope) from the weights alone)`.
fn weighted_line(m: &[f64], ly: &[f64], w: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(m).map(|(w, x)| w * x).sum();
    let swy: f64 = w.iter().zip(ly).map(|(w, y)| w * y).sum();
    let swxx: f64 = w.iter().zip(m).map(|(w, x)| w * x * x).sum();
    let swxy: f64 = w.iter().zip(m).zip(ly).map(|((w, x), y)| w * x * y).sum();
    let det = sw * swxx - swx * swx;
    if !(det > 0.0) || !det.is_finite() {
        return None;
    }
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swy - slope * swx) / sw;
    let n = m.len();
    let chi2: f64 = (0..n)
        .map(|i| w[i] * (ly[i] - intercept - slope * m[i]).powi(2))
        .sum();
    let var_weights = sw / det;
    let var_resid = if n > 2 { var_weights * chi2 / (n - 2) as f64 } else { 0.0 };
    Some((intercept, slope, var_resid, var_weights))
}

/// Fits `A p^m`. Weights `y^2` in the log domain correspond to equal
/// additive noise on `y`. Nonpositive points are dropped.
pub fn fit_exponential_decay(points: &[(f64, f64)]) -> Result<DecayFit> {
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|(_, y)| *y > 0.0 && y.is_finite()).collect();
    if kept.is_empty() {
        return Err(Error::FitFailed("no positive values".into()));
    }
    let mut depths: Vec<f64> = kept.iter().map(|p| p.0).collect();
    depths.sort_by(f64::total_cmp);
    depths.dedup();
    if depths.len() < 2 {
        return Err(Error::FitFailed("need at least two distinct depths".into()));
    }
    let m: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let ly: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let w: Vec<f64> = kept.iter().map(|p| p.1 * p.1).collect();
    let (a, b, var, _) = weighted_line(&m, &ly, &w).ok_or_else(|| Error::FitFailed("degenerate depths".into()))?;
    let p = b.exp();
    if !p.is_finite() {
        return Err(Error::FitFailed("non-finite decay".into()));
    }
    Ok(DecayFit {
        amplitude: a.exp(),
        p: p.clamp(0.0, P_MAX),
        stderr: p * var.max(0.0).sqrt(),
    })
}

/// Standard error of `p` propagated from per-point standard errors `sem`.
/// Zero when every point is exact.
pub(crate) fn sample_stderr(points: &[(f64, f64)], sem: &[f64], p: f64) -> f64 {
    if sem.iter().all(|s| *s == 0.0) {
        return 0.0;
    }
    let floor = sem.iter().copied().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min) * 1e-3;
    let mut m = Vec::new();
    let mut ly = Vec::new();
    let mut w = Vec::new();
    for ((x, y), s) in points.iter().zip(sem) {
        if *y > 0.0 {
            m.push(*x);
            ly.push(y.ln());
            w.push((y / s.max(floor)).powi(2));
        }
    }
    match weighted_line(&m, &ly, &w) {
        Some((_, _, _, var)) => p * var.sqrt(),
        None => f64::NAN,
    }
}

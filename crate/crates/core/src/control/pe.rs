use crate::error::{Error, Result};
use crate::quat::{Mat4x9, Mat9};

use super::lambda_min;

/// Sliding-window excitation level of a regressor history sampled every
/// `dt`: the minimum over window starts of `λmin(∫_t^{t+T} YᵀY dτ)`, with
/// the integral accumulated by the trapezoid rule.
pub fn pe_metric(history: &[Mat4x9], window: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) || !(window > 0.0) {
        return Err(Error::config("window and dt must be positive"));
    }
    let steps = (window / dt).round() as usize;
    let available = history.len().saturating_sub(1);
    if steps == 0 || available < steps {
        return Err(Error::InsufficientHistory {
            available: available as f64 * dt,
            window,
        });
    }
    // prefix[k] = ∫_0^{t_k} YᵀY
    let grams: Vec<Mat9> = history.iter().map(|y| y.transpose() * y).collect();
    let mut prefix = Vec::with_capacity(grams.len());
    prefix.push(Mat9::zeros());
    for k in 1..grams.len() {
        let next = prefix[k - 1] + 0.5 * dt * (grams[k - 1] + grams[k]);
        prefix.push(next);
    }
    let mut best = f64::INFINITY;
    for start in 0..=(available - steps) {
        let w = prefix[start + steps] - prefix[start];
        best = best.min(lambda_min(&(0.5 * (w + w.transpose()))));
    }
    Ok(best.max(0.0))
}

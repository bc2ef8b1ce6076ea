//! Sufficient gain conditions of the two adaptive controllers.
//!
//! Each condition has its own `α` constants; they are computed locally
//! and reported alongside the verdict so that the two sets never mix.

use serde::Serialize;

use super::{lambda_min, GainsAdaptiveOF, GainsAdaptiveSF};
use crate::bounds::{spectral_norm, BoundConstants};
use crate::quat::Mat4;

/// Verdict of a gain condition `value > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainCheck {
    pub pass: bool,
    /// Left-hand side of the strict inequality (`λmin(Kd)` or `kv`).
    pub value: f64,
    pub threshold: f64,
    /// `value − threshold`
    pub margin: f64,
    /// Intermediate constants, by name.
    pub constants: Vec<(String, f64)>,
}

fn verdict(value: f64, threshold: f64, constants: Vec<(&str, f64)>) -> GainCheck {
    GainCheck {
        pass: value > threshold,
        value,
        threshold,
        margin: value - threshold,
        constants: constants.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

/// `λmin(Kd) > (α₁ + α₂)²/(4kp) + α₁` with `α₁ = k_h1 + 2k_c1 + m̄` and
/// `α₂ = k_h2 + k_c1 sup‖q̇d‖`.
pub fn check_gains_adaptive_sf(gains: &GainsAdaptiveSF, b: &BoundConstants) -> GainCheck {
    let a1 = b.k_h1 + 2.0 * b.k_c1 + b.m_bar;
    let a2 = b.k_h2 + b.k_c1 * b.traj.qd_dot_sup;
    let threshold = (a1 + a2).powi(2) / (4.0 * gains.kp) + a1;
    verdict(lambda_min(&gains.kd), threshold, vec![("alpha1", a1), ("alpha2", a2)])
}

/// `kv > (β + α₁)/m_lower` with
/// `β = max{α₂²/(4kp), (α₃²kp + α₂²λmin(Kf))/(4kp λmin(Kf))}` and
/// `α₁ = k_h1 + 4k_c1 + m̄`,
/// `α₂ = k_h1 + k_h2 + k_c1 sup‖q̇d‖ + 4k_c1 + m̄|kp − 1|`,
/// `α₃ = k_h1 + k_c1 sup‖q̇d‖ + 4k_c1 + m̄‖Kf + I‖`.
pub fn check_gains_adaptive_of(gains: &GainsAdaptiveOF, b: &BoundConstants) -> GainCheck {
    let kp = gains.kp();
    let qd1 = b.traj.qd_dot_sup;
    let lf = lambda_min(gains.kf());
    let a1 = b.k_h1 + 4.0 * b.k_c1 + b.m_bar;
    let a2 = b.k_h1 + b.k_h2 + b.k_c1 * qd1 + 4.0 * b.k_c1 + b.m_bar * (kp - 1.0).abs();
    let a3 = b.k_h1 + b.k_c1 * qd1 + 4.0 * b.k_c1 + b.m_bar * spectral_norm(&(gains.kf() + Mat4::identity()));
    let beta = (a2 * a2 / (4.0 * kp)).max((a3 * a3 * kp + a2 * a2 * lf) / (4.0 * kp * lf));
    let threshold = (beta + a1) / b.m_lower;
    let value = gains.kv();
    let mut out = verdict(
        value,
        threshold,
        vec![("alpha1", a1), ("alpha2", a2), ("alpha3", a3), ("beta", beta)],
    );
    // kv > 0 is part of the design requirement independent of the bound.
    out.pass &= value > 0.0;
    out
}

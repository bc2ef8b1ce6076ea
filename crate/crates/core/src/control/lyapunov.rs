//! Lyapunov functions of the four closed loops, used as numeric
//! monotonicity monitors.

use super::{DesiredPoint, GainsAdaptiveOF, GainsStateFeedback, Mode};
use crate::dynamics::{d_matrix, InertiaModel};
use crate::quat::{UnitQuaternion, Vec4, Vec9};

/// Weight of `‖e‖²` in the state-feedback function. It must stay below
/// `4 λmin(Ks) λmin(Λ)` for the cross term `α eᵀs` to be dominated; with
/// `Λ = 0.1I`, `Ks = I` that bound is 0.4.
pub const STATE_FEEDBACK_ALPHA: f64 = 0.2;

fn errors(q: &UnitQuaternion, qdot: &Vec4, d: &DesiredPoint, h: Mode) -> (Vec4, Vec4) {
    let r = d.reassigned(h);
    (q.as_vec() - r.q, qdot - r.q_dot)
}

/// `½sᵀD(q)s + (α/2)‖e‖²`
pub fn v_state_feedback(
    q: &UnitQuaternion,
    qdot: &Vec4,
    d: &DesiredPoint,
    h: Mode,
    gains: &GainsStateFeedback,
    inertia: &InertiaModel,
    alpha: f64,
) -> f64 {
    let (e, e_dot) = errors(q, qdot, d, h);
    let s = e_dot + gains.lambda() * e;
    0.5 * s.dot(&(d_matrix(q, inertia) * s)) + 0.5 * alpha * e.norm_squared()
}

/// `½η₁ᵀD(q)η₁ + (kp/2)U + ‖Θ̃‖²/(2γ₂)`
#[allow(clippy::too_many_arguments)]
pub fn v_adaptive_sf(
    q: &UnitQuaternion,
    qdot: &Vec4,
    d: &DesiredPoint,
    h: Mode,
    kp: f64,
    gamma2: f64,
    theta_tilde: &Vec9,
    inertia: &InertiaModel,
) -> f64 {
    let (e, e_dot) = errors(q, qdot, d, h);
    let eta1 = e_dot + e;
    0.5 * eta1.dot(&(d_matrix(q, inertia) * eta1))
        + 0.5 * kp * e.norm_squared()
        + theta_tilde.norm_squared() / (2.0 * gamma2)
}

/// `½η₂ᵀD(q)η₂ + (kp/2)U + ½‖ν‖² + ½Θ̃ᵀΓ⁻¹Θ̃`
#[allow(clippy::too_many_arguments)]
pub fn v_adaptive_of(
    q: &UnitQuaternion,
    qdot: &Vec4,
    d: &DesiredPoint,
    h: Mode,
    nu: &Vec4,
    theta_tilde: &Vec9,
    gains: &GainsAdaptiveOF,
    inertia: &InertiaModel,
) -> f64 {
    let (e, e_dot) = errors(q, qdot, d, h);
    let eta2 = e_dot + e + nu;
    0.5 * eta2.dot(&(d_matrix(q, inertia) * eta2))
        + 0.5 * gains.kp() * e.norm_squared()
        + 0.5 * nu.norm_squared()
        + 0.5 * theta_tilde.dot(&(gains.gamma_inv() * theta_tilde))
}

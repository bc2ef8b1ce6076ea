use super::{check_spd, DesiredPoint, Mode};
use crate::dynamics::{c_matrix, d_matrix, InertiaModel};
use crate::error::Result;
use crate::quat::{Mat4, UnitQuaternion, Vec4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainsStateFeedback {
    lambda: Mat4,
    ks: Mat4,
}

impl GainsStateFeedback {
    pub fn new(lambda: Mat4, ks: Mat4) -> Result<Self> {
        check_spd(&lambda, "Lambda")?;
        check_spd(&ks, "Ks")?;
        Ok(Self { lambda, ks })
    }

    pub fn lambda(&self) -> &Mat4 {
        &self.lambda
    }

    pub fn ks(&self) -> &Mat4 {
        &self.ks
    }
}

/// Output of the (hybrid) state-feedback law with the error signals it
/// was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateFeedbackCommand {
    pub tau_bar: Vec4,
    pub e: Vec4,
    pub e_dot: Vec4,
    /// `s = ė + Λe`
    pub s: Vec4,
}

/// `τ̄ = D(q)q̈_r + C(q, q̇)q̇_r − K_s s` with the reference
/// `q̇_r = h·q̇d − Λe`.
///
/// Freezing `h` at its initial value gives the continuous controller.
pub fn control_state_feedback(
    q: &UnitQuaternion,
    qdot: &Vec4,
    d: &DesiredPoint,
    h: Mode,
    gains: &GainsStateFeedback,
    inertia: &InertiaModel,
) -> Result<StateFeedbackCommand> {
    let c = c_matrix(q, qdot, inertia)?;
    let r = d.reassigned(h);
    let e = q.as_vec() - r.q;
    let e_dot = qdot - r.q_dot;
    let qr_dot = r.q_dot - gains.lambda * e;
    let qr_ddot = r.q_ddot - gains.lambda * e_dot;
    let s = e_dot + gains.lambda * e;
    let tau_bar = d_matrix(q, inertia) * qr_ddot + c * qr_dot - gains.ks * s;
    Ok(StateFeedbackCommand {
        tau_bar,
        e,
        e_dot,
        s,
    })
}

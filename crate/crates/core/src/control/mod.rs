//! Tracking controllers on ℝ⁴ and their switching logic.
//!
//! All controllers return a generalized torque `τ̄ ∈ ℝ⁴`; the torque applied
//! to the body is `τ = 2Jᵀ(q)τ̄`.

mod adaptive_of;
mod adaptive_sf;
mod gains;
mod hybrid;
mod lyapunov;
mod pe;
mod state_feedback;

pub use adaptive_of::{
    control_adaptive_of, damping_filter_rate, damping_filter_step, ybar_d, ybar_d_dot,
    AdaptiveOFState, GainsAdaptiveOF, OutputFeedbackCommand, TanhDampingFilter,
};
pub(crate) use adaptive_of::tanh_filter_rate;
pub use adaptive_sf::{
    adaptive_sf_regressor_filters_step, control_adaptive_sf, filter_x_matrix, AdaptiveSFState,
    GainsAdaptiveSF, StateFeedbackAdaptiveCommand,
};
pub(crate) use adaptive_sf::yf_matrix;
pub use gains::{check_gains_adaptive_sf, check_gains_adaptive_of, GainCheck};
pub use hybrid::{gap, initial_mode, jump_rule, potential, tracking_error, HybridLogic, Jump, Mode};
pub use lyapunov::{v_adaptive_of, v_adaptive_sf, v_state_feedback, STATE_FEEDBACK_ALPHA};
pub use pe::pe_metric;
pub use state_feedback::{control_state_feedback, GainsStateFeedback, StateFeedbackCommand};

use nalgebra::{SMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::quat::{UnitQuaternion, Vec3, Vec4};

/// One sample of the desired attitude trajectory and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredPoint {
    pub qd: UnitQuaternion,
    pub qd_dot: Vec4,
    pub qd_ddot: Vec4,
    /// Third derivative; lets `Ȳ_d` be differentiated analytically.
    pub qd_dddot: Vec4,
    pub omega_d: Vec3,
    pub omega_d_dot: Vec3,
}

impl DesiredPoint {
    /// Constant attitude.
    pub fn at_rest(qd: UnitQuaternion) -> Self {
        Self {
            qd,
            qd_dot: Vec4::zeros(),
            qd_ddot: Vec4::zeros(),
            qd_dddot: Vec4::zeros(),
            omega_d: Vec3::zeros(),
            omega_d_dot: Vec3::zeros(),
        }
    }

    /// The trajectory reassigned to the hemisphere selected by `h`:
    /// `(h·qd, h·q̇d, h·q̈d, h·q⃛d)`.
    pub fn reassigned(&self, h: Mode) -> Reassigned {
        let s = h.sign();
        Reassigned {
            q: s * self.qd.as_vec(),
            q_dot: s * self.qd_dot,
            q_ddot: s * self.qd_ddot,
            q_dddot: s * self.qd_dddot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reassigned {
    pub q: Vec4,
    pub q_dot: Vec4,
    pub q_ddot: Vec4,
    pub q_dddot: Vec4,
}

pub(crate) fn check_spd<const N: usize>(m: &SMatrix<f64, N, N>, name: &str) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(format!("{name} has non-finite entries")));
    }
    if (m - m.transpose()).abs().max() > 1e-12 * (1.0 + m.abs().max()) {
        return Err(Error::config(format!("{name} must be symmetric")));
    }
    if lambda_min(m) <= 0.0 {
        return Err(Error::config(format!("{name} must be positive definite")));
    }
    Ok(())
}

pub(crate) fn lambda_min<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let dm = nalgebra::DMatrix::from_column_slice(N, N, m.as_slice());
    SymmetricEigen::new(dm).eigenvalues.min()
}

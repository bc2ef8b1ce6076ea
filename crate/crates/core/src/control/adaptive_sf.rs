use super::{check_spd, DesiredPoint, Mode};
use crate::dynamics::{f_map, regressor_bar_raw, regressors_raw};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::quat::{jmat, skew, Mat4, Mat4x6, Mat4x9, UnitQuaternion, Vec4, Vec9};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainsAdaptiveSF {
    pub kd: Mat4,
    pub kp: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda_f: f64,
}

impl GainsAdaptiveSF {
    pub fn new(kd: Mat4, kp: f64, gamma1: f64, gamma2: f64, lambda_f: f64) -> Result<Self> {
        check_spd(&kd, "Kd")?;
        for (name, v) in [("kp", kp), ("gamma1", gamma1), ("gamma2", gamma2), ("lambda_f", lambda_f)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            kd,
            kp,
            gamma1,
            gamma2,
            lambda_f,
        })
    }
}

/// `X = λf J(q)F(w) − 2J(q)S(w)F(w) + J(q̇)F(w)` with `w = Jᵀ(q)q̇`.
pub fn filter_x_matrix(q: &Vec4, qdot: &Vec4, lambda_f: f64) -> Mat4x6 {
    let j = jmat(q);
    let w = j.transpose() * qdot;
    let fw = f_map(&w);
    lambda_f * j * fw - 2.0 * j * skew(&w) * fw + jmat(qdot) * fw
}

/// Estimate plus the first-order filter memory of the composite
/// adaptation law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveSFState {
    pub theta_hat: Vec9,
    pub xf: Mat4x6,
    pub tau_f: Vec4,
    pub q_f: Vec4,
}

impl AdaptiveSFState {
    /// Filters start at their inputs: `Xf(0) = X(0)`, `τf(0) = τ̄(0)`,
    /// `qf(0) = q(0)`.
    pub fn new(theta_hat: Vec9, q: &Vec4, qdot: &Vec4, tau_bar: &Vec4, lambda_f: f64) -> Self {
        Self {
            theta_hat,
            xf: filter_x_matrix(q, qdot, lambda_f),
            tau_f: *tau_bar,
            q_f: *q,
        }
    }

    /// `Yf = [λf J(q)F(w) − Xf   −½J(qf)]`
    pub fn yf(&self, q: &Vec4, qdot: &Vec4, lambda_f: f64) -> Mat4x9 {
        yf_matrix(&self.xf, &self.q_f, q, qdot, lambda_f)
    }

    /// Filter rates `(Ẋf, τ̇f, q̇f)` for the current inputs.
    pub fn filter_rates(&self, q: &Vec4, qdot: &Vec4, tau_bar: &Vec4, lambda_f: f64) -> (Mat4x6, Vec4, Vec4) {
        (
            lambda_f * (filter_x_matrix(q, qdot, lambda_f) - self.xf),
            lambda_f * (tau_bar - self.tau_f),
            lambda_f * (q - self.q_f),
        )
    }
}

pub(crate) fn yf_matrix(xf: &Mat4x6, q_f: &Vec4, q: &Vec4, qdot: &Vec4, lambda_f: f64) -> Mat4x9 {
    let j = jmat(q);
    let w = j.transpose() * qdot;
    let mut out = Mat4x9::zeros();
    out.fixed_view_mut::<4, 6>(0, 0)
        .copy_from(&(lambda_f * j * f_map(&w) - xf));
    out.fixed_view_mut::<4, 3>(0, 6).copy_from(&(-0.5 * jmat(q_f)));
    out
}

/// Advances `Xf`, `τf`, `qf` by one RK4 step with the inputs held over the
/// step. The estimate is left untouched.
pub fn adaptive_sf_regressor_filters_step(
    state: &AdaptiveSFState,
    q: &Vec4,
    qdot: &Vec4,
    tau_bar: &Vec4,
    dt: f64,
    lambda_f: f64,
) -> AdaptiveSFState {
    let x_in = filter_x_matrix(q, qdot, lambda_f);
    let start = (state.xf, (state.tau_f, state.q_f));
    let next = rk4_step(&start, dt, |_, s: &(Mat4x6, (Vec4, Vec4))| {
        Ok::<_, std::convert::Infallible>((
            lambda_f * (x_in - s.0),
            (lambda_f * (tau_bar - s.1 .0), lambda_f * (q - s.1 .1)),
        ))
    })
    .unwrap_or_else(|never| match never {});
    AdaptiveSFState {
        theta_hat: state.theta_hat,
        xf: next.0,
        tau_f: next.1 .0,
        q_f: next.1 .1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateFeedbackAdaptiveCommand {
    pub tau_bar: Vec4,
    pub theta_hat_dot: Vec9,
    pub e: Vec4,
    pub e_dot: Vec4,
    /// `η₁ = ė + e`
    pub eta1: Vec4,
    pub yf: Mat4x9,
}

/// `τ̄ = Y_d0·m0 + Ȳ_d Θ̂ − K_d η₁ − k_p e` with the composite update
/// `Θ̂̇ = −γ₁Yfᵀ(YfΘ̂ − τf) − γ₂Ȳ_dᵀη₁`. The regressors are evaluated on
/// the trajectory reassigned by `h`.
pub fn control_adaptive_sf(
    q: &UnitQuaternion,
    qdot: &Vec4,
    d: &DesiredPoint,
    h: Mode,
    state: &AdaptiveSFState,
    gains: &GainsAdaptiveSF,
    m0: f64,
) -> Result<StateFeedbackAdaptiveCommand> {
    let dot = q.as_vec().dot(qdot);
    if dot.abs() >= crate::dynamics::TANGENCY_TOLERANCE || !dot.is_finite() {
        return Err(Error::TangencyViolation { dot });
    }
    let r = d.reassigned(h);
    let e = q.as_vec() - r.q;
    let e_dot = qdot - r.q_dot;
    let eta1 = e_dot + e;
    let (yd0, _) = regressors_raw(&r.q, &r.q_dot, &r.q_ddot);
    let ybar_d = regressor_bar_raw(&r.q, &r.q_dot, &r.q_ddot);
    let tau_bar = yd0 * m0 + ybar_d * state.theta_hat - gains.kd * eta1 - gains.kp * e;
    let yf = state.yf(q.as_vec(), qdot, gains.lambda_f);
    let theta_hat_dot = -gains.gamma1 * yf.transpose() * (yf * state.theta_hat - state.tau_f)
        - gains.gamma2 * ybar_d.transpose() * eta1;
    Ok(StateFeedbackAdaptiveCommand {
        tau_bar,
        theta_hat_dot,
        e,
        e_dot,
        eta1,
        yf,
    })
}

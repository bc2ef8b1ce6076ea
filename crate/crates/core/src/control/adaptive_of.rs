use super::{check_spd, DesiredPoint, Mode};
use crate::dynamics::{regressor_bar_dot, regressor_bar_raw, regressors_raw};
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::quat::{Mat4, Mat4x9, UnitQuaternion, Vec4, Vec9};
use crate::quat::Mat9;

/// Gains of the attitude-only adaptive controller.
///
/// `kv` is only required to be finite here so that gain conditions can be
/// evaluated for any candidate; [`GainsAdaptiveOF::validate_for_run`]
/// enforces `kv > 0` before simulating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainsAdaptiveOF {
    kf: Mat4,
    kv: f64,
    kp: f64,
    gamma: Mat9,
    gamma_inv: Mat9,
}

impl GainsAdaptiveOF {
    pub fn new(kf: Mat4, kv: f64, kp: f64, gamma: Mat9) -> Result<Self> {
        check_spd(&kf, "Kf")?;
        check_spd(&gamma, "Gamma")?;
        if !kv.is_finite() {
            return Err(Error::config(format!("kv must be finite, got {kv}")));
        }
        if !(kp > 0.0 && kp.is_finite()) {
            return Err(Error::config(format!("kp must be positive, got {kp}")));
        }
        let gamma_inv = gamma
            .try_inverse()
            .ok_or_else(|| Error::config("Gamma is singular"))?;
        Ok(Self {
            kf,
            kv,
            kp,
            gamma,
            gamma_inv,
        })
    }

    pub fn validate_for_run(&self) -> Result<()> {
        if self.kv > 0.0 {
            Ok(())
        } else {
            Err(Error::config(format!("kv must be positive, got {}", self.kv)))
        }
    }

    pub fn kf(&self) -> &Mat4 {
        &self.kf
    }

    pub fn kv(&self) -> f64 {
        self.kv
    }

    pub fn kp(&self) -> f64 {
        self.kp
    }

    pub fn gamma(&self) -> &Mat9 {
        &self.gamma
    }

    pub fn gamma_inv(&self) -> &Mat9 {
        &self.gamma_inv
    }
}

/// `ġ = −Kf(g − kv e) − kv(g + (1 − kv)e) + kp e`
pub fn damping_filter_rate(g: &Vec4, e: &Vec4, gains: &GainsAdaptiveOF) -> Vec4 {
    let kv = gains.kv;
    -gains.kf * (g - kv * e) - kv * (g + (1.0 - kv) * e) + gains.kp * e
}

/// Integrator memory of the attitude-only controller. The estimate `Θ̂` and
/// the damping signal `ν` are algebraic outputs of `(μ, g)` and `e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOFState {
    pub mu: Vec9,
    pub g: Vec4,
}

impl AdaptiveOFState {
    /// `g(0) = kv e(0)` so that `ν(0) = 0`, and `μ(0)` chosen so that the
    /// estimate starts at `theta_hat0`.
    pub fn new(theta_hat0: &Vec9, e0: &Vec4, ybar_d0: &Mat4x9, gains: &GainsAdaptiveOF) -> Self {
        Self {
            mu: -gains.gamma_inv * theta_hat0 - ybar_d0.transpose() * e0,
            g: gains.kv * e0,
        }
    }

    /// `ν = g − kv e`
    pub fn nu(&self, e: &Vec4, gains: &GainsAdaptiveOF) -> Vec4 {
        self.g - gains.kv * e
    }

    /// `Θ̂ = −Γ Ȳ_dᵀ e − Γ μ`
    pub fn theta_hat(&self, e: &Vec4, ybar_d: &Mat4x9, gains: &GainsAdaptiveOF) -> Vec9 {
        -gains.gamma * (ybar_d.transpose() * e + self.mu)
    }

    /// Re-expresses the memory after a mode jump so that `ν` and `Θ̂` are
    /// unchanged although `e` and `Ȳ_d` are not.
    pub fn after_jump(
        &self,
        e_before: &Vec4,
        ybar_before: &Mat4x9,
        e_after: &Vec4,
        ybar_after: &Mat4x9,
        gains: &GainsAdaptiveOF,
    ) -> Self {
        let nu = self.nu(e_before, gains);
        Self {
            mu: ybar_before.transpose() * e_before + self.mu - ybar_after.transpose() * e_after,
            g: nu + gains.kv * e_after,
        }
    }
}

/// One RK4 step of the damping filter with `e` held over the step.
pub fn damping_filter_step(state: &AdaptiveOFState, e: &Vec4, gains: &GainsAdaptiveOF, dt: f64) -> AdaptiveOFState {
    let g = rk4_step(&state.g, dt, |_, g: &Vec4| {
        Ok::<_, std::convert::Infallible>(damping_filter_rate(g, e, gains))
    })
    .unwrap_or_else(|never| match never {});
    AdaptiveOFState { mu: state.mu, g }
}

/// The damping filter in its saturated form
/// `ė_f = −Cosh²(e_f)(Kf ν + kv η₂ − kp e)`, `ν = Tanh(e_f)`.
/// It needs `ė` and therefore the angular velocity; it exists as a
/// reference for the implementable linear form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TanhDampingFilter {
    pub ef: Vec4,
}

impl TanhDampingFilter {
    pub fn new() -> Self {
        Self { ef: Vec4::zeros() }
    }

    pub fn nu(&self) -> Vec4 {
        self.ef.map(f64::tanh)
    }

    pub fn rate(&self, e: &Vec4, e_dot: &Vec4, gains: &GainsAdaptiveOF) -> Vec4 {
        tanh_filter_rate(&self.ef, e, e_dot, gains)
    }
}

impl Default for TanhDampingFilter {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) fn tanh_filter_rate(ef: &Vec4, e: &Vec4, e_dot: &Vec4, gains: &GainsAdaptiveOF) -> Vec4 {
    let nu = ef.map(f64::tanh);
    let eta2 = e_dot + e + nu;
    let inner = gains.kf * nu + gains.kv * eta2 - gains.kp * e;
    -ef.map(|x| x.cosh().powi(2)).component_mul(&inner)
}

/// `Ẏ̄_d` on the trajectory reassigned by `h`.
pub fn ybar_d_dot(d: &DesiredPoint, h: Mode) -> Mat4x9 {
    let r = d.reassigned(h);
    regressor_bar_dot(&r.q, &r.q_dot, &r.q_ddot, &r.q_dddot)
}

/// `Ȳ_d` on the trajectory reassigned by `h`.
pub fn ybar_d(d: &DesiredPoint, h: Mode) -> Mat4x9 {
    let r = d.reassigned(h);
    regressor_bar_raw(&r.q, &r.q_dot, &r.q_ddot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputFeedbackCommand {
    pub tau_bar: Vec4,
    pub mu_dot: Vec9,
    pub g_dot: Vec4,
    pub theta_hat: Vec9,
    pub e: Vec4,
    pub nu: Vec4,
}

/// `τ̄ = Y_d0·m0 + Ȳ_d Θ̂ + kv ν − kp e` with `Θ̂ = −ΓȲ_dᵀe − Γμ` and
/// `μ̇ = Ȳ_dᵀ(e + ν) − Ẏ̄_dᵀe`. Uses the measured attitude only.
pub fn control_adaptive_of(
    q_meas: &UnitQuaternion,
    d: &DesiredPoint,
    h: Mode,
    state: &AdaptiveOFState,
    gains: &GainsAdaptiveOF,
    m0: f64,
    ybar_d_dot: &Mat4x9,
) -> OutputFeedbackCommand {
    let r = d.reassigned(h);
    let e = q_meas.as_vec() - r.q;
    let (yd0, _) = regressors_raw(&r.q, &r.q_dot, &r.q_ddot);
    let ybar_d = regressor_bar_raw(&r.q, &r.q_dot, &r.q_ddot);
    let nu = state.nu(&e, gains);
    let theta_hat = state.theta_hat(&e, &ybar_d, gains);
    let tau_bar = yd0 * m0 + ybar_d * theta_hat + gains.kv * nu - gains.kp * e;
    let mu_dot = ybar_d.transpose() * (e + nu) - ybar_d_dot.transpose() * e;
    OutputFeedbackCommand {
        tau_bar,
        mu_dot,
        g_dot: damping_filter_rate(&state.g, &e, gains),
        theta_hat,
        e,
        nu,
    }
}

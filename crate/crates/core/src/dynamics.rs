//! Rigid-body attitude plant in two forms: the Euler–Newton equations on
//! `(q, ω)` and the 4-DOF Lagrangian form `D(q)q̈ + C(q, q̇)q̇ = τ̄` on
//! `(q, q̇)`, together with the linear regressors and the residual dynamics
//! used by the adaptive controllers.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::quat::{
    jmat, qmat, skew, Mat3, Mat3x6, Mat4, Mat4x6, Mat4x9, UnitQuaternion, Vec3, Vec4,
};

/// `|qᵀq̇|` above which a quaternion rate is rejected as non-tangent.
pub const TANGENCY_TOLERANCE: f64 = 1e-6;

/// Inertia of the body plus the virtual scalar inertia `m0` of the
/// Lagrangian form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaModel {
    m: Mat3,
    m_inv: Mat3,
    m0: f64,
}

impl InertiaModel {
    pub fn new(m: Mat3, m0: f64) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) || !m0.is_finite() {
            return Err(Error::NonFinite("inertia"));
        }
        if (m - m.transpose()).abs().max() > 1e-12 * (1.0 + m.abs().max()) {
            return Err(Error::config("inertia matrix must be symmetric"));
        }
        let lmin = SymmetricEigen::new(m).eigenvalues.min();
        if lmin <= 0.0 {
            return Err(Error::config("inertia matrix must be positive definite"));
        }
        if m0 <= 0.0 {
            return Err(Error::config("virtual inertia m0 must be positive"));
        }
        let m_inv = m
            .try_inverse()
            .ok_or_else(|| Error::config("inertia matrix is singular"))?;
        Ok(Self { m, m_inv, m0 })
    }

    /// Builds `M` from `θ = [m11, m22, m33, m23, m13, m12]`.
    pub fn from_theta(theta: [f64; 6], m0: f64) -> Result<Self> {
        let [m11, m22, m33, m23, m13, m12] = theta;
        Self::new(Mat3::new(m11, m12, m13, m12, m22, m23, m13, m23, m33), m0)
    }

    pub fn diagonal(d: Vec3, m0: f64) -> Result<Self> {
        Self::new(Mat3::from_diagonal(&d), m0)
    }

    pub fn m(&self) -> &Mat3 {
        &self.m
    }

    pub fn m_inv(&self) -> &Mat3 {
        &self.m_inv
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn with_m0(&self, m0: f64) -> Result<Self> {
        Self::new(self.m, m0)
    }

    pub fn theta(&self) -> [f64; 6] {
        let m = &self.m;
        [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(1, 2)], m[(0, 2)], m[(0, 1)]]
    }

    /// `M₀ = diag(m0, M)`.
    pub fn m0_block(&self) -> Mat4 {
        let mut out = Mat4::zeros();
        out[(0, 0)] = self.m0;
        out.fixed_view_mut::<3, 3>(1, 1).copy_from(&self.m);
        out
    }

    pub fn eigen_range(&self) -> (f64, f64) {
        let ev = SymmetricEigen::new(self.m).eigenvalues;
        (ev.min(), ev.max())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub q: UnitQuaternion,
    pub omega: Vec3,
}

fn check_tangent(q: &Vec4, qdot: &Vec4) -> Result<()> {
    let dot = q.dot(qdot);
    if dot.abs() >= TANGENCY_TOLERANCE || !dot.is_finite() {
        return Err(Error::TangencyViolation { dot });
    }
    Ok(())
}

/// `ω = 2Jᵀ(q)q̇`.
pub fn omega_from_qdot(q: &UnitQuaternion, qdot: &Vec4) -> Result<Vec3> {
    check_tangent(q.as_vec(), qdot)?;
    Ok(2.0 * jmat(q.as_vec()).transpose() * qdot)
}

/// `q̇ = ½J(q)ω`.
pub fn qdot_from_omega(q: &UnitQuaternion, omega: &Vec3) -> Vec4 {
    0.5 * jmat(q.as_vec()) * omega
}

/// `D(q) = Q(q) M₀ Qᵀ(q)`.
pub fn d_matrix(q: &UnitQuaternion, inertia: &InertiaModel) -> Mat4 {
    d_matrix_raw(q.as_vec(), inertia)
}

pub(crate) fn d_matrix_raw(q: &Vec4, inertia: &InertiaModel) -> Mat4 {
    let qm = qmat(q);
    qm * inertia.m0_block() * qm.transpose()
}

/// Analytic `Ḋ = Q(q̇)M₀Qᵀ(q) + Q(q)M₀Qᵀ(q̇)`.
pub fn d_dot(q: &UnitQuaternion, qdot: &Vec4, inertia: &InertiaModel) -> Mat4 {
    let m0b = inertia.m0_block();
    let (qm, qdm) = (qmat(q.as_vec()), qmat(qdot));
    qdm * m0b * qm.transpose() + qm * m0b * qdm.transpose()
}

/// Coriolis-like matrix in closed form
/// `C = -J(q)S(Mω)Jᵀ(q) + J(q)MJᵀ(q̇) + m0·q q̇ᵀ`, `ω = 2Jᵀ(q)q̇`.
pub fn c_matrix(q: &UnitQuaternion, qdot: &Vec4, inertia: &InertiaModel) -> Result<Mat4> {
    check_tangent(q.as_vec(), qdot)?;
    Ok(c_matrix_raw(q.as_vec(), qdot, inertia))
}

/// Closed form without the tangency check; also defines `C(q, x)` for an
/// arbitrary second argument in the bound estimators.
pub(crate) fn c_matrix_raw(q: &Vec4, x: &Vec4, inertia: &InertiaModel) -> Mat4 {
    let j = jmat(q);
    let omega = 2.0 * j.transpose() * x;
    let m = inertia.m();
    -j * skew(&(m * omega)) * j.transpose()
        + j * m * jmat(x).transpose()
        + inertia.m0() * q * x.transpose()
}

/// Coriolis-like matrix from its defining product form
/// `C = -J(q)S(Mω)Jᵀ(q) - D(q)Q(q̇)Qᵀ(q)`. Agrees with [`c_matrix`] on the
/// tangent bundle; kept as an independent cross-check.
pub fn c_matrix_definition(
    q: &UnitQuaternion,
    qdot: &Vec4,
    inertia: &InertiaModel,
) -> Result<Mat4> {
    check_tangent(q.as_vec(), qdot)?;
    let qv = q.as_vec();
    let j = jmat(qv);
    let omega = 2.0 * j.transpose() * qdot;
    Ok(-j * skew(&(inertia.m() * omega)) * j.transpose()
        - d_matrix(q, inertia) * qmat(qdot) * qmat(qv).transpose())
}

/// `q̈ = D⁻¹(q)(−C(q, q̇)q̇ + τ̄)` with `D⁻¹ = Q(q)M₀⁻¹Qᵀ(q)`.
///
/// The result does not depend on `m0` when `τ̄` lies in the range of `J(q)`.
pub fn lagrangian_accel(
    q: &UnitQuaternion,
    qdot: &Vec4,
    tau_bar: &Vec4,
    inertia: &InertiaModel,
) -> Result<Vec4> {
    check_tangent(q.as_vec(), qdot)?;
    Ok(lagrangian_accel_raw(q.as_vec(), qdot, tau_bar, inertia))
}

/// Works for `q` slightly off the sphere (integrator stages) by using
/// `Q(x)Qᵀ(x) = ‖x‖²I`.
pub(crate) fn lagrangian_accel_raw(
    q: &Vec4,
    qdot: &Vec4,
    tau_bar: &Vec4,
    inertia: &InertiaModel,
) -> Vec4 {
    let qm = qmat(q);
    let mut m0_inv = Mat4::zeros();
    m0_inv[(0, 0)] = 1.0 / inertia.m0();
    m0_inv
        .fixed_view_mut::<3, 3>(1, 1)
        .copy_from(inertia.m_inv());
    let n2 = q.norm_squared();
    let d_inv = qm * m0_inv * qm.transpose() / (n2 * n2);
    let c = c_matrix_raw(q, qdot, inertia);
    d_inv * (tau_bar - c * qdot)
}

/// Euler–Newton right-hand side `(q̇, ω̇)` with
/// `ω̇ = M⁻¹(S(Mω)ω + τ)`.
pub fn euler_newton_deriv(state: &BodyState, tau: &Vec3, inertia: &InertiaModel) -> (Vec4, Vec3) {
    euler_newton_raw(state.q.as_vec(), &state.omega, tau, inertia)
}

pub(crate) fn euler_newton_raw(
    q: &Vec4,
    omega: &Vec3,
    tau: &Vec3,
    inertia: &InertiaModel,
) -> (Vec4, Vec3) {
    let qdot = 0.5 * jmat(q) * omega;
    let h = inertia.m() * omega;
    let omega_dot = inertia.m_inv() * (skew(&h) * omega + tau);
    (qdot, omega_dot)
}

/// `τ̄ = ½J(q)τ`.
pub fn torque_to_generalized(q: &UnitQuaternion, tau: &Vec3) -> Vec4 {
    0.5 * jmat(q.as_vec()) * tau
}

/// `τ = 2Jᵀ(q)τ̄`.
pub fn generalized_to_torque(q: &UnitQuaternion, tau_bar: &Vec4) -> Vec3 {
    2.0 * jmat(q.as_vec()).transpose() * tau_bar
}

/// `F(u)` with `F(u)·θ = M·u` for the `θ` ordering of
/// [`InertiaModel::theta`].
pub fn f_map(u: &Vec3) -> Mat3x6 {
    let (u1, u2, u3) = (u.x, u.y, u.z);
    Mat3x6::new(
        u1, 0.0, 0.0, 0.0, u3, u2, //
        0.0, u2, 0.0, u3, 0.0, u1, //
        0.0, 0.0, u3, u2, u1, 0.0,
    )
}

/// Linear regressors `(Y0, Y)` with `Y0·m0 + Y·θ = D(q)q̈ + C(q, q̇)q̇`.
pub fn regressors(q: &UnitQuaternion, qdot: &Vec4, qddot: &Vec4) -> Result<(Vec4, Mat4x6)> {
    check_tangent(q.as_vec(), qdot)?;
    Ok(regressors_raw(q.as_vec(), qdot, qddot))
}

pub(crate) fn regressors_raw(q: &Vec4, qdot: &Vec4, qddot: &Vec4) -> (Vec4, Mat4x6) {
    let j = jmat(q);
    let w = j.transpose() * qdot;
    let w_dot = j.transpose() * qddot;
    let y0 = (q.dot(qddot) + qdot.dot(qdot)) * q;
    let y = j * (f_map(&w_dot) + 2.0 * skew(&w) * f_map(&w));
    (y0, y)
}

/// `Ȳ = [Y  −½J(q)]`, the regressor for `Θ = [θ; p]`.
pub fn regressor_bar(q: &UnitQuaternion, qdot: &Vec4, qddot: &Vec4) -> Result<Mat4x9> {
    check_tangent(q.as_vec(), qdot)?;
    Ok(regressor_bar_raw(q.as_vec(), qdot, qddot))
}

pub(crate) fn regressor_bar_raw(q: &Vec4, qdot: &Vec4, qddot: &Vec4) -> Mat4x9 {
    let (_, y) = regressors_raw(q, qdot, qddot);
    let mut out = Mat4x9::zeros();
    out.fixed_view_mut::<4, 6>(0, 0).copy_from(&y);
    out.fixed_view_mut::<4, 3>(0, 6)
        .copy_from(&(-0.5 * jmat(q)));
    out
}

/// Time derivative of `Ȳ(q, q̇, q̈)` along a trajectory with third
/// derivative `q⃛`. Exact: every factor of `Ȳ` is linear in its argument.
pub fn regressor_bar_dot(q: &Vec4, qdot: &Vec4, qddot: &Vec4, qdddot: &Vec4) -> Mat4x9 {
    let (j, jd) = (jmat(q), jmat(qdot));
    let w = j.transpose() * qdot;
    let w_rate = jd.transpose() * qdot + j.transpose() * qddot;
    let v = j.transpose() * qddot;
    let v_rate = jd.transpose() * qddot + j.transpose() * qdddot;
    let inner = f_map(&v) + 2.0 * skew(&w) * f_map(&w);
    let inner_rate =
        f_map(&v_rate) + 2.0 * skew(&w_rate) * f_map(&w) + 2.0 * skew(&w) * f_map(&w_rate);
    let mut out = Mat4x9::zeros();
    out.fixed_view_mut::<4, 6>(0, 0)
        .copy_from(&(jd * inner + j * inner_rate));
    out.fixed_view_mut::<4, 3>(0, 6).copy_from(&(-0.5 * jd));
    out
}

/// Desired-trajectory sample used by the residual dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajPoint {
    pub qd: UnitQuaternion,
    pub qd_dot: Vec4,
    pub qd_ddot: Vec4,
}

/// Residual dynamics
/// `h̄ = (D(qd)−D(q))q̈d + (C(qd,q̇d)−C(q,q̇))q̇d − ½(Q(qd)−Q(q))p̄`.
pub fn residual_dynamics(
    traj: &TrajPoint,
    q: &UnitQuaternion,
    qdot: &Vec4,
    p_bar: &Vec4,
    inertia: &InertiaModel,
) -> Result<Vec4> {
    let qd = traj.qd.as_vec();
    let dd = d_matrix(&traj.qd, inertia) - d_matrix(q, inertia);
    let dc = c_matrix(&traj.qd, &traj.qd_dot, inertia)? - c_matrix(q, qdot, inertia)?;
    let dq = qmat(qd) - qmat(q.as_vec());
    Ok(dd * traj.qd_ddot + dc * traj.qd_dot - 0.5 * dq * p_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::normalize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_inertia(m0: f64) -> InertiaModel {
        let u = Vec3::new(1.0, 2.0, 3.0).normalize();
        InertiaModel::diagonal(10.0 * u, m0).unwrap()
    }

    fn full_inertia() -> InertiaModel {
        InertiaModel::from_theta([4.0, 5.0, 6.0, 0.3, -0.2, 0.5], 1.3).unwrap()
    }

    fn rand4(rng: &mut ChaCha8Rng) -> Vec4 {
        Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0))
    }

    fn rand_unit(rng: &mut ChaCha8Rng) -> UnitQuaternion {
        normalize(&rand4(rng)).unwrap()
    }

    fn rand_tangent(rng: &mut ChaCha8Rng, q: &UnitQuaternion) -> Vec4 {
        let w = Vec3::from_fn(|_, _| rng.random_range(-2.0..2.0));
        qdot_from_omega(q, &w)
    }

    #[test]
    fn inertia_validation() {
        assert!(InertiaModel::new(Mat3::identity(), 0.0).is_err());
        assert!(InertiaModel::new(-Mat3::identity(), 1.0).is_err());
        let mut asym = Mat3::identity();
        asym[(0, 1)] = 0.5;
        assert!(InertiaModel::new(asym, 1.0).is_err());
        let im = full_inertia();
        assert_eq!(im.theta(), [4.0, 5.0, 6.0, 0.3, -0.2, 0.5]);
    }

    #[test]
    fn kinematics_examples() {
        let id = UnitQuaternion::identity();
        assert_eq!(omega_from_qdot(&id, &Vec4::zeros()).unwrap(), Vec3::zeros());
        let w = omega_from_qdot(&id, &Vec4::new(0.0, 0.5, 0.0, 0.0)).unwrap();
        assert_eq!(w, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(qdot_from_omega(&id, &Vec3::zeros()), Vec4::zeros());
        assert_eq!(
            qdot_from_omega(&id, &Vec3::x()),
            Vec4::new(0.0, 0.5, 0.0, 0.0)
        );
        assert!(matches!(
            omega_from_qdot(&id, &Vec4::new(1.0, 0.0, 0.0, 0.0)),
            Err(Error::TangencyViolation { .. })
        ));
    }

    #[test]
    fn kinematics_roundtrip_and_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..200 {
            let q = rand_unit(&mut rng);
            let w = Vec3::from_fn(|_, _| rng.random_range(-5.0..5.0));
            let qd = qdot_from_omega(&q, &w);
            assert!(q.as_vec().dot(&qd).abs() < 1e-14);
            let back = omega_from_qdot(&q, &qd).unwrap();
            assert!((back - w).norm() < 1e-12);
        }
    }

    #[test]
    fn d_matrix_examples() {
        let im = reference_inertia(1.7);
        let d = d_matrix(&UnitQuaternion::identity(), &im);
        assert_eq!(d, im.m0_block());

        let iso = InertiaModel::diagonal(Vec3::repeat(2.5), 2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = d_matrix(&rand_unit(&mut rng), &iso);
            assert!((d - 2.5 * Mat4::identity()).abs().max() < 1e-12);
        }

        let im = reference_inertia(1.0);
        let (lo, hi) = im.eigen_range();
        let (mlo, mhi) = (lo.min(im.m0()), hi.max(im.m0()));
        for _ in 0..200 {
            let d = d_matrix(&rand_unit(&mut rng), &im);
            assert!((d - d.transpose()).abs().max() < 1e-12);
            let ev = SymmetricEigen::new(d).eigenvalues;
            assert!(ev.min() >= mlo - 1e-10 && ev.max() <= mhi + 1e-10);
        }
    }

    #[test]
    fn coriolis_forms_agree_and_skew_property_holds() {
        let im = full_inertia();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let q = rand_unit(&mut rng);
        assert_eq!(c_matrix(&q, &Vec4::zeros(), &im).unwrap(), Mat4::zeros());
        for _ in 0..200 {
            let q = rand_unit(&mut rng);
            let qd = rand_tangent(&mut rng, &q);
            let c = c_matrix(&q, &qd, &im).unwrap();
            let c_def = c_matrix_definition(&q, &qd, &im).unwrap();
            assert!((c - c_def).abs().max() < 1e-12);
            let dd = d_dot(&q, &qd, &im);
            let x = rand4(&mut rng);
            assert!((x.transpose() * (dd - 2.0 * c) * x)[0].abs() < 1e-10);
            assert!((dd - c - c.transpose()).abs().max() < 1e-10);
        }
    }

    #[test]
    fn d_dot_matches_finite_difference() {
        let im = full_inertia();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let q = rand_unit(&mut rng);
        let qd = rand_tangent(&mut rng, &q);
        let h = 1e-6;
        // D is quadratic in q, so the central difference is exact up to rounding
        let fd = (d_matrix_raw(&(q.as_vec() + h * qd), &im)
            - d_matrix_raw(&(q.as_vec() - h * qd), &im))
            / (2.0 * h);
        assert!((fd - d_dot(&q, &qd, &im)).abs().max() < 1e-8);
    }

    #[test]
    fn acceleration_is_independent_of_virtual_inertia() {
        let base = full_inertia();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let q = rand_unit(&mut rng);
            let qd = rand_tangent(&mut rng, &q);
            let tau = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let tb = torque_to_generalized(&q, &tau);
            let accs: Vec<Vec4> = [0.1, 1.0, 10.0]
                .iter()
                .map(|&m0| lagrangian_accel(&q, &qd, &tb, &base.with_m0(m0).unwrap()).unwrap())
                .collect();
            assert!((accs[0] - accs[1]).norm() < 1e-9);
            assert!((accs[0] - accs[2]).norm() < 1e-9);
        }
        let id = UnitQuaternion::identity();
        let a = lagrangian_accel(&id, &Vec4::zeros(), &Vec4::zeros(), &base).unwrap();
        assert_eq!(a, Vec4::zeros());
    }

    #[test]
    fn lagrangian_accel_matches_euler_newton_acceleration() {
        // q̈ = ½J(q)ω̇ + ½J(q̇)ω from the Euler–Newton form
        let im = full_inertia();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let q = rand_unit(&mut rng);
            let w = Vec3::from_fn(|_, _| rng.random_range(-2.0..2.0));
            let tau = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let (qd, wd) = euler_newton_deriv(&BodyState { q, omega: w }, &tau, &im);
            let expected = 0.5 * jmat(q.as_vec()) * wd + 0.5 * jmat(&qd) * w;
            let tb = torque_to_generalized(&q, &tau);
            let acc = lagrangian_accel(&q, &qd, &tb, &im).unwrap();
            assert!((acc - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn euler_newton_examples() {
        let im = reference_inertia(1.0);
        let s = BodyState {
            q: UnitQuaternion::identity(),
            omega: Vec3::zeros(),
        };
        assert_eq!(
            euler_newton_deriv(&s, &Vec3::zeros(), &im),
            (Vec4::zeros(), Vec3::zeros())
        );
        let s = BodyState {
            q: UnitQuaternion::identity(),
            omega: Vec3::new(0.0, 0.7, 0.0),
        };
        let (_, wd) = euler_newton_deriv(&s, &Vec3::zeros(), &im);
        assert_eq!(wd, Vec3::zeros());
    }

    #[test]
    fn torque_maps() {
        let id = UnitQuaternion::identity();
        assert_eq!(torque_to_generalized(&id, &Vec3::zeros()), Vec4::zeros());
        assert_eq!(
            torque_to_generalized(&id, &Vec3::new(2.0, 0.0, 0.0)),
            Vec4::new(0.0, 1.0, 0.0, 0.0)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..100 {
            let q = rand_unit(&mut rng);
            let tau = Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0));
            let back = generalized_to_torque(&q, &torque_to_generalized(&q, &tau));
            assert!((back - tau).norm() < 1e-13);
        }
    }

    #[test]
    fn f_map_reproduces_inertia_product() {
        let im = full_inertia();
        let th = nalgebra::SVector::<f64, 6>::from(im.theta());
        assert_eq!(f_map(&Vec3::zeros()), Mat3x6::zeros());
        let col = f_map(&Vec3::x()) * th;
        let m = im.m();
        assert_eq!(col, Vec3::new(m[(0, 0)], m[(0, 1)], m[(0, 2)]));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let u = Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0));
            assert!((f_map(&u) * th - m * u).norm() < 1e-12);
        }
    }

    #[test]
    fn regressors_parametrize_the_dynamics() {
        let im = full_inertia();
        let th = nalgebra::SVector::<f64, 6>::from(im.theta());
        let id = UnitQuaternion::identity();
        let (y0, y) = regressors(&id, &Vec4::zeros(), &Vec4::zeros()).unwrap();
        assert_eq!((y0, y), (Vec4::zeros(), Mat4x6::zeros()));

        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..200 {
            let q = rand_unit(&mut rng);
            let qd = rand_tangent(&mut rng, &q);
            let tau = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let qdd = lagrangian_accel(&q, &qd, &torque_to_generalized(&q, &tau), &im).unwrap();
            let (y0, y) = regressors(&q, &qd, &qdd).unwrap();
            let lhs = y0 * im.m0() + y * th;
            let rhs = d_matrix(&q, &im) * qdd + c_matrix(&q, &qd, &im).unwrap() * qd;
            assert!((lhs - rhs).norm() < 1e-10);

            let p = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let big_theta = crate::quat::Vec9::from_iterator(th.iter().copied().chain(p.iter().copied()));
            let yb = regressor_bar(&q, &qd, &qdd).unwrap();
            assert!((yb * big_theta - (y * th - 0.5 * jmat(q.as_vec()) * p)).norm() < 1e-12);
        }
    }

    #[test]
    fn regressor_bar_block_structure() {
        let id = UnitQuaternion::identity();
        let yb = regressor_bar(&id, &Vec4::zeros(), &Vec4::zeros()).unwrap();
        assert_eq!(yb.fixed_view::<4, 6>(0, 0).into_owned(), Mat4x6::zeros());
        assert_eq!(
            yb.fixed_view::<4, 3>(0, 6).into_owned(),
            -0.5 * jmat(id.as_vec())
        );
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let q = rand_unit(&mut rng);
        let qd = rand_tangent(&mut rng, &q);
        let yb = regressor_bar(&q, &qd, &rand4(&mut rng)).unwrap();
        let p = Vec3::new(0.2, -0.1, -0.05);
        let mut theta = crate::quat::Vec9::zeros();
        theta.fixed_rows_mut::<3>(6).copy_from(&p);
        // Ȳ·[0; p] = −d with d = ½J(q)p
        assert!((yb * theta + 0.5 * jmat(q.as_vec()) * p).norm() < 1e-15);
    }

    #[test]
    fn regressor_bar_dot_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            let (q, qd, qdd, qddd) = (rand4(&mut rng), rand4(&mut rng), rand4(&mut rng), rand4(&mut rng));
            let h = 1e-5;
            let f = |s: f64| regressor_bar_raw(&(q + s * qd), &(qd + s * qdd), &(qdd + s * qddd));
            let fd = (f(h) - f(-h)) / (2.0 * h);
            assert!((fd - regressor_bar_dot(&q, &qd, &qdd, &qddd)).abs().max() < 1e-7);
        }
    }

    #[test]
    fn residual_dynamics_vanishes_on_the_trajectory() {
        let im = full_inertia();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let qd = rand_unit(&mut rng);
            let traj = TrajPoint {
                qd,
                qd_dot: rand_tangent(&mut rng, &qd),
                qd_ddot: rand4(&mut rng),
            };
            let pb = Vec4::new(0.0, 0.2, -0.1, -0.05);
            let h = residual_dynamics(&traj, &qd, &traj.qd_dot, &pb, &im).unwrap();
            assert!(h.norm() < 1e-14);

            let still = TrajPoint { qd, qd_dot: Vec4::zeros(), qd_ddot: Vec4::zeros() };
            let q = rand_unit(&mut rng);
            let qdot = rand_tangent(&mut rng, &q);
            let h = residual_dynamics(&still, &q, &qdot, &Vec4::zeros(), &im).unwrap();
            assert_eq!(h, Vec4::zeros());
        }
    }
}

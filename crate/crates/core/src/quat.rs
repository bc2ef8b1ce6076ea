//! Unit quaternions and the `J(·)` / `Q(·)` matrix machinery.
//!
//! Quaternions are stored scalar-first, `[q0, qv]`. `J(x)` maps an angular
//! rate to a quaternion rate (`q̇ = ½J(q)ω`) and `Q(x) = [x J(x)]` is the
//! left-multiplication matrix, so `Q(x)y = x ⊗ y`.

use nalgebra::{Matrix3, Matrix4, SMatrix, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec4 = Vector4<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;
pub type Mat4x3 = SMatrix<f64, 4, 3>;
pub type Mat3x6 = SMatrix<f64, 3, 6>;
pub type Mat4x6 = SMatrix<f64, 4, 6>;
pub type Mat4x9 = SMatrix<f64, 4, 9>;
pub type Vec9 = SMatrix<f64, 9, 1>;
pub type Mat9 = SMatrix<f64, 9, 9>;

/// Inputs shorter than this cannot be normalized.
pub const DEGENERATE_NORM: f64 = 1e-12;
/// Norm error below which a quaternion is accepted as unit.
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Norm error above which construction is rejected instead of renormalized.
pub const RENORMALIZE_LIMIT: f64 = 1e-3;

/// Cross-product matrix: `skew(u) * v == u × v`.
pub fn skew(u: &Vec3) -> Mat3 {
    Mat3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

/// `J(x) = [-xvᵀ; x0·I₃ + S(xv)]`, defined for any 4-vector.
pub fn jmat(x: &Vec4) -> Mat4x3 {
    let (x0, x1, x2, x3) = (x[0], x[1], x[2], x[3]);
    Mat4x3::new(
        -x1, -x2, -x3, //
        x0, -x3, x2, //
        x3, x0, -x1, //
        -x2, x1, x0,
    )
}

/// `Q(x) = [x J(x)]`. For unit `x` this is a rotation of ℝ⁴.
pub fn qmat(x: &Vec4) -> Mat4 {
    let (x0, x1, x2, x3) = (x[0], x[1], x[2], x[3]);
    Mat4::new(
        x0, -x1, -x2, -x3, //
        x1, x0, -x3, x2, //
        x2, x3, x0, -x1, //
        x3, -x2, x1, x0,
    )
}

/// Hamilton product `a ⊗ b`.
pub fn qmul(a: &Vec4, b: &Vec4) -> Vec4 {
    qmat(a) * b
}

pub fn conj(x: &Vec4) -> Vec4 {
    Vec4::new(x[0], -x[1], -x[2], -x[3])
}

/// Pure quaternion `[0, v]`.
pub fn pure(v: &Vec3) -> Vec4 {
    Vec4::new(0.0, v.x, v.y, v.z)
}

/// Vector part of a quaternion.
pub fn vector_part(x: &Vec4) -> Vec3 {
    Vec3::new(x[1], x[2], x[3])
}

/// Attitude on the unit 3-sphere, scalar part first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuaternion(Vec4);

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self(Vec4::new(1.0, 0.0, 0.0, 0.0))
    }

    /// Accepts `x` when its norm is within [`UNIT_TOLERANCE`] of one and
    /// silently renormalizes drift up to [`RENORMALIZE_LIMIT`].
    pub fn new(x: Vec4) -> Result<Self> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quaternion"));
        }
        let n = x.norm();
        let drift = (n - 1.0).abs();
        if drift <= UNIT_TOLERANCE {
            Ok(Self(x))
        } else if drift < RENORMALIZE_LIMIT {
            Ok(Self(x / n))
        } else {
            Err(Error::NotUnit { norm: n })
        }
    }

    /// Wraps a vector the caller has already normalized.
    pub(crate) fn new_unchecked(x: Vec4) -> Self {
        Self(x)
    }

    pub fn from_scalar_vector(q0: f64, qv: Vec3) -> Result<Self> {
        Self::new(Vec4::new(q0, qv.x, qv.y, qv.z))
    }

    pub fn as_vec(&self) -> &Vec4 {
        &self.0
    }

    pub fn into_vec(self) -> Vec4 {
        self.0
    }

    pub fn scalar(&self) -> f64 {
        self.0[0]
    }

    pub fn vector(&self) -> Vec3 {
        vector_part(&self.0)
    }

    pub fn neg(&self) -> Self {
        Self(-self.0)
    }

    /// Rotation angle in `[0, π]` of the physical attitude this represents.
    pub fn angle(&self) -> f64 {
        2.0 * self.0[0].abs().min(1.0).acos()
    }
}

impl TryFrom<[f64; 4]> for UnitQuaternion {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Self::new(Vec4::from(v))
    }
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.0.into()
    }
}

/// `x / ‖x‖`, rejecting vectors too short to carry a direction.
pub fn normalize(x: &Vec4) -> Result<UnitQuaternion> {
    let n = x.norm();
    if !n.is_finite() {
        return Err(Error::NonFinite("quaternion"));
    }
    if n <= DEGENERATE_NORM {
        return Err(Error::DegenerateQuaternion { norm: n });
    }
    Ok(UnitQuaternion(x / n))
}

/// Quaternion error `ε = Qᵀ(qd)·q`, i.e. `qd* ⊗ q`.
pub fn quat_error(qd: &UnitQuaternion, q: &UnitQuaternion) -> Vec4 {
    qmat(qd.as_vec()).transpose() * q.as_vec()
}

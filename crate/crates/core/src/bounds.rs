//! Sampled bound constants of the Lagrangian operators.
//!
//! `m_bar`/`m_lower` are exact. `k_M`, `k_c1` and `k_c2` are defined as
//! suprema without closed forms, so they are estimated as a safety factor
//! times the largest ratio seen over seeded random samples on the unit
//! sphere. The remaining constants follow from those.

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{c_matrix_raw, d_matrix_raw, InertiaModel};
use crate::quat::{Mat4, Vec4};

/// Multiplier applied to sampled maxima.
pub const SAFETY_FACTOR: f64 = 1.5;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajSummary {
    /// `sup ‖q̇d‖`
    pub qd_dot_sup: f64,
    /// `sup ‖q̈d‖`
    pub qd_ddot_sup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub m_bar: f64,
    pub m_lower: f64,
    pub k_m: f64,
    pub k_c1: f64,
    pub k_c2: f64,
    pub k_h1: f64,
    pub k_h2: f64,
    pub s1: f64,
    pub s2: f64,
    pub rho: f64,
    pub traj: TrajSummary,
}

/// Spectral norm of a 4×4 matrix.
pub(crate) fn spectral_norm(a: &Mat4) -> f64 {
    let ev = SymmetricEigen::new(a.transpose() * a).eigenvalues;
    ev.max().max(0.0).sqrt()
}

pub(crate) fn random_unit(rng: &mut impl Rng) -> Vec4 {
    loop {
        let v = Vec4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// A second unit quaternion near `x` at a random geodesic scale, so the
/// Lipschitz ratios see both local and global pairs.
fn partner(rng: &mut impl Rng, x: &Vec4) -> Vec4 {
    let scale = 10f64.powf(rng.random_range(-4.0..0.5));
    let y = x + scale * random_unit(rng);
    let n = y.norm();
    if n < 1e-6 {
        random_unit(rng)
    } else {
        y / n
    }
}

/// `‖(D(x) − D(y))‖ / ‖x − y‖`
pub fn ratio_k_m(x: &Vec4, y: &Vec4, inertia: &InertiaModel) -> f64 {
    let dx = (x - y).norm();
    if dx == 0.0 {
        return 0.0;
    }
    spectral_norm(&(d_matrix_raw(x, inertia) - d_matrix_raw(y, inertia))) / dx
}

/// `‖C(q, x)‖ / ‖x‖`
pub fn ratio_k_c1(q: &Vec4, x: &Vec4, inertia: &InertiaModel) -> f64 {
    let n = x.norm();
    if n == 0.0 {
        return 0.0;
    }
    spectral_norm(&c_matrix_raw(q, x, inertia)) / n
}

/// `‖C(x, z) − C(y, z)‖ / (‖x − y‖‖z‖)`
pub fn ratio_k_c2(x: &Vec4, y: &Vec4, z: &Vec4, inertia: &InertiaModel) -> f64 {
    let d = (x - y).norm() * z.norm();
    if d == 0.0 {
        return 0.0;
    }
    spectral_norm(&(c_matrix_raw(x, z, inertia) - c_matrix_raw(y, z, inertia))) / d
}

/// `s2 / tanh(s2/s1)` with its limits at `s1 → 0` and `s2 → 0`.
fn k_h2_from(s1: f64, s2: f64) -> f64 {
    if s2 == 0.0 {
        s1
    } else if s1 == 0.0 {
        s2
    } else {
        s2 / (s2 / s1).tanh()
    }
}

pub fn estimate_bounds(
    inertia: &InertiaModel,
    traj: TrajSummary,
    rho: f64,
    samples: usize,
    seed: u64,
) -> BoundConstants {
    let samples = samples.max(MIN_SAMPLES);
    let (lmin, lmax) = inertia.eigen_range();
    let m_bar = inertia.m0().max(lmax);
    let m_lower = inertia.m0().min(lmin);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut km, mut kc1, mut kc2) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = random_unit(&mut rng);
        let y = partner(&mut rng, &x);
        let z = random_unit(&mut rng);
        km = km.max(ratio_k_m(&x, &y, inertia));
        kc1 = kc1.max(ratio_k_c1(&x, &z, inertia));
        kc2 = kc2.max(ratio_k_c2(&x, &y, &z, inertia));
    }
    let k_m = SAFETY_FACTOR * km;
    let k_c1 = SAFETY_FACTOR * kc1;
    let k_c2 = SAFETY_FACTOR * kc2;

    let (qd1, qd2) = (traj.qd_dot_sup, traj.qd_ddot_sup);
    let k_h1 = k_c1 * qd1;
    let s1 = 8.0 * rho + k_m * qd2 + k_c2 * qd1 * qd1;
    let s2 = 2.0 * (0.5 * rho + m_bar * qd2 + k_c2 * qd1 * qd1);
    let k_h2 = k_h2_from(s1, s2);

    BoundConstants {
        m_bar,
        m_lower,
        k_m,
        k_c1,
        k_c2,
        k_h1,
        k_h2,
        s1,
        s2,
        rho,
        traj,
    }
}

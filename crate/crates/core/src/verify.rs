//! Seeded numeric property suites for the quaternion matrix machinery and
//! the Lagrangian operators.
//!
//! Every row reports the worst case over its samples. Identity rows compare
//! a residual against an absolute threshold; bound rows report the largest
//! observed ratio to an estimated constant, which must stay below one.

use std::time::Instant;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{estimate_bounds, random_unit, ratio_k_c1, ratio_k_m, spectral_norm, TrajSummary};
use crate::dynamics::{
    c_matrix, c_matrix_definition, d_dot, d_matrix, lagrangian_accel, regressors, residual_dynamics,
    torque_to_generalized, InertiaModel, TrajPoint,
};
use crate::error::{Error, Result};
use crate::quat::{jmat, normalize, qmat, quat_error, Mat3, Mat4, UnitQuaternion, Vec3, Vec4};

pub const MIN_VERIFY_SAMPLES: usize = 100;
/// Residual threshold for exact algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Threshold for `m0`-independence of the acceleration.
pub const M0_TOL: f64 = 1e-9;
pub const M0_VALUES: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub inertia: [f64; 6],
    pub m0: f64,
    /// Flips the sign of `C` in the skew-symmetry row. Only useful to check
    /// that the suite catches a broken operator.
    pub corrupt_c_sign: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        let u = Vec3::new(1.0, 2.0, 3.0).normalize() * 10.0;
        Self {
            samples: 1000,
            seed: 0,
            inertia: [u.x, u.y, u.z, 0.0, 0.0, 0.0],
            m0: 1.0,
            corrupt_c_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub pass: bool,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn row(&self, name: &str) -> Option<&VerifyRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

struct Suite {
    rows: Vec<VerifyRow>,
    n: usize,
}

impl Suite {
    fn push(&mut self, name: &str, threshold: f64, mut sample: impl FnMut() -> f64) {
        let mut worst = 0.0f64;
        for _ in 0..self.n {
            let r = sample();
            // NaN must fail the row
            worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
            if worst.is_nan() {
                break;
            }
        }
        self.rows.push(VerifyRow {
            name: name.to_string(),
            samples: self.n,
            max_residual: worst,
            threshold,
            pass: worst < threshold,
        });
    }
}

fn rand4(rng: &mut ChaCha8Rng) -> Vec4 {
    Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0))
}

fn tangent(rng: &mut ChaCha8Rng, q: &Vec4) -> Vec4 {
    let v = rand4(rng);
    v - q * q.dot(&v)
}

fn unit(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    normalize(&random_unit(rng)).expect("unit sample")
}

fn sym_eigen_range(m: &Mat4) -> (f64, f64) {
    let ev = SymmetricEigen::new(*m).eigenvalues;
    (ev.min(), ev.max())
}

/// Runs every suite. Fails only on invalid options; property failures are
/// reported in the rows.
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    if opts.samples < MIN_VERIFY_SAMPLES {
        return Err(Error::config(format!(
            "verification needs at least {MIN_VERIFY_SAMPLES} samples, got {}",
            opts.samples
        )));
    }
    let start = Instant::now();
    let inertia = InertiaModel::from_theta(opts.inertia, opts.m0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut s = Suite {
        rows: Vec::new(),
        n: opts.samples,
    };
    let rng = &mut rng;

    // quaternion matrix machinery
    s.push("J_transpose_antisymmetry", IDENTITY_TOL, || {
        let (x, y) = (rand4(rng), rand4(rng));
        (jmat(&x).transpose() * y + jmat(&y).transpose() * x).amax()
    });
    s.push("J_gram", IDENTITY_TOL, || {
        let x = rand4(rng);
        (jmat(&x).transpose() * jmat(&x) - x.norm_squared() * Mat3::identity()).amax()
    });
    s.push("J_norm", IDENTITY_TOL, || {
        let x = rand4(rng);
        let mut padded = Mat4::zeros();
        padded.fixed_view_mut::<4, 3>(0, 0).copy_from(&jmat(&x));
        (spectral_norm(&padded) - x.norm()).abs()
    });
    s.push("J_linearity", IDENTITY_TOL, || {
        let (x, y) = (rand4(rng), rand4(rng));
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        (jmat(&(a * x + b * y)) - a * jmat(&x) - b * jmat(&y)).amax()
    });
    s.push("Q_orthogonal", IDENTITY_TOL, || {
        let q = qmat(unit(rng).as_vec());
        let det = q.determinant();
        (q.transpose() * q - Mat4::identity()).amax().max((det - 1.0).abs())
    });
    s.push("Q_product_split", IDENTITY_TOL, || {
        let (x, y) = (rand4(rng), rand4(rng));
        (qmat(&y) * qmat(&x).transpose() - jmat(&y) * jmat(&x).transpose() - y * x.transpose())
            .amax()
    });
    s.push("Q_anticommute_orthogonal", IDENTITY_TOL, || {
        let x = *unit(rng).as_vec();
        let y = normalize(&tangent(rng, &x)).expect("tangent sample").into_vec();
        (qmat(&y) * qmat(&x).transpose() + qmat(&x) * qmat(&y).transpose()).amax()
    });
    // the symmetric sum must not vanish off the orthogonal complement;
    // reported as the shortfall below |yᵀx|
    s.push("Q_anticommute_nondegenerate", IDENTITY_TOL, || loop {
        let (x, y) = (unit(rng).into_vec(), unit(rng).into_vec());
        let c = y.dot(&x).abs();
        if c > 1e-3 {
            let sum = qmat(&y) * qmat(&x).transpose() + qmat(&x) * qmat(&y).transpose();
            break (c - spectral_norm(&sum)).max(0.0);
        }
    });
    s.push("Q_linearity", IDENTITY_TOL, || {
        let (x, xd) = (rand4(rng), rand4(rng));
        let h = rng.random_range(-1.0..1.0);
        (qmat(&(x + h * xd)) - qmat(&x) - h * qmat(&xd)).amax()
    });
    s.push("quat_error_unit", IDENTITY_TOL, || {
        let (qd, q) = (unit(rng), unit(rng));
        (quat_error(&qd, &q).norm() - 1.0).abs()
    });

    // Lagrangian operators
    let theta_min = inertia.eigen_range().0.min(inertia.m0());
    let theta_max = inertia.eigen_range().1.max(inertia.m0());
    s.push("D_eigen_bounds", IDENTITY_TOL, || {
        let (lo, hi) = sym_eigen_range(&d_matrix(&unit(rng), &inertia));
        (theta_min - lo).max(hi - theta_max).max(0.0)
    });
    s.push("D_symmetric", IDENTITY_TOL, || {
        let d = d_matrix(&unit(rng), &inertia);
        (d - d.transpose()).amax()
    });
    let c_sign = if opts.corrupt_c_sign { -1.0 } else { 1.0 };
    s.push("Ddot_minus_2C_skew", IDENTITY_TOL, || {
        let q = unit(rng);
        let qdot = tangent(rng, q.as_vec());
        let x = rand4(rng);
        let c = c_sign * c_matrix(&q, &qdot, &inertia).expect("tangent");
        (x.transpose() * (d_dot(&q, &qdot, &inertia) - 2.0 * c) * x)[0].abs()
    });
    s.push("Ddot_equals_C_plus_CT", IDENTITY_TOL, || {
        let q = unit(rng);
        let qdot = tangent(rng, q.as_vec());
        let c = c_sign * c_matrix(&q, &qdot, &inertia).expect("tangent");
        (d_dot(&q, &qdot, &inertia) - c - c.transpose()).amax()
    });
    s.push("C_closed_form_matches_definition", IDENTITY_TOL, || {
        let q = unit(rng);
        let qdot = tangent(rng, q.as_vec());
        (c_matrix(&q, &qdot, &inertia).expect("tangent")
            - c_matrix_definition(&q, &qdot, &inertia).expect("tangent"))
        .amax()
    });
    s.push("linear_parametrization", IDENTITY_TOL, || {
        let q = unit(rng);
        let qdot = tangent(rng, q.as_vec());
        let tau_bar = rand4(rng);
        let qddot = lagrangian_accel(&q, &qdot, &tau_bar, &inertia).expect("tangent");
        let (y0, y) = regressors(&q, &qdot, &qddot).expect("tangent");
        let theta = nalgebra::SVector::<f64, 6>::from(inertia.theta());
        let lhs = y0 * inertia.m0() + y * theta;
        let rhs = d_matrix(&q, &inertia) * qddot
            + c_matrix(&q, &qdot, &inertia).expect("tangent") * qdot;
        (lhs - rhs).amax()
    });
    let variants: Vec<InertiaModel> = M0_VALUES
        .iter()
        .map(|&m0| inertia.with_m0(m0))
        .collect::<Result<_>>()?;
    s.push("m0_independence", M0_TOL, || {
        let q = unit(rng);
        let qdot = tangent(rng, q.as_vec());
        let tau_bar = torque_to_generalized(&q, &Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)));
        let accels: Vec<Vec4> = variants
            .iter()
            .map(|im| lagrangian_accel(&q, &qdot, &tau_bar, im).expect("tangent"))
            .collect();
        accels
            .iter()
            .map(|a| (a - accels[0]).amax())
            .fold(0.0, f64::max)
    });

    // sampled constants, checked on a holdout drawn after estimation
    let traj = TrajSummary {
        qd_dot_sup: 0.5,
        qd_ddot_sup: 0.5,
    };
    let rho = 0.5;
    let bounds = estimate_bounds(&inertia, traj, rho, opts.samples.max(1000), opts.seed ^ 0x5eed);
    s.push("k_M_holdout_ratio", 1.0, || {
        let x = random_unit(rng);
        let y = random_unit(rng);
        ratio_k_m(&x, &y, &inertia) / bounds.k_m
    });
    s.push("k_c1_holdout_ratio", 1.0, || {
        let q = random_unit(rng);
        let x = rand4(rng);
        ratio_k_c1(&q, &x, &inertia) / bounds.k_c1
    });
    s.push("residual_dynamics_bound_ratio", 1.0, || {
        let qd = unit(rng);
        let qd_dot = {
            let v = tangent(rng, qd.as_vec());
            v * traj.qd_dot_sup * rng.random_range(0.0..1.0) / v.norm().max(1e-12)
        };
        let qd_ddot = rand4(rng).normalize() * traj.qd_ddot_sup * rng.random_range(0.0..1.0);
        let p_bar = rand4(rng).normalize() * rho * rng.random_range(0.0..1.0);
        // mix near and far configurations
        let q = if rng.random_bool(0.5) {
            unit(rng)
        } else {
            normalize(&(qd.as_vec() + 10f64.powf(rng.random_range(-4.0..0.0)) * rand4(rng)))
                .expect("near sample")
        };
        let qdot = qd_dot + 10f64.powf(rng.random_range(-4.0..0.5)) * tangent(rng, q.as_vec());
        let qdot = qdot - q.as_vec() * q.as_vec().dot(&qdot);
        let tp = TrajPoint {
            qd,
            qd_dot,
            qd_ddot,
        };
        let h = residual_dynamics(&tp, &q, &qdot, &p_bar, &inertia).expect("tangent");
        let dq = qd.as_vec() - q.as_vec();
        let bound = bounds.k_h1 * (qd_dot - qdot).norm() + bounds.k_h2 * dq.map(f64::tanh).norm();
        if bound == 0.0 {
            0.0
        } else {
            h.norm() / bound
        }
    });

    let rows = s.rows;
    let pass = rows.iter().all(|r| r.pass);
    Ok(VerifyReport {
        rows,
        pass,
        seconds: start.elapsed().as_secs_f64(),
    })
}

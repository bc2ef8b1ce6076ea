use serde::{Deserialize, Serialize};

use crate::bounds::TrajSummary;
use crate::control::DesiredPoint;
use crate::error::{Error, Result};
use crate::integrate::rk4_step;
use crate::quat::{jmat, UnitQuaternion, Vec3, Vec4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// `ωd ≡ omega_d0`
    ConstantOmega,
    /// `ωd = a·sin(f·t)·[1, 1, 1]`
    Sinusoid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub qd0: UnitQuaternion,
    pub omega_d0: Vec3,
    pub amplitude: f64,
    /// rad/s
    pub frequency: f64,
}

impl TrajectorySpec {
    pub fn at_rest(qd0: UnitQuaternion) -> Self {
        Self {
            kind: TrajectoryKind::ConstantOmega,
            qd0,
            omega_d0: Vec3::zeros(),
            amplitude: 0.0,
            frequency: 0.0,
        }
    }

    /// `(ωd, ω̇d, ω̈d)` at time `t`.
    pub fn omega(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        match self.kind {
            TrajectoryKind::ConstantOmega => (self.omega_d0, Vec3::zeros(), Vec3::zeros()),
            TrajectoryKind::Sinusoid => {
                let (a, f) = (self.amplitude, self.frequency);
                let ones = Vec3::repeat(1.0);
                let (s, c) = (f * t).sin_cos();
                (a * s * ones, a * f * c * ones, -a * f * f * s * ones)
            }
        }
    }

    /// Upper bounds of `‖ωd‖`, `‖ω̇d‖` over all time.
    pub fn omega_sup(&self) -> (f64, f64) {
        match self.kind {
            TrajectoryKind::ConstantOmega => (self.omega_d0.norm(), 0.0),
            TrajectoryKind::Sinusoid => {
                let a = self.amplitude.abs() * 3f64.sqrt();
                (a, a * self.frequency.abs())
            }
        }
    }

    /// Bounds of `‖q̇d‖` and `‖q̈d‖`. On the unit sphere `‖q̇d‖ = ½‖ωd‖`
    /// exactly and `‖q̈d‖ ≤ ¼‖ωd‖² + ½‖ω̇d‖`.
    pub fn summary(&self) -> TrajSummary {
        let (w, w_dot) = self.omega_sup();
        TrajSummary {
            qd_dot_sup: 0.5 * w,
            qd_ddot_sup: 0.25 * w * w + 0.5 * w_dot,
        }
    }
}

fn derivatives(spec: &TrajectorySpec, qd: UnitQuaternion, t: f64) -> DesiredPoint {
    let (w, w_dot, w_ddot) = spec.omega(t);
    let x = qd.as_vec();
    let qd_dot = 0.5 * jmat(x) * w;
    let qd_ddot = 0.5 * jmat(&qd_dot) * w + 0.5 * jmat(x) * w_dot;
    let qd_dddot = 0.5 * jmat(&qd_ddot) * w + jmat(&qd_dot) * w_dot + 0.5 * jmat(x) * w_ddot;
    DesiredPoint {
        qd,
        qd_dot,
        qd_ddot,
        qd_dddot,
        omega_d: w,
        omega_d_dot: w_dot,
    }
}

/// Desired attitude integrated by RK4 on a fixed grid and cached; samples
/// between grid points take a partial RK4 step from the grid point below.
#[derive(Debug, Clone)]
pub struct DesiredTrajectory {
    spec: TrajectorySpec,
    dt: f64,
    grid: Vec<Vec4>,
}

impl DesiredTrajectory {
    pub fn new(spec: TrajectorySpec, dt_internal: f64) -> Result<Self> {
        if !(dt_internal > 0.0 && dt_internal.is_finite()) {
            return Err(Error::config("trajectory step must be positive"));
        }
        Ok(Self {
            spec,
            dt: dt_internal,
            grid: vec![spec.qd0.into_vec()],
        })
    }

    pub fn spec(&self) -> &TrajectorySpec {
        &self.spec
    }

    fn advance(&self, x: &Vec4, t0: f64, h: f64) -> Vec4 {
        let spec = self.spec;
        let next = rk4_step(x, h, |s, y: &Vec4| {
            Ok::<_, std::convert::Infallible>(0.5 * jmat(y) * spec.omega(t0 + s).0)
        })
        .unwrap_or_else(|never| match never {});
        if next == *x {
            next
        } else {
            next / next.norm()
        }
    }

    fn grid_point(&mut self, k: usize) -> Vec4 {
        while self.grid.len() <= k {
            let j = self.grid.len() - 1;
            let next = self.advance(&self.grid[j], j as f64 * self.dt, self.dt);
            self.grid.push(next);
        }
        self.grid[k]
    }

    pub fn at(&mut self, t: f64) -> DesiredPoint {
        let t = t.max(0.0);
        let ratio = t / self.dt;
        let mut k = ratio.floor() as usize;
        // snap onto a grid point when t is one up to rounding
        if (ratio - (k + 1) as f64).abs() < 1e-9 {
            k += 1;
        }
        let base = self.grid_point(k);
        let s = t - k as f64 * self.dt;
        let x = if s.abs() <= 1e-9 * self.dt {
            base
        } else {
            self.advance(&base, k as f64 * self.dt, s)
        };
        derivatives(&self.spec, UnitQuaternion::new_unchecked(x), t)
    }
}

/// One-off sample of the desired trajectory at `t`.
pub fn gen_desired(spec: &TrajectorySpec, t: f64, dt_internal: f64) -> Result<DesiredPoint> {
    Ok(DesiredTrajectory::new(*spec, dt_internal)?.at(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sinusoid() -> TrajectorySpec {
        TrajectorySpec {
            kind: TrajectoryKind::Sinusoid,
            qd0: UnitQuaternion::identity(),
            omega_d0: Vec3::zeros(),
            amplitude: 0.1,
            frequency: 0.2 * std::f64::consts::PI,
        }
    }

    #[test]
    fn zero_rate_holds_the_initial_attitude() {
        let q0 = UnitQuaternion::from_scalar_vector(0.0, Vec3::new(1.0, 2.0, 3.0).normalize()).unwrap();
        let mut tr = DesiredTrajectory::new(TrajectorySpec::at_rest(q0), 1e-2).unwrap();
        for t in [0.0, 0.005, 1.0, 37.123, 100.0] {
            let d = tr.at(t);
            assert_eq!(d.qd, q0);
            assert_eq!(d.qd_dot, Vec4::zeros());
            assert_eq!(d.qd_ddot, Vec4::zeros());
        }
    }

    #[test]
    fn sinusoid_stays_on_the_sphere_and_tangent() {
        let mut tr = DesiredTrajectory::new(sinusoid(), 1e-3).unwrap();
        for k in 0..=1000 {
            let d = tr.at(k as f64 * 0.1 + 0.0005);
            let x = d.qd.as_vec();
            assert!((x.norm() - 1.0).abs() < 1e-9);
            assert!(x.dot(&d.qd_dot).abs() < 1e-9);
            assert!((d.qd_dot - 0.5 * jmat(x) * d.omega_d).norm() < 1e-9);
        }
    }

    #[test]
    fn second_derivative_matches_finite_differences_at_second_order() {
        let mut tr = DesiredTrajectory::new(sinusoid(), 1e-4).unwrap();
        let t = 3.3;
        let err = |tr: &mut DesiredTrajectory, h: f64| {
            let fd = (tr.at(t + h).qd_dot - tr.at(t - h).qd_dot) / (2.0 * h);
            (fd - tr.at(t).qd_ddot).norm()
        };
        let (e1, e2) = (err(&mut tr, 0.2), err(&mut tr, 0.1));
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.4, "ratio {ratio} ({e1}, {e2})");
    }

    #[test]
    fn third_derivative_matches_finite_differences() {
        let mut tr = DesiredTrajectory::new(sinusoid(), 1e-4).unwrap();
        let (t, h) = (7.1, 1e-3);
        let fd = (tr.at(t + h).qd_ddot - tr.at(t - h).qd_ddot) / (2.0 * h);
        assert!((fd - tr.at(t).qd_dddot).norm() < 1e-6);
    }

    #[test]
    fn attitude_matches_a_finer_integration() {
        let mut coarse = DesiredTrajectory::new(sinusoid(), 1e-2).unwrap();
        let mut fine = DesiredTrajectory::new(sinusoid(), 1e-4).unwrap();
        for t in [0.37, 5.0, 12.345] {
            let gap = (coarse.at(t).qd.as_vec() - fine.at(t).qd.as_vec()).norm();
            assert!(gap < 1e-9, "{t}: {gap}");
        }
    }

    #[test]
    fn rejects_bad_step() {
        assert!(DesiredTrajectory::new(sinusoid(), 0.0).is_err());
        assert!(gen_desired(&sinusoid(), 1.0, -1.0).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::{JumpEvent, SimRecord};
use crate::error::{Error, Result};
use crate::quat::Vec3;

/// Running `sqrt(∫ τᵀτ dt)` by the trapezoid rule over equally spaced
/// samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyMeter {
    integral: f64,
    last: Option<f64>,
}

impl EnergyMeter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the sample `τ` taken `dt` after the previous one.
    pub fn push(&mut self, tau: &Vec3, dt: f64) {
        let cur = tau.norm_squared();
        if let Some(prev) = self.last {
            self.integral += 0.5 * dt * (prev + cur);
        }
        self.last = Some(cur);
    }

    pub fn value(&self) -> f64 {
        self.integral.sqrt()
    }
}

/// Geodesic path length and the initial geodesic error, used to flag
/// unwinding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationBudget {
    /// `∫‖ω_e‖dt` with `ω_e` the body rate relative to the desired frame.
    pub path: f64,
    /// `2 acos |ε₀(0)|`, the shortest rotation onto `±qd(0)`.
    pub initial_angle: f64,
}

/// Factor by which the path must exceed the shortest rotation for a
/// converging run to count as unwinding.
pub const UNWINDING_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub energy_final: f64,
    /// First time after which `‖e‖` stays below the threshold until the
    /// horizon; `None` if the final sample is above it.
    pub convergence_time: Option<f64>,
    pub convergence_threshold: f64,
    pub jump_count: usize,
    pub first_jump_time: Option<f64>,
    pub unwinding_flag: bool,
    pub theta_err_final: Option<f64>,
    pub e_norm_final: f64,
    pub eps0_final: f64,
    pub path_length: f64,
    pub initial_angle: f64,
}

/// Summary metrics of a run.
pub fn metrics(
    records: &[SimRecord],
    jumps: &[JumpEvent],
    budget: RotationBudget,
    threshold: f64,
    adaptive: bool,
) -> Result<Metrics> {
    let last = records.last().ok_or(Error::EmptyRecords)?;
    let convergence_time = convergence_time(records, threshold);
    let unwinding_flag =
        convergence_time.is_some() && budget.path > UNWINDING_FACTOR * budget.initial_angle;
    Ok(Metrics {
        energy_final: last.energy,
        convergence_time,
        convergence_threshold: threshold,
        jump_count: jumps.len(),
        first_jump_time: jumps.first().map(|j| j.t),
        unwinding_flag,
        theta_err_final: adaptive.then_some(last.theta_err_norm),
        e_norm_final: last.e_norm,
        eps0_final: last.eps0,
        path_length: budget.path,
        initial_angle: budget.initial_angle,
    })
}

pub fn convergence_time(records: &[SimRecord], threshold: f64) -> Option<f64> {
    let mut t_conv = None;
    for r in records.iter().rev() {
        if r.e_norm < threshold {
            t_conv = Some(r.t);
        } else {
            break;
        }
    }
    t_conv
}

/// Number of sign changes of `h` between consecutive records.
pub fn record_mode_changes(records: &[SimRecord]) -> usize {
    records.windows(2).filter(|w| w[0].h != w[1].h).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Mode;
    use crate::quat::Vec4;

    fn rec(t: f64, e: f64, h: Mode) -> SimRecord {
        SimRecord {
            t,
            q: Vec4::new(1.0, 0.0, 0.0, 0.0),
            omega: Vec3::zeros(),
            h,
            e_norm: e,
            eps0: 1.0,
            nu_norm: 0.0,
            eta_norm: 0.0,
            theta_err_norm: 0.0,
            tau: Vec3::zeros(),
            tau_bar: Vec4::zeros(),
            energy: 0.0,
            v_lyap: 0.0,
        }
    }

    #[test]
    fn zero_torque_has_zero_energy() {
        let mut m = EnergyMeter::new();
        for _ in 0..100 {
            m.push(&Vec3::zeros(), 0.1);
        }
        assert_eq!(m.value(), 0.0);
    }

    #[test]
    fn unit_torque_over_four_seconds() {
        let mut m = EnergyMeter::new();
        for _ in 0..=4000 {
            m.push(&Vec3::new(1.0, 0.0, 0.0), 1e-3);
        }
        assert!((m.value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn convergence_requires_staying_below() {
        let rs: Vec<_> = [0.5, 0.01, 0.5, 0.01, 0.005]
            .iter()
            .enumerate()
            .map(|(k, &e)| rec(k as f64, e, Mode::Plus))
            .collect();
        assert_eq!(convergence_time(&rs, 0.02), Some(3.0));
        assert_eq!(convergence_time(&rs[..3], 0.02), None);
    }

    #[test]
    fn empty_records_are_rejected() {
        let b = RotationBudget {
            path: 0.0,
            initial_angle: 0.0,
        };
        assert!(matches!(metrics(&[], &[], b, 0.02, false), Err(Error::EmptyRecords)));
    }

    #[test]
    fn unwinding_needs_convergence_and_excess_path() {
        let rs = vec![rec(0.0, 1.0, Mode::Plus), rec(1.0, 0.0, Mode::Minus)];
        let long = RotationBudget {
            path: 5.0,
            initial_angle: 3.0,
        };
        let short = RotationBudget {
            path: 4.0,
            initial_angle: 3.0,
        };
        assert!(metrics(&rs, &[], long, 0.02, false).unwrap().unwinding_flag);
        assert!(!metrics(&rs, &[], short, 0.02, false).unwrap().unwinding_flag);
        let diverged = vec![rec(0.0, 1.0, Mode::Plus), rec(1.0, 1.0, Mode::Plus)];
        assert!(!metrics(&diverged, &[], long, 0.02, false).unwrap().unwinding_flag);
        assert_eq!(record_mode_changes(&rs), 1);
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{UnitQuaternion, Vec4};

/// Discrete mode `h ∈ {−1, +1}` selecting which of `±qd` is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Mode {
    Plus,
    Minus,
}

impl Mode {
    pub fn sign(self) -> f64 {
        match self {
            Mode::Plus => 1.0,
            Mode::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Mode::Plus => Mode::Minus,
            Mode::Minus => Mode::Plus,
        }
    }
}

impl TryFrom<i8> for Mode {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Mode::Plus),
            -1 => Ok(Mode::Minus),
            _ => Err(Error::config(format!("mode must be +1 or -1, got {v}"))),
        }
    }
}

impl From<Mode> for i8 {
    fn from(m: Mode) -> i8 {
        m.sign() as i8
    }
}

/// `+1` when the scalar part of the quaternion error is non-negative.
pub fn initial_mode(eps0_at_t0: f64) -> Mode {
    if eps0_at_t0 >= 0.0 {
        Mode::Plus
    } else {
        Mode::Minus
    }
}

/// `e = q − h·qd`
pub fn tracking_error(q: &UnitQuaternion, qd: &UnitQuaternion, h: Mode) -> Vec4 {
    q.as_vec() - h.sign() * qd.as_vec()
}

/// `U(e, h) = ‖e‖²`
pub fn potential(e: &Vec4) -> f64 {
    e.norm_squared()
}

/// `G = U(e(h), h) − min_m U(e(m), m)`.
pub fn gap(q: &UnitQuaternion, qd: &UnitQuaternion, h: Mode) -> f64 {
    let own = potential(&tracking_error(q, qd, h));
    let other = potential(&tracking_error(q, qd, h.flipped()));
    (own - other).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub h: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridLogic {
    pub h: Mode,
    pub delta: f64,
    pub jumps: Vec<Jump>,
}

impl HybridLogic {
    /// `delta = 0` is accepted: it reproduces the discontinuous
    /// sign-switching controller used as the non-robust baseline.
    pub fn new(h: Mode, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::config(format!("gap threshold must be >= 0, got {delta}")));
        }
        Ok(Self {
            h,
            delta,
            jumps: Vec::new(),
        })
    }

    pub fn jump_count(&self) -> usize {
        self.jumps.len()
    }
}

/// Switches to the minimizing mode when `G ≥ δ`. A mode change is logged at
/// time `t`; a tie at `G = δ` fires.
pub fn jump_rule(logic: &mut HybridLogic, q: &UnitQuaternion, qd: &UnitQuaternion, t: f64) -> bool {
    if gap(q, qd, logic.h) < logic.delta {
        return false;
    }
    let own = potential(&tracking_error(q, qd, logic.h));
    let other = potential(&tracking_error(q, qd, logic.h.flipped()));
    if other < own {
        logic.h = logic.h.flipped();
        logic.jumps.push(Jump { t, h: logic.h });
        true
    } else {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::{normalize, quat_error, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Attitude whose error against the identity has scalar part `eps0`.
    fn with_eps0(eps0: f64) -> UnitQuaternion {
        let v = (1.0 - eps0 * eps0).sqrt();
        UnitQuaternion::from_scalar_vector(eps0, Vec3::new(v, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn initial_mode_cases() {
        assert_eq!(initial_mode(0.0), Mode::Plus);
        assert_eq!(initial_mode(-0.3), Mode::Minus);
        assert_eq!(initial_mode(0.7), Mode::Plus);
    }

    #[test]
    fn potential_and_gap_examples() {
        let id = UnitQuaternion::identity();
        let e = tracking_error(&id, &id, Mode::Plus);
        assert_eq!(e, Vec4::zeros());
        assert_eq!(potential(&e), 0.0);
        assert_eq!(gap(&id, &id, Mode::Plus), 0.0);

        let q = with_eps0(-0.5);
        let u = potential(&tracking_error(&q, &id, Mode::Plus));
        assert!((u - 3.0).abs() < 1e-12);
        let umin = potential(&tracking_error(&q, &id, Mode::Minus));
        assert!((umin - 1.0).abs() < 1e-12);
        assert!((gap(&q, &id, Mode::Plus) - 2.0).abs() < 1e-12);

        let q = with_eps0(0.0);
        assert!(gap(&q, &id, Mode::Plus).abs() < 1e-15);
        assert!(gap(&q, &id, Mode::Minus).abs() < 1e-15);
    }

    #[test]
    fn potential_closed_form_in_scalar_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..1000 {
            let q = normalize(&Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0))).unwrap();
            let qd = normalize(&Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0))).unwrap();
            let eps0 = quat_error(&qd, &q)[0];
            for h in [Mode::Plus, Mode::Minus] {
                let u = potential(&tracking_error(&q, &qd, h));
                assert!((u - 2.0 * (1.0 - h.sign() * eps0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jump_rule_cases() {
        let id = UnitQuaternion::identity();
        let q = with_eps0(-0.5);

        let mut logic = HybridLogic::new(Mode::Plus, 2.5).unwrap();
        assert!(!jump_rule(&mut logic, &q, &id, 0.0));
        assert_eq!(logic.h, Mode::Plus);

        let mut logic = HybridLogic::new(Mode::Plus, 0.4).unwrap();
        assert!(jump_rule(&mut logic, &q, &id, 1.5));
        assert_eq!(logic.h, Mode::Minus);
        assert_eq!(logic.jumps, vec![Jump { t: 1.5, h: Mode::Minus }]);

        let mut logic = HybridLogic::new(Mode::Minus, 0.4).unwrap();
        assert!(!jump_rule(&mut logic, &q, &id, 0.0));
        assert!(logic.jumps.is_empty());
    }

    #[test]
    fn jump_decreases_potential_by_at_least_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let id = UnitQuaternion::identity();
        for _ in 0..1000 {
            let q = normalize(&Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0))).unwrap();
            let delta = rng.random_range(0.0..1.0);
            let mut logic = HybridLogic::new(Mode::Plus, delta).unwrap();
            let before = potential(&tracking_error(&q, &id, logic.h));
            if jump_rule(&mut logic, &q, &id, 0.0) {
                let after = potential(&tracking_error(&q, &id, logic.h));
                assert!(before - after >= delta - 1e-12);
                assert!(gap(&q, &id, logic.h) == 0.0);
            }
        }
    }

    #[test]
    fn rejects_negative_gap() {
        assert!(HybridLogic::new(Mode::Plus, -0.1).is_err());
        assert!(HybridLogic::new(Mode::Plus, f64::NAN).is_err());
        assert!(Mode::try_from(0i8).is_err());
    }
}

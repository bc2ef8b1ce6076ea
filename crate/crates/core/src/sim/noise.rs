use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::quat::{normalize, UnitQuaternion, Vec4};

/// `q_m = (q + n·v̄)/‖q + n·v̄‖` with `v̄ = v/‖v‖`, `v ~ N(0, σ²I₄)` and
/// `n ~ U[0, n_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub n_max: f64,
    pub sigma: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel { n_max: 0.0, sigma: 0.0 };

    pub fn new(n_max: f64, sigma: f64) -> Result<Self> {
        if !(n_max >= 0.0 && n_max.is_finite()) || !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::config(format!(
                "noise amplitude and sigma must be >= 0, got {n_max}, {sigma}"
            )));
        }
        Ok(Self { n_max, sigma })
    }

    pub fn is_silent(&self) -> bool {
        self.n_max == 0.0 || self.sigma == 0.0
    }

    /// Draws the additive perturbation `n·v̄`. A silent model consumes no
    /// randomness.
    pub fn draw(&self, rng: &mut impl Rng) -> Vec4 {
        if self.is_silent() {
            return Vec4::zeros();
        }
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        let v = loop {
            let v = Vec4::from_fn(|_, _| normal.sample(rng));
            if v.norm() > 0.0 {
                break v;
            }
        };
        let n = Uniform::new_inclusive(0.0, self.n_max)
            .expect("n_max validated")
            .sample(rng);
        n * v / v.norm()
    }
}

/// Applies a drawn perturbation to an attitude.
pub fn perturb(q: &Vec4, offset: &Vec4) -> Result<UnitQuaternion> {
    if *offset == Vec4::zeros() {
        return normalize(q);
    }
    normalize(&(q + offset))
}

/// Noisy measurement of `q_true`.
pub fn measure(q_true: &UnitQuaternion, noise: &NoiseModel, rng: &mut impl Rng) -> Result<UnitQuaternion> {
    if noise.is_silent() {
        return Ok(*q_true);
    }
    perturb(q_true.as_vec(), &noise.draw(rng))
}

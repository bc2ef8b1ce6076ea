use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    None,
    Constant,
    /// `ṗ = v` with `v ~ N(0, σ_w²I₃)` drawn once per step.
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceModel {
    pub kind: DisturbanceKind,
    pub p0: Vec3,
    pub sigma_w: f64,
}

impl DisturbanceModel {
    pub const NONE: DisturbanceModel = DisturbanceModel {
        kind: DisturbanceKind::None,
        p0: Vec3::new(0.0, 0.0, 0.0),
        sigma_w: 0.0,
    };

    pub fn new(kind: DisturbanceKind, p0: Vec3, sigma_w: f64) -> Result<Self> {
        if p0.iter().any(|v| !v.is_finite()) || !(sigma_w >= 0.0 && sigma_w.is_finite()) {
            return Err(Error::config("disturbance needs finite p0 and sigma_w >= 0"));
        }
        Ok(Self { kind, p0, sigma_w })
    }
}

/// A seeded realization of a disturbance model, advanced step by step.
/// Within a step `p` is linear in time (constant rate `v`).
#[derive(Debug, Clone)]
pub struct DisturbanceProcess {
    model: DisturbanceModel,
    p: Vec3,
    v: Vec3,
    rng: ChaCha8Rng,
}

/// RNG stream reserved for disturbance draws.
pub(crate) const DISTURBANCE_STREAM: u64 = 2;

impl DisturbanceProcess {
    pub fn new(model: DisturbanceModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(DISTURBANCE_STREAM);
        let p = match model.kind {
            DisturbanceKind::None => Vec3::zeros(),
            _ => model.p0,
        };
        Self {
            model,
            p,
            v: Vec3::zeros(),
            rng,
        }
    }

    /// Draws the rate used over the coming step.
    pub fn begin_step(&mut self) {
        if self.model.kind == DisturbanceKind::RandomWalk && self.model.sigma_w > 0.0 {
            let normal = Normal::new(0.0, self.model.sigma_w).expect("sigma_w validated");
            self.v = Vec3::from_fn(|_, _| normal.sample(&mut self.rng));
        }
    }

    /// Disturbance at offset `s` into the current step.
    pub fn at(&self, s: f64) -> Vec3 {
        self.p + s * self.v
    }

    pub fn end_step(&mut self, dt: f64) {
        self.p += dt * self.v;
    }

    /// Current value and step: returns `p(t)` and advances to `t + dt`.
    pub fn disturbance(&mut self, dt: f64) -> Vec3 {
        self.begin_step();
        let p = self.at(0.0);
        self.end_step(dt);
        p
    }
}

/// `sup ‖p(t)‖` of the seeded realization over `[0, horizon]`.
pub fn sup_norm(model: &DisturbanceModel, seed: u64, dt: f64, horizon: f64) -> f64 {
    let mut proc = DisturbanceProcess::new(*model, seed);
    let steps = (horizon / dt).round() as usize;
    let mut sup = proc.at(0.0).norm();
    for _ in 0..steps {
        sup = sup.max(proc.disturbance(dt).norm());
    }
    sup.max(proc.at(0.0).norm())
}

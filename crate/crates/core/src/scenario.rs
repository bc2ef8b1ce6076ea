//! Scenario configuration: a flat JSON key set plus compiled-in presets.

use serde::{Deserialize, Serialize};

use crate::bounds::{estimate_bounds, BoundConstants};
use crate::control::{
    check_gains_adaptive_sf, check_gains_adaptive_of, GainCheck, GainsAdaptiveOF, GainsAdaptiveSF,
    GainsStateFeedback, Mode,
};
use crate::dynamics::InertiaModel;
use crate::error::{Error, Result};
use crate::quat::{normalize, Mat4, Mat9, UnitQuaternion, Vec3, Vec4, Vec9};
use crate::sim::{
    sup_norm, DisturbanceKind, DisturbanceModel, NoiseModel, TrajectoryKind, TrajectorySpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Zero torque; the free rigid body.
    None,
    /// State feedback with the mode frozen at its initial value.
    Continuous,
    /// State feedback with hysteretic mode switching.
    Hybrid,
    /// Adaptive hybrid state feedback with composite adaptation.
    AdaptiveSf,
    /// Adaptive hybrid attitude-only feedback.
    AdaptiveOf,
}

impl ControllerKind {
    pub fn is_adaptive(self) -> bool {
        matches!(self, ControllerKind::AdaptiveSf | ControllerKind::AdaptiveOf)
    }

    /// Whether the mode may jump during a run.
    pub fn switches(self) -> bool {
        matches!(
            self,
            ControllerKind::Hybrid | ControllerKind::AdaptiveSf | ControllerKind::AdaptiveOf
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantForm {
    /// `(q, ω)` with the Euler–Newton equations.
    EulerNewton,
    /// `(q, q̇)` with the Lagrangian acceleration.
    Lagrangian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInitName {
    Zero,
    True,
}

/// Initial parameter estimate: `"zero"`, `"true"` or an explicit
/// 9-vector `[m11, m22, m33, m23, m13, m12, p1, p2, p3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaInit {
    Named(ThetaInitName),
    Explicit([f64; 9]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub controller: ControllerKind,
    pub delta: f64,

    pub lambda_diag: [f64; 4],
    pub ks_diag: [f64; 4],

    pub kd_diag: [f64; 4],
    pub kp: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub lambda_f: f64,

    pub kf_diag: [f64; 4],
    pub kv: f64,
    pub gamma_diag: [f64; 9],

    /// `[m11, m22, m33, m23, m13, m12]`
    pub inertia: [f64; 6],
    pub m0: f64,

    pub trajectory_kind: TrajectoryKind,
    pub qd0: [f64; 4],
    pub omega_d0: [f64; 3],
    pub amplitude: f64,
    pub frequency: f64,

    pub noise_n_max: f64,
    pub noise_sigma: f64,

    pub disturbance_kind: DisturbanceKind,
    pub p0: [f64; 3],
    pub sigma_w: f64,

    pub q0: [f64; 4],
    pub omega0: [f64; 3],
    /// Initial mode; derived from the first measurement when absent.
    pub h0: Option<i8>,

    pub dt: f64,
    pub horizon: f64,
    pub output_decimation: usize,
    pub seed: u64,
    pub theta_hat0: ThetaInit,
    pub convergence_threshold: f64,

    pub plant: PlantForm,
    /// Integrate the saturated damping filter alongside the linear one and
    /// report their largest disagreement.
    pub tanh_filter_check: bool,
    /// Keep the filtered regressor `Yf` at every record for excitation
    /// analysis.
    pub pe_history: bool,
}

fn u_bar() -> [f64; 3] {
    let n = 14f64.sqrt();
    [1.0 / n, 2.0 / n, 3.0 / n]
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let u = u_bar();
        Self {
            controller: ControllerKind::Hybrid,
            delta: 0.4,
            lambda_diag: [0.1; 4],
            ks_diag: [1.0; 4],
            kd_diag: [5.0; 4],
            kp: 0.7,
            gamma1: 1.0,
            gamma2: 1.0,
            lambda_f: 1.0,
            kf_diag: [0.1; 4],
            kv: 3.0,
            gamma_diag: [1000.0, 1000.0, 1000.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            inertia: [10.0 * u[0], 10.0 * u[1], 10.0 * u[2], 0.0, 0.0, 0.0],
            m0: 1.0,
            trajectory_kind: TrajectoryKind::ConstantOmega,
            qd0: [1.0, 0.0, 0.0, 0.0],
            omega_d0: [0.0; 3],
            amplitude: 0.0,
            frequency: 0.0,
            noise_n_max: 0.0,
            noise_sigma: 0.2f64.sqrt(),
            disturbance_kind: DisturbanceKind::None,
            p0: [0.0; 3],
            sigma_w: 0.2f64.sqrt(),
            q0: [0.0, u[0], u[1], u[2]],
            omega0: [0.5 * u[0], 0.5 * u[1], 0.5 * u[2]],
            h0: Some(1),
            dt: 1e-3,
            horizon: 100.0,
            output_decimation: 10,
            seed: 0,
            theta_hat0: ThetaInit::Named(ThetaInitName::Zero),
            convergence_threshold: 0.02,
            plant: PlantForm::EulerNewton,
            tanh_filter_check: false,
            pe_history: false,
        }
    }
}

/// Names accepted by [`ScenarioConfig::preset`].
pub const PRESET_NAMES: &[&str] = &[
    "1.1",
    "1.1-continuous",
    "1.1-discontinuous",
    "1.2",
    "1.2-continuous",
    "1.2-discontinuous",
    "2.1",
    "2.2",
    "2.3",
    "2.4",
    "2.1-sf",
    "2.2-sf",
];

fn simulation1(omega_scale: f64, noisy: bool) -> ScenarioConfig {
    let u = u_bar();
    ScenarioConfig {
        omega0: [omega_scale * u[0], omega_scale * u[1], omega_scale * u[2]],
        noise_n_max: if noisy { 0.1 } else { 0.0 },
        ..ScenarioConfig::default()
    }
}

fn simulation2(delta: f64) -> ScenarioConfig {
    ScenarioConfig {
        controller: ControllerKind::AdaptiveOf,
        delta,
        trajectory_kind: TrajectoryKind::Sinusoid,
        amplitude: 0.1,
        frequency: 0.2 * std::f64::consts::PI,
        disturbance_kind: DisturbanceKind::Constant,
        p0: [0.2, -0.1, -0.05],
        q0: [0.0, 0.0, 1.0, 0.0],
        omega0: u_bar(),
        theta_hat0: ThetaInit::Named(ThetaInitName::True),
        ..ScenarioConfig::default()
    }
}

impl ScenarioConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let (base, variant) = match name.split_once('-') {
            Some((b, v)) => (b, Some(v)),
            None => (name, None),
        };
        let mut cfg = match base {
            "1.1" => simulation1(0.5, false),
            "1.2" => simulation1(0.0, true),
            "2.1" => simulation2(0.9),
            "2.2" => simulation2(0.4),
            "2.3" => ScenarioConfig {
                noise_n_max: 0.1,
                ..simulation2(0.4)
            },
            "2.4" => ScenarioConfig {
                disturbance_kind: DisturbanceKind::RandomWalk,
                ..simulation2(0.4)
            },
            _ => return Err(Error::config(format!("unknown preset '{name}'"))),
        };
        match (base.starts_with('1'), variant) {
            (_, None) => {}
            (true, Some("continuous")) => cfg.controller = ControllerKind::Continuous,
            (true, Some("discontinuous")) => cfg.delta = 0.0,
            (false, Some("sf")) if base == "2.1" || base == "2.2" => {
                cfg.controller = ControllerKind::AdaptiveSf;
            }
            _ => return Err(Error::config(format!("unknown preset '{name}'"))),
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Returns a copy with the scalar key `key` replaced by `value`.
    pub fn with_param(&self, key: &str, value: &serde_json::Value) -> Result<Self> {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        match obj.get(key) {
            None => return Err(Error::config(format!("unknown parameter '{key}'"))),
            Some(serde_json::Value::Array(_)) | Some(serde_json::Value::Object(_)) => {
                return Err(Error::config(format!("parameter '{key}' is not a scalar")))
            }
            Some(_) => {}
        }
        obj.insert(key.to_string(), value.clone());
        let cfg: Self = serde_json::from_value(v).map_err(|e| Error::config(format!("{key}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn inertia_model(&self) -> Result<InertiaModel> {
        InertiaModel::from_theta(self.inertia, self.m0)
    }

    pub fn trajectory(&self) -> Result<TrajectorySpec> {
        Ok(TrajectorySpec {
            kind: self.trajectory_kind,
            qd0: normalize(&Vec4::from(self.qd0))?,
            omega_d0: Vec3::from(self.omega_d0),
            amplitude: self.amplitude,
            frequency: self.frequency,
        })
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.noise_n_max, self.noise_sigma)
    }

    pub fn disturbance(&self) -> Result<DisturbanceModel> {
        DisturbanceModel::new(self.disturbance_kind, Vec3::from(self.p0), self.sigma_w)
    }

    pub fn initial_attitude(&self) -> Result<UnitQuaternion> {
        normalize(&Vec4::from(self.q0))
    }

    pub fn initial_mode(&self) -> Result<Option<Mode>> {
        self.h0.map(Mode::try_from).transpose()
    }

    pub fn gains_state_feedback(&self) -> Result<GainsStateFeedback> {
        GainsStateFeedback::new(
            Mat4::from_diagonal(&Vec4::from(self.lambda_diag)),
            Mat4::from_diagonal(&Vec4::from(self.ks_diag)),
        )
    }

    pub fn gains_adaptive_sf(&self) -> Result<GainsAdaptiveSF> {
        GainsAdaptiveSF::new(
            Mat4::from_diagonal(&Vec4::from(self.kd_diag)),
            self.kp,
            self.gamma1,
            self.gamma2,
            self.lambda_f,
        )
    }

    pub fn gains_adaptive_of(&self) -> Result<GainsAdaptiveOF> {
        GainsAdaptiveOF::new(
            Mat4::from_diagonal(&Vec4::from(self.kf_diag)),
            self.kv,
            self.kp,
            Mat9::from_diagonal(&Vec9::from(self.gamma_diag)),
        )
    }

    /// `Θ = [θ; p(0)]` of the plant.
    pub fn theta_true(&self) -> Vec9 {
        let p = match self.disturbance_kind {
            DisturbanceKind::None => [0.0; 3],
            _ => self.p0,
        };
        Vec9::from_iterator(self.inertia.iter().chain(p.iter()).copied())
    }

    pub fn theta_hat_initial(&self) -> Vec9 {
        match self.theta_hat0 {
            ThetaInit::Named(ThetaInitName::Zero) => Vec9::zeros(),
            ThetaInit::Named(ThetaInitName::True) => self.theta_true(),
            ThetaInit::Explicit(v) => Vec9::from(v),
        }
    }

    /// Bound constants for this scenario: trajectory sups from the
    /// desired rate profile and `ρ` as the sup of the seeded disturbance
    /// realization over the horizon.
    pub fn bound_constants(&self, samples: usize, seed: u64) -> Result<BoundConstants> {
        if !(self.dt > 0.0) || !(self.horizon >= 0.0) {
            return Err(Error::config("dt must be positive and horizon >= 0"));
        }
        let rho = sup_norm(&self.disturbance()?, self.seed, self.dt, self.horizon);
        Ok(estimate_bounds(
            &self.inertia_model()?,
            self.trajectory()?.summary(),
            rho,
            samples,
            seed,
        ))
    }

    /// Sufficient gain condition of the configured adaptive controller.
    /// A non-positive `kv` is a failing verdict, not a configuration error.
    pub fn check_gains(&self, samples: usize, seed: u64) -> Result<GainReport> {
        let (controller, check) = match self.controller {
            ControllerKind::AdaptiveSf => {
                let g = self.gains_adaptive_sf()?;
                ("adaptive_sf", check_gains_adaptive_sf(&g, &self.bound_constants(samples, seed)?))
            }
            ControllerKind::AdaptiveOf => {
                let g = self.gains_adaptive_of()?;
                ("adaptive_of", check_gains_adaptive_of(&g, &self.bound_constants(samples, seed)?))
            }
            other => {
                return Err(Error::config(format!(
                    "gain conditions exist only for adaptive controllers, not {other:?}"
                )))
            }
        };
        Ok(GainReport {
            controller,
            bounds: self.bound_constants(samples, seed)?,
            check,
        })
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Checks every field that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if self.horizon / self.dt > 1e9 {
            return Err(Error::config("horizon/dt exceeds 1e9 steps"));
        }
        if self.output_decimation == 0 {
            return Err(Error::config("output_decimation must be >= 1"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if !(self.convergence_threshold > 0.0) {
            return Err(Error::config("convergence_threshold must be positive"));
        }
        let finite = |name: &str, vals: &[f64]| -> Result<()> {
            if vals.iter().all(|v| v.is_finite()) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} has non-finite entries")))
            }
        };
        finite("omega0", &self.omega0)?;
        finite("omega_d0", &self.omega_d0)?;
        finite("amplitude/frequency", &[self.amplitude, self.frequency])?;
        if let ThetaInit::Explicit(v) = self.theta_hat0 {
            finite("theta_hat0", &v)?;
        }
        self.inertia_model()?;
        self.trajectory()?;
        self.noise()?;
        self.disturbance()?;
        self.initial_attitude()?;
        self.initial_mode()?;
        match self.controller {
            ControllerKind::None => {}
            ControllerKind::Continuous | ControllerKind::Hybrid => {
                self.gains_state_feedback()?;
            }
            ControllerKind::AdaptiveSf => {
                self.gains_adaptive_sf()?;
            }
            ControllerKind::AdaptiveOf => {
                self.gains_adaptive_of()?.validate_for_run()?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    pub controller: &'static str,
    pub bounds: BoundConstants,
    pub check: GainCheck,
}

//! Quaternion attitude tracking on ℝ⁴.
//!
//! The rigid-body attitude motion is written as a 4-DOF Lagrangian system
//! `D(q)q̈ + C(q, q̇)q̇ = τ̄` on the unit quaternion. On top of it sit four
//! tracking controllers (continuous, hybrid, adaptive hybrid state-feedback
//! and adaptive hybrid attitude-only feedback), a deterministic closed-loop
//! simulator and numeric property suites for the structural identities of
//! the model.

pub mod bounds;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod output;
pub mod quat;
pub mod scenario;
pub mod sim;
pub mod verify;

pub use bounds::{estimate_bounds, BoundConstants, TrajSummary};
pub use control::{DesiredPoint, HybridLogic, Mode};
pub use dynamics::{BodyState, InertiaModel};
pub use error::{Error, Result};
pub use quat::{UnitQuaternion, Vec3, Vec4};
pub use scenario::{ControllerKind, GainReport, ScenarioConfig};
pub use sim::{run, Metrics, RunOutput, SimRecord};
pub use verify::{VerifyOptions, VerifyReport};

//! Closed-loop simulation: desired trajectory, measurement noise,
//! disturbances, the fixed-step runner and run summaries.

mod disturbance;
pub mod metrics;
mod noise;
mod runner;
mod trajectory;

pub use disturbance::{sup_norm, DisturbanceKind, DisturbanceModel, DisturbanceProcess};
pub use metrics::{metrics, EnergyMeter, Metrics, RotationBudget};
pub use noise::{measure, perturb, NoiseModel};
pub use runner::{run, Diagnostics, JumpEvent, RunOutput, SimRecord, DIVERGENCE_OMEGA};
pub use trajectory::{gen_desired, DesiredTrajectory, TrajectoryKind, TrajectorySpec};

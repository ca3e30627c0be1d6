//! Heteroskedastic linear bandits: variance estimation by adaptive designs,
//! best-arm and level-set identification, and complexity functionals.

pub mod design;
pub mod env;
pub mod error;
pub mod ident;
pub mod instance;
pub mod lift;
pub mod linalg;
pub mod regress;
pub mod variance;
pub mod varest;

pub use design::{solve_design, Design, DesignProblem, RoundMode, RoundSchedule};
pub use error::{Error, Result};
pub use instance::HeteroInstance;
pub use lift::{lift_phi, LiftedArm};
pub use variance::{clamp_variance, mae, EstimatorKind, VarianceEstimate};
pub use env::{Environment, NoiseMode, Observation};
pub use ident::{Answer, IdentTask, Objective, RunTrace};

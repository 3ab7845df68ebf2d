//! Mean-reflected stochastic differential equations with jumps,
//!
//! `X_t = X_0 + ∫ b(X) ds + ∫ σ(X) dB + ∫∫ F(X, z) Ñ(ds, dz) + K_t`,
//! `E h(X_t) ≥ 0`, `∫ E h(X_t) dK_t = 0`,
//!
//! approximated by an interacting-particle Euler scheme in which the
//! expectation is replaced by the empirical measure of `N` particles.
//!
//! ```
//! use meanreflect::model::make_case_i;
//! use meanreflect::scheme::{simulate, GridSpec, RecordOptions};
//!
//! let (model, constraint) = make_case_i(2.0, 1.0, 1.0, 5.0, 1.0, 0.5).unwrap();
//! let grid = GridSpec::new(1.0, 50).unwrap();
//! let run = simulate(&model, &constraint, grid, 500, 7, &RecordOptions::default()).unwrap();
//! assert!(run.k_hat[50] > 0.0);
//! ```

pub mod cli;
pub mod config;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod output;
pub mod parallel;
pub mod reflection;
pub mod roots;
pub mod scheme;
pub mod stochastics;

pub use config::{parse_config, ExperimentConfig};
pub use model::{Constraint, ModelSpec};
pub use reflection::{EmpiricalMeasure, ReflectionTracker};
pub use scheme::{simulate, GridSpec, ParticleSystem, RecordOptions, TrajectoryRecord};
pub use stochastics::{JumpLaw, NoiseRecord};

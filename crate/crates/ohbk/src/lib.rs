//! Online signal recovery with the heavy-ball Kaczmarz iteration.
//!
//! A signal x* in R^n is observed one linear measurement at a time:
//! at step t a direction phi_t arrives together with y_t = <phi_t, x*>.
//! The solver keeps two iterates and applies
//!
//! ```text
//! x_{t+1} = x_t - (<phi_t, x_t> - y_t) / |phi_t|^2 * phi_t + beta (x_t - x_{t-1}),
//! ```
//!
//! a Kaczmarz projection plus heavy-ball momentum. For well-spread
//! measurement directions a small beta accelerates convergence
//! substantially; the [`theory`] module computes the admissibility
//! condition and contraction rate that say how small, in terms of the
//! spectrum of W = E[phi phi^T / |phi|^2].
//!
//! Measurements come from seeded synthetic distributions or CSV
//! datasets ([`sources`]), single runs and multi-trial sweeps live in
//! [`solver`] and [`experiments`], and the `ohbk` binary exposes all of
//! it with reproducible CSV output.
//!
//! ```
//! use ohbk::sources::{SourceKind, SourceSpec};
//! use ohbk::solver::run_seeded;
//!
//! let spec = SourceSpec::new(SourceKind::Uniform { lo: 0.0, hi: 1.0 }, 50, 7).unwrap();
//! let plain = run_seeded(&spec, 0.0, 2000, 1).unwrap();
//! let momentum = run_seeded(&spec, 0.25, 2000, 1).unwrap();
//! // Same seed means the same signal and stream, so the comparison is paired.
//! assert!(momentum.final_error() < plain.final_error());
//! ```

pub mod cli;
pub mod experiments;
pub mod linalg;
pub mod solver;
pub mod sources;
pub mod theory;

pub use experiments::{ExperimentConfig, PointStats, SweepResult};
pub use linalg::{SymMatrix, Vector};
pub use solver::{SolverState, Trajectory};
pub use sources::{GroundTruth, Measurement, RowOrder, SourceKind, SourceSpec};
pub use theory::{RateReport, WEstimate};

//! Semi-persistent subchannel scheduling for C-V2X mode-3.
//!
//! The eNodeB assigns each vehicle of a cluster one sidelink subchannel per
//! scheduling window so that no two vehicles of the cluster transmit in the
//! same subframe. Subframes are collapsed into macro-vertices, which turns
//! the constrained matching into a square assignment problem solved with
//! Kuhn-Munkres. Side information is the per-subchannel SINR reported by
//! vehicles, optionally linearly quantized.

pub mod assignment;
pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod matrix;
pub mod metrics;
pub mod scenario;
pub mod sideinfo;
pub mod solvers;
pub mod validate;

pub use assignment::{compress, expand_solution, FullProblem, ReducedProblem};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use grid::{ResourceGrid, SpsTimer};
pub use metrics::{EvalReport, SweepRow};
pub use scenario::{Cluster, DummyMask, ScenarioKind, ScenarioModel, SinrMatrix};
pub use sideinfo::{QuantizerSpec, RateMatrix};
pub use solvers::{Assignment, Method, SolveStats};

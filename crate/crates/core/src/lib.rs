//! One-dimensional ternary Maxwell-Stefan transport with operator splitting.
//!
//! The solver advances three mole-fraction fields on a cell-centered grid
//! under diffusion (Maxwell-Stefan fluxes from a per-face 3x3 solve), linear
//! reactions (exact matrix exponential) and constant-velocity convection
//! (first-order upwind), composed by Lie, Strang or iterative splitting.
//!
//! ```
//! use ms_transport::scenarios::{make_scenario, ScenarioName};
//!
//! let mut cfg = make_scenario(ScenarioName::SemiDegenerateUphill).cfg;
//! cfg.t_end = 1e-3;
//! let result = ms_transport::run(&cfg).unwrap();
//! assert!(result.audit.passed());
//! ```

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod error;
pub mod exec;
pub mod grid;
pub mod linalg;
pub mod msflux;
pub mod operators;
pub mod params;
pub mod scenarios;
pub mod splitting;
pub mod state;

pub use error::{Error, Result, Stage};
pub use exec::Execution;
pub use grid::Grid1D;
pub use params::{
    stable_dt, DiffusionCoefficients, DtPolicy, InitialCondition, OutputSpec, ReactionMatrix,
    ScenarioConfig, SpeciesOrder, Splitting,
};
pub use splitting::{
    iterative_step, lie_step, run, run_with, strang_step, InvariantAudit, RunResult,
};
pub use state::{norm, Norm, SpeciesState};

//! Numerical core for spatial multi-species Lotka–Volterra competition.
//!
//! The crate is `no_std` (it needs `alloc`) and contains everything that is
//! pure computation:
//!
//! * [`model`]: parameters and the pointwise competition reaction term,
//! * [`grid`] and [`operator`]: the structured cell-centred finite-volume grid
//!   and the per-species diffusion operator built from face transmissibilities,
//! * [`solver`]: tridiagonal elimination and diagonally preconditioned
//!   conjugate gradients for the shifted SPD systems,
//! * [`integrator`]: the semi-implicit step (implicit diffusion, explicit
//!   reaction), equilibrium detection and survival classification,
//! * [`sweep`]: seeded Monte Carlo experiment protocols,
//! * [`stats`]: feature matrices, correlation, principal-factor extraction
//!   with varimax rotation and factor labelling.
//!
//! IO, threading and the command-line front end live in the `lvcomp` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod grid;
pub mod integrator;
pub mod linalg;
mod math;
pub mod model;
pub mod operator;
pub mod presets;
pub mod solver;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
pub use grid::{BoundaryCondition, BoundaryConfig, Grid, Scenario};
pub use integrator::{
    average_solution, classify_survival, run_to_equilibrium, step, FieldState, RunError,
    RunOptions, SimulationResult, Stepper, SurvivalCode,
};
pub use linalg::Matrix;
pub use model::{reaction, reaction_jacobian, ModelParams, SpeciesVector};
pub use operator::{assemble_operator, interior_transmissibility, DiffusionOperator, Stencil};
pub use solver::{solve_spd, PreparedSystem, ShiftedSystem, SolveMethod, SolveReport};
pub use stats::{
    build_features, correlation_matrix, extract_factors, label_factors, FactorLabel, FactorReport,
    FeatureGroup, FeatureMatrix,
};
pub use sweep::{
    run_single, run_sweep, sample_params, steps_map, survival_summary, DiffusionScale, Interval,
    SampledRun, StepsMap, SurvivalSummary, SweepBounds, SweepMode, SweepRecord, SweepSpec,
};

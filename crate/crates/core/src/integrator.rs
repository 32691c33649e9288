//! Semi-implicit time stepping, equilibrium detection and survival codes.
//!
//! One step solves, independently for every species `k`,
//!
//! ```text
//! (|K|/tau I + A_k) u_k = |K|/tau u_k_old + |K| f_k(u_old)
//! ```
//!
//! Diffusion is implicit, the reaction is evaluated on the previous time
//! layer, so the species decouple within a step.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::math;
use crate::model::{reaction_into, ModelParams, SpeciesVector};
use crate::operator::{assemble_operator, DiffusionOperator};
use crate::solver::{PreparedSystem, ShiftedSystem, DEFAULT_TOLERANCE};

/// Cell averages of all species at one time level, stored species-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    species: usize,
    cells: usize,
    values: Vec<f64>,
    step: usize,
    tau: f64,
}

impl FieldState {
    pub fn new(species: usize, cells: usize, values: Vec<f64>, tau: f64) -> Result<Self> {
        if values.len() != species * cells {
            return Err(Error::DimensionMismatch {
                what: "field values",
                expected: species * cells,
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "field state",
                alloc::format!("non-finite value {v}"),
            ));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("time step", "tau must be positive"));
        }
        Ok(FieldState {
            species,
            cells,
            values,
            step: 0,
            tau,
        })
    }

    /// Spatially constant initial state, `initial[k]` in every cell.
    pub fn uniform(grid: &Grid, initial: &[f64], tau: f64) -> Result<Self> {
        let cells = grid.cell_count();
        let values = initial
            .iter()
            .flat_map(|&u| core::iter::repeat_n(u, cells))
            .collect();
        Self::new(initial.len(), cells, values, tau)
    }

    pub fn species_count(&self) -> usize {
        self.species
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    pub fn species(&self, k: usize) -> &[f64] {
        &self.values[k * self.cells..(k + 1) * self.cells]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Step index `n`.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }

    /// Populations of every species in one cell.
    pub fn cell(&self, i: usize) -> SpeciesVector {
        SpeciesVector(
            (0..self.species)
                .map(|k| self.values[k * self.cells + i])
                .collect(),
        )
    }
}

/// Knobs for [`run_to_equilibrium`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub tau: f64,
    /// Stop once every domain average changes by less than this in one step.
    pub eps_stop: f64,
    pub max_steps: usize,
    /// Survival threshold on the final domain average.
    pub theta: f64,
    pub solver_tol: f64,
    /// Keep a full field every `n` steps in addition to the first and last.
    pub snapshot_stride: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tau: 1.0,
            eps_stop: 1e-5,
            max_steps: 200_000,
            theta: 0.01,
            solver_tol: DEFAULT_TOLERANCE,
            snapshot_stride: None,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid("tau", "must be positive"));
        }
        if !(self.eps_stop.is_finite() && self.eps_stop > 0.0) {
            return Err(Error::invalid("eps_stop", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::invalid("theta", "must be positive"));
        }
        if !(self.solver_tol.is_finite() && self.solver_tol > 0.0) {
            return Err(Error::invalid("solver_tol", "must be positive"));
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::invalid("snapshot_stride", "must be at least 1"));
        }
        Ok(())
    }
}

/// Bit string over species, species 1 first; bit `k` is set when species `k`
/// survived.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurvivalCode(Vec<bool>);

impl SurvivalCode {
    pub fn new(bits: Vec<bool>) -> Self {
        SurvivalCode(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn species_count(&self) -> usize {
        self.0.len()
    }

    pub fn survivors(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// All `2^M` codes in ascending binary order (`00, 01, 10, 11`).
    pub fn all(species: usize) -> Vec<SurvivalCode> {
        (0..(1usize << species))
            .map(|v| {
                SurvivalCode(
                    (0..species)
                        .map(|k| (v >> (species - 1 - k)) & 1 == 1)
                        .collect(),
                )
            })
            .collect()
    }
}

impl fmt::Display for SurvivalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for SurvivalCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("survival code", "empty"));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(
                    "survival code",
                    alloc::format!("`{s}` is not a bit string"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(SurvivalCode)
    }
}

/// Thresholds final domain averages: bit `k` is 1 iff `averages[k] >= theta`.
///
/// # Panics
/// If `theta` is not positive.
pub fn classify_survival(averages: &[f64], theta: f64) -> SurvivalCode {
    assert!(theta > 0.0, "survival threshold must be positive");
    SurvivalCode(averages.iter().map(|&u| u >= theta).collect())
}

/// Volume-weighted mean of every species over the domain.
pub fn average_solution(grid: &Grid, state: &FieldState) -> SpeciesVector {
    // cells share one volume, so |K| cancels
    debug_assert_eq!(grid.cell_count(), state.cell_count());
    let n = state.cell_count() as f64;
    SpeciesVector(
        (0..state.species_count())
            .map(|k| math::compensated_sum(state.species(k).iter().copied()) / n)
            .collect(),
    )
}

/// Advances states by one semi-implicit step with per-species systems
/// prepared once.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: ModelParams,
    volume: f64,
    tau: f64,
    systems: Vec<PreparedSystem>,
    rhs: Vec<f64>,
    cell_u: Vec<f64>,
    cell_f: Vec<f64>,
}

impl Stepper {
    /// Assembles one diffusion operator per species from `params.diffusion()`.
    pub fn new(params: &ModelParams, grid: &Grid, tau: f64, solver_tol: f64) -> Result<Self> {
        let operators = params
            .diffusion()
            .iter()
            .map(|&eps| assemble_operator(grid, eps))
            .collect::<Result<Vec<_>>>()?;
        Self::from_operators(params, grid, &operators, tau, solver_tol)
    }

    pub fn from_operators(
        params: &ModelParams,
        grid: &Grid,
        operators: &[DiffusionOperator],
        tau: f64,
        solver_tol: f64,
    ) -> Result<Self> {
        let m = params.species_count();
        if operators.len() != m {
            return Err(Error::DimensionMismatch {
                what: "operators",
                expected: m,
                found: operators.len(),
            });
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid("tau", "must be positive"));
        }
        let volume = grid.cell_volume();
        let n = grid.cell_count();
        let systems = operators
            .iter()
            .map(|op| {
                if op.size() != n {
                    return Err(Error::DimensionMismatch {
                        what: "operator size",
                        expected: n,
                        found: op.size(),
                    });
                }
                let system = ShiftedSystem::new(op, volume / tau);
                PreparedSystem::new(system, system.default_method(), solver_tol)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Stepper {
            params: params.clone(),
            volume,
            tau,
            systems,
            rhs: vec![0.0; m * n],
            cell_u: vec![0.0; m],
            cell_f: vec![0.0; m],
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Replaces `state` by the next time layer.
    pub fn advance(&mut self, state: &mut FieldState) -> Result<()> {
        let m = self.params.species_count();
        let n = self.systems.first().map_or(0, PreparedSystem::size);
        if state.species != m || state.cells != n {
            return Err(Error::DimensionMismatch {
                what: "field state",
                expected: m * n,
                found: state.species * state.cells,
            });
        }
        let shift = self.volume / self.tau;
        for i in 0..n {
            for k in 0..m {
                self.cell_u[k] = state.values[k * n + i];
            }
            reaction_into(&self.params, &self.cell_u, &mut self.cell_f);
            for k in 0..m {
                self.rhs[k * n + i] = shift * self.cell_u[k] + self.volume * self.cell_f[k];
            }
        }
        for (k, system) in self.systems.iter().enumerate() {
            let range = k * n..(k + 1) * n;
            system.solve(&self.rhs[range.clone()], &mut state.values[range])?;
        }
        state.step += 1;
        state.tau = self.tau;
        Ok(())
    }
}

/// One semi-implicit step from `state`, using its `tau`.
pub fn step(
    params: &ModelParams,
    grid: &Grid,
    operators: &[DiffusionOperator],
    state: &FieldState,
) -> Result<FieldState> {
    let mut stepper =
        Stepper::from_operators(params, grid, operators, state.tau, DEFAULT_TOLERANCE)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    /// Domain averages after every step, starting with the initial state.
    pub average_trajectory: Vec<SpeciesVector>,
    pub initial_state: FieldState,
    pub final_state: FieldState,
    /// Intermediate fields when a snapshot stride was requested.
    pub snapshots: Vec<FieldState>,
    /// Step at which the stopping test passed, or `max_steps` if it never did.
    pub steps_to_equilibrium: usize,
    pub converged: bool,
    pub survival_code: SurvivalCode,
}

impl SimulationResult {
    pub fn final_averages(&self) -> &SpeciesVector {
        self.average_trajectory
            .last()
            .expect("trajectory always holds the initial average")
    }
}

/// A run that could not continue. `partial` holds everything computed before
/// the failure, when the failure happened after stepping began.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub cause: Error,
    pub partial: Option<Box<SimulationResult>>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.partial {
            Some(p) => write!(
                f,
                "simulation failed after {} steps: {}",
                p.average_trajectory.len() - 1,
                self.cause
            ),
            None => write!(f, "simulation could not start: {}", self.cause),
        }
    }
}

impl core::error::Error for RunError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.cause)
    }
}

impl From<Error> for RunError {
    fn from(cause: Error) -> Self {
        RunError {
            cause,
            partial: None,
        }
    }
}

/// Steps until `max_k |avg_k(t_n) - avg_k(t_{n-1})| < eps_stop` or until
/// `max_steps` steps have been taken.
pub fn run_to_equilibrium(
    params: &ModelParams,
    grid: &Grid,
    initial: &FieldState,
    options: &RunOptions,
) -> core::result::Result<SimulationResult, RunError> {
    options.validate()?;
    let mut stepper = Stepper::new(params, grid, options.tau, options.solver_tol)?;
    let mut state = initial.clone();
    state.tau = options.tau;
    let initial_state = state.clone();

    let mut trajectory = vec![average_solution(grid, &state)];
    let mut snapshots = Vec::new();
    let mut converged = false;
    let mut steps = options.max_steps;

    for n in 1..=options.max_steps {
        if let Err(cause) = stepper.advance(&mut state) {
            let last = trajectory.last().expect("non-empty").clone();
            return Err(RunError {
                cause,
                partial: Some(Box::new(SimulationResult {
                    survival_code: classify_survival(&last, options.theta),
                    average_trajectory: trajectory,
                    initial_state,
                    final_state: state,
                    snapshots,
                    steps_to_equilibrium: n - 1,
                    converged: false,
                })),
            });
        }
        let avg = average_solution(grid, &state);
        let prev = trajectory.last().expect("non-empty");
        let change = avg
            .iter()
            .zip(prev.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        trajectory.push(avg);
        if options.snapshot_stride.is_some_and(|s| n % s == 0) {
            snapshots.push(state.clone());
        }
        if change < options.eps_stop {
            converged = true;
            steps = n;
            break;
        }
    }

    let survival_code = classify_survival(trajectory.last().expect("non-empty"), options.theta);
    Ok(SimulationResult {
        average_trajectory: trajectory,
        initial_state,
        final_state: state,
        snapshots,
        steps_to_equilibrium: steps,
        converged,
        survival_code,
    })
}

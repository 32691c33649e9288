//! Solvers for the shifted systems `(s I + A) x = b` of a semi-implicit step.
//!
//! With `s = |K| / tau > 0` and `A` a diffusion operator the system matrix is
//! a symmetric positive-definite M-matrix. 1D operators are tridiagonal and
//! are solved directly by forward elimination and back substitution; 2D
//! operators go through conjugate gradients with a diagonal preconditioner.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::operator::{DiffusionOperator, Stencil};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    TridiagonalDirect,
    IterativeSpd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub method: SolveMethod,
}

/// `shift * I + operator`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedSystem<'a> {
    pub operator: &'a DiffusionOperator,
    pub shift: f64,
}

impl<'a> ShiftedSystem<'a> {
    pub fn new(operator: &'a DiffusionOperator, shift: f64) -> Self {
        ShiftedSystem { operator, shift }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.operator.apply_shifted(self.shift, x, out);
    }

    pub fn default_method(&self) -> SolveMethod {
        match self.operator.stencil() {
            Stencil::Tridiagonal => SolveMethod::TridiagonalDirect,
            Stencil::FivePoint => SolveMethod::IterativeSpd,
        }
    }
}

/// Solves `(shift I + A) x = rhs` with the method matching the operator's
/// stencil, starting CG from zero.
pub fn solve_spd(
    system: ShiftedSystem<'_>,
    rhs: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolveReport)> {
    let prepared = PreparedSystem::new(system, system.default_method(), tol)?;
    let mut x = vec![0.0; rhs.len()];
    let report = prepared.solve(rhs, &mut x)?;
    Ok((x, report))
}

/// Like [`solve_spd`] but with an explicit method.
pub fn solve_spd_with(
    system: ShiftedSystem<'_>,
    method: SolveMethod,
    rhs: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, SolveReport)> {
    let prepared = PreparedSystem::new(system, method, tol)?;
    let mut x = vec![0.0; rhs.len()];
    let report = prepared.solve(rhs, &mut x)?;
    Ok((x, report))
}

/// A shifted system checked and factored once, then solved repeatedly.
#[derive(Debug, Clone)]
pub struct PreparedSystem {
    n: usize,
    tol: f64,
    operator: DiffusionOperator,
    shift: f64,
    kind: Prepared,
}

#[derive(Debug, Clone)]
enum Prepared {
    /// `sub` is the off-diagonal, `pivot` the eliminated diagonal and
    /// `ratio[i] = sub[i] / pivot[i]`.
    Tridiagonal {
        sub: Vec<f64>,
        pivot: Vec<f64>,
        ratio: Vec<f64>,
    },
    Iterative {
        inv_diag: Vec<f64>,
        max_iterations: usize,
    },
}

impl PreparedSystem {
    pub fn new(system: ShiftedSystem<'_>, method: SolveMethod, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::invalid("solver tolerance", "must be positive"));
        }
        let n = system.operator.size();
        let diag: Vec<f64> = system
            .operator
            .diagonal()
            .into_iter()
            .map(|d| d + system.shift)
            .collect();
        if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(Error::NonPositiveDiagonal { row, value });
        }
        let kind = match method {
            SolveMethod::TridiagonalDirect => {
                let (sub, _) = system.operator.tridiagonal_bands().ok_or_else(|| {
                    Error::invalid(
                        "solve method",
                        "direct elimination needs a tridiagonal operator",
                    )
                })?;
                let mut pivot = Vec::with_capacity(n);
                let mut ratio = Vec::with_capacity(n.saturating_sub(1));
                for i in 0..n {
                    let p = if i == 0 {
                        diag[0]
                    } else {
                        diag[i] - sub[i - 1] * ratio[i - 1]
                    };
                    if !(p > 0.0) {
                        return Err(Error::NonPositiveDiagonal { row: i, value: p });
                    }
                    pivot.push(p);
                    if i + 1 < n {
                        ratio.push(sub[i] / p);
                    }
                }
                Prepared::Tridiagonal { sub, pivot, ratio }
            }
            SolveMethod::IterativeSpd => Prepared::Iterative {
                inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
                max_iterations: 10 * n.max(1),
            },
        };
        Ok(PreparedSystem {
            n,
            tol,
            operator: system.operator.clone(),
            shift: system.shift,
            kind,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn method(&self) -> SolveMethod {
        match self.kind {
            Prepared::Tridiagonal { .. } => SolveMethod::TridiagonalDirect,
            Prepared::Iterative { .. } => SolveMethod::IterativeSpd,
        }
    }

    /// Solves into `x`. For the iterative method the incoming contents of `x`
    /// are the initial guess.
    pub fn solve(&self, rhs: &[f64], x: &mut [f64]) -> Result<SolveReport> {
        for (what, found) in [("right-hand side", rhs.len()), ("solution", x.len())] {
            if found != self.n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: self.n,
                    found,
                });
            }
        }
        let rhs_norm = norm(rhs);
        if rhs_norm == 0.0 {
            x.fill(0.0);
            return Ok(SolveReport {
                iterations: 0,
                final_relative_residual: 0.0,
                method: self.method(),
            });
        }
        match &self.kind {
            Prepared::Tridiagonal { sub, pivot, ratio } => {
                let n = self.n;
                x[0] = rhs[0] / pivot[0];
                for i in 1..n {
                    x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / pivot[i];
                }
                for i in (0..n.saturating_sub(1)).rev() {
                    x[i] -= ratio[i] * x[i + 1];
                }
                let mut r = vec![0.0; n];
                self.operator.apply_shifted(self.shift, x, &mut r);
                for (ri, bi) in r.iter_mut().zip(rhs) {
                    *ri = bi - *ri;
                }
                let report = SolveReport {
                    iterations: 1,
                    final_relative_residual: norm(&r) / rhs_norm,
                    method: SolveMethod::TridiagonalDirect,
                };
                if report.final_relative_residual > self.tol {
                    return Err(Error::NotConverged(report));
                }
                Ok(report)
            }
            Prepared::Iterative {
                inv_diag,
                max_iterations,
            } => self.pcg(rhs, rhs_norm, inv_diag, *max_iterations, x),
        }
    }

    fn pcg(
        &self,
        rhs: &[f64],
        rhs_norm: f64,
        inv_diag: &[f64],
        max_iterations: usize,
        x: &mut [f64],
    ) -> Result<SolveReport> {
        let n = self.n;
        let mut r = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut ap = vec![0.0; n];
        let mut iterations = 0;

        // restarts from the true residual whenever the recurrence claims convergence
        loop {
            self.operator.apply_shifted(self.shift, x, &mut r);
            for (ri, bi) in r.iter_mut().zip(rhs) {
                *ri = bi - *ri;
            }
            let mut residual = norm(&r) / rhs_norm;
            if residual <= self.tol {
                return Ok(SolveReport {
                    iterations,
                    final_relative_residual: residual,
                    method: SolveMethod::IterativeSpd,
                });
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
                p[i] = z[i];
            }
            let mut rz = dot(&r, &z);

            while residual > self.tol {
                if iterations == max_iterations {
                    return Err(Error::NotConverged(SolveReport {
                        iterations,
                        final_relative_residual: residual,
                        method: SolveMethod::IterativeSpd,
                    }));
                }
                self.operator.apply_shifted(self.shift, &p, &mut ap);
                let alpha = rz / dot(&p, &ap);
                for i in 0..n {
                    x[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
                for i in 0..n {
                    z[i] = r[i] * inv_diag[i];
                }
                let rz_next = dot(&r, &z);
                let beta = rz_next / rz;
                rz = rz_next;
                for i in 0..n {
                    p[i] = z[i] + beta * p[i];
                }
                iterations += 1;
                residual = norm(&r) / rhs_norm;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    math::sqrt(dot(a, a))
}

//! Finite-volume diffusion operator for one species.
//!
//! Row `i` of `A` encodes the net outflow from cell `i`:
//!
//! ```text
//! (A u)_i = sum_j T_ij (u_i - u_j) + T_i^b u_i
//! ```
//!
//! where `T_ij = eps |e| / h` couples neighbouring cells and `T_i^b` sums the
//! Dirichlet faces of cell `i`, each with the half-cell distance `h / 2` from
//! centre to face. Zero-flux faces contribute nothing.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{side, BoundaryCondition, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// 1D three-point coupling; the matrix is tridiagonal.
    Tridiagonal,
    /// 2D five-point coupling.
    FivePoint,
}

/// Symmetric sparse matrix in compressed-row form, columns sorted per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionOperator {
    n: usize,
    stencil: Stencil,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// `eps |e| / d` for a face between two cell centres (`d = h`).
pub fn interior_transmissibility(grid: &Grid, eps: f64) -> f64 {
    eps * grid.face_measure() / grid.h()
}

/// `eps |e| / (h/2)` for a Dirichlet boundary face.
pub fn boundary_transmissibility(grid: &Grid, eps: f64) -> f64 {
    eps * grid.face_measure() / (0.5 * grid.h())
}

/// Assembles the diffusion operator for diffusion coefficient `eps`.
pub fn assemble_operator(grid: &Grid, eps: f64) -> Result<DiffusionOperator> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("diffusion coefficient", "must be positive"));
    }
    let n_axis = grid.cells_per_axis();
    let n = grid.cell_count();
    let t = interior_transmissibility(grid, eps);
    let tb = boundary_transmissibility(grid, eps);
    let bc = grid.boundary();
    let dirichlet = |s: usize| bc.side(s) == BoundaryCondition::DirichletZero;

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    row_ptr.push(0);

    for i in 0..n {
        let (ix, iy) = grid.cell_coords(i);
        let mut diag = 0.0;
        // neighbours in ascending column order: below, left, (self), right, above
        let mut lower: [(usize, f64); 2] = [(0, 0.0); 2];
        let mut n_lower = 0;
        let mut upper: [(usize, f64); 2] = [(0, 0.0); 2];
        let mut n_upper = 0;

        if grid.dim() == 2 {
            if iy > 0 {
                lower[n_lower] = (i - n_axis, -t);
                n_lower += 1;
                diag += t;
            } else if dirichlet(side::BOTTOM) {
                diag += tb;
            }
        }
        if ix > 0 {
            lower[n_lower] = (i - 1, -t);
            n_lower += 1;
            diag += t;
        } else if dirichlet(side::LEFT) {
            diag += tb;
        }
        if ix + 1 < n_axis {
            upper[n_upper] = (i + 1, -t);
            n_upper += 1;
            diag += t;
        } else if dirichlet(side::RIGHT) {
            diag += tb;
        }
        if grid.dim() == 2 {
            if iy + 1 < n_axis {
                upper[n_upper] = (i + n_axis, -t);
                n_upper += 1;
                diag += t;
            } else if dirichlet(side::TOP) {
                diag += tb;
            }
        }

        for &(j, v) in &lower[..n_lower] {
            col_idx.push(j);
            values.push(v);
        }
        col_idx.push(i);
        values.push(diag);
        for &(j, v) in &upper[..n_upper] {
            col_idx.push(j);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }

    Ok(DiffusionOperator {
        n,
        stencil: if grid.dim() == 1 {
            Stencil::Tridiagonal
        } else {
            Stencil::FivePoint
        },
        row_ptr,
        col_idx,
        values,
    })
}

impl DiffusionOperator {
    /// Symmetric tridiagonal matrix from its sub-diagonal and main diagonal.
    pub fn from_tridiagonal(sub: &[f64], diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        if sub.len() + 1 != n.max(1) {
            return Err(Error::DimensionMismatch {
                what: "sub-diagonal",
                expected: n.saturating_sub(1),
                found: sub.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(3 * n);
        let mut values = Vec::with_capacity(3 * n);
        row_ptr.push(0);
        for i in 0..n {
            if i > 0 {
                col_idx.push(i - 1);
                values.push(sub[i - 1]);
            }
            col_idx.push(i);
            values.push(diag[i]);
            if i + 1 < n {
                col_idx.push(i + 1);
                values.push(sub[i]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(DiffusionOperator {
            n,
            stencil: Stencil::Tridiagonal,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `out = A x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    /// `out = (shift I + A) x`.
    pub fn apply_shifted(&self, shift: f64, x: &[f64], out: &mut [f64]) {
        self.apply(x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o += shift * xi;
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v).sum())
            .collect()
    }

    /// `u^T A u`.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        let mut au = alloc::vec![0.0; self.n];
        self.apply(u, &mut au);
        u.iter().zip(&au).map(|(a, b)| a * b).sum()
    }

    /// True when `A_ij == A_ji` bit-for-bit for every stored entry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Sub-diagonal and main diagonal of a tridiagonal operator. The
    /// super-diagonal equals the sub-diagonal by symmetry.
    pub fn tridiagonal_bands(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.stencil != Stencil::Tridiagonal {
            return None;
        }
        let sub = (1..self.n).map(|i| self.get(i, i - 1)).collect();
        Some((sub, self.diagonal()))
    }

    /// Dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> crate::linalg::Matrix {
        let mut m = crate::linalg::Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

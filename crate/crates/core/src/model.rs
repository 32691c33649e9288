//! Model parameters and the pointwise competition reaction.
//!
//! For species `k` the reaction is the logistic growth term minus the pairwise
//! competition losses,
//!
//! ```text
//! f_k(u) = r_k u_k (1 - u_k) - sum_{l != k} alpha_kl u_k u_l
//! ```
//!
//! with the carrying capacity normalised to one.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Growth rates, competition matrix and diffusion coefficients for `M` species.
///
/// Growth and competition entries are non-negative, diffusion coefficients are
/// strictly positive and the diagonal of the competition matrix is zero:
/// self-limitation is carried by the logistic term alone.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    growth: Vec<f64>,
    competition: Matrix,
    diffusion: Vec<f64>,
}

impl ModelParams {
    pub fn new(growth: Vec<f64>, competition: Matrix, diffusion: Vec<f64>) -> Result<Self> {
        let m = growth.len();
        if m == 0 {
            return Err(Error::invalid(
                "species count",
                "at least one species is required",
            ));
        }
        for (what, found) in [
            ("diffusion vector", diffusion.len()),
            ("competition rows", competition.rows()),
            ("competition columns", competition.cols()),
        ] {
            if found != m {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: m,
                    found,
                });
            }
        }
        for (k, &r) in growth.iter().enumerate() {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid("growth rate", format!("r_{} = {r}", k + 1)));
            }
        }
        for (k, &eps) in diffusion.iter().enumerate() {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::invalid(
                    "diffusion coefficient",
                    format!("eps_{} = {eps} must be positive", k + 1),
                ));
            }
        }
        for k in 0..m {
            for l in 0..m {
                let a = competition[(k, l)];
                if k == l && a != 0.0 {
                    return Err(Error::invalid(
                        "competition matrix",
                        format!("diagonal alpha_{0}{0} = {a} must be zero", k + 1),
                    ));
                }
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::invalid(
                        "competition matrix",
                        format!("alpha_{}{} = {a}", k + 1, l + 1),
                    ));
                }
            }
        }
        Ok(ModelParams {
            growth,
            competition,
            diffusion,
        })
    }

    /// Builds from the row-major off-diagonal entries `alpha_12, alpha_13, ...,
    /// alpha_21, alpha_23, ...`.
    pub fn from_off_diagonal(
        growth: Vec<f64>,
        off_diagonal: &[f64],
        diffusion: Vec<f64>,
    ) -> Result<Self> {
        let m = growth.len();
        let expected = m * m.saturating_sub(1);
        if off_diagonal.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "off-diagonal competition entries",
                expected,
                found: off_diagonal.len(),
            });
        }
        let mut competition = Matrix::zeros(m, m);
        let mut it = off_diagonal.iter();
        for k in 0..m {
            for l in 0..m {
                if k != l {
                    competition[(k, l)] = *it.next().expect("length checked");
                }
            }
        }
        Self::new(growth, competition, diffusion)
    }

    pub fn species_count(&self) -> usize {
        self.growth.len()
    }

    pub fn growth(&self) -> &[f64] {
        &self.growth
    }

    pub fn competition(&self) -> &Matrix {
        &self.competition
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    /// Row-major off-diagonal competition entries, the inverse of
    /// [`ModelParams::from_off_diagonal`].
    pub fn off_diagonal(&self) -> Vec<f64> {
        let m = self.species_count();
        let mut out = Vec::with_capacity(m * m.saturating_sub(1));
        for k in 0..m {
            for l in 0..m {
                if k != l {
                    out.push(self.competition[(k, l)]);
                }
            }
        }
        out
    }

    pub fn with_diffusion(&self, diffusion: Vec<f64>) -> Result<Self> {
        Self::new(self.growth.clone(), self.competition.clone(), diffusion)
    }

    /// Same model with every diffusion coefficient multiplied by `factor`.
    pub fn scale_diffusion(&self, factor: f64) -> Result<Self> {
        self.with_diffusion(self.diffusion.iter().map(|d| d * factor).collect())
    }

    /// Applies a species relabelling: new species `i` is old species `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let m = self.species_count();
        if perm.len() != m {
            return Err(Error::DimensionMismatch {
                what: "permutation",
                expected: m,
                found: perm.len(),
            });
        }
        let mut competition = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                competition[(i, j)] = self.competition[(perm[i], perm[j])];
            }
        }
        Self::new(
            perm.iter().map(|&p| self.growth[p]).collect(),
            competition,
            perm.iter().map(|&p| self.diffusion[p]).collect(),
        )
    }
}

/// Population of every species at one point (or one cell), as fractions of
/// the carrying capacity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpeciesVector(pub Vec<f64>);

impl SpeciesVector {
    pub fn uniform(species: usize, value: f64) -> Self {
        SpeciesVector(alloc::vec![value; species])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for SpeciesVector {
    fn from(v: Vec<f64>) -> Self {
        SpeciesVector(v)
    }
}

impl Deref for SpeciesVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for SpeciesVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

fn check_len(params: &ModelParams, u: &[f64]) -> Result<()> {
    if u.len() != params.species_count() {
        return Err(Error::DimensionMismatch {
            what: "species vector",
            expected: params.species_count(),
            found: u.len(),
        });
    }
    Ok(())
}

/// Evaluates the reaction term at one point.
pub fn reaction(params: &ModelParams, u: &SpeciesVector) -> Result<SpeciesVector> {
    check_len(params, u)?;
    let mut out = alloc::vec![0.0; u.len()];
    reaction_into(params, u, &mut out);
    Ok(SpeciesVector(out))
}

/// Unchecked kernel behind [`reaction`]; slices must have length `M`.
///
/// The competition product is formed as `alpha_kl * (u_k * u_l)` so that the
/// pair product is bitwise identical from either species' side.
#[inline]
pub(crate) fn reaction_into(params: &ModelParams, u: &[f64], out: &mut [f64]) {
    let m = u.len();
    for k in 0..m {
        let uk = u[k];
        let mut loss = 0.0;
        for l in 0..m {
            if l != k {
                loss += params.competition[(k, l)] * (uk * u[l]);
            }
        }
        out[k] = params.growth[k] * uk * (1.0 - uk) - loss;
    }
}

/// Jacobian `J_kl = df_k / du_l` of the reaction term.
pub fn reaction_jacobian(params: &ModelParams, u: &SpeciesVector) -> Result<Matrix> {
    check_len(params, u)?;
    let m = u.len();
    let a = &params.competition;
    let mut jac = Matrix::zeros(m, m);
    for k in 0..m {
        let loss_rate: f64 = (0..m).filter(|&l| l != k).map(|l| a[(k, l)] * u[l]).sum();
        jac[(k, k)] = params.growth[k] * (1.0 - 2.0 * u[k]) - loss_rate;
        for l in (0..m).filter(|&l| l != k) {
            jac[(k, l)] = -a[(k, l)] * u[k];
        }
    }
    Ok(jac)
}

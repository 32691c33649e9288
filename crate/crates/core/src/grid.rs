//! Structured cell-centred grids on `[0, L]^d`, `d = 1, 2`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    /// Population pinned to zero on the side.
    DirichletZero,
    /// No migration across the side.
    ZeroFlux,
}

/// Side indices into a [`BoundaryConfig`].
pub mod side {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;
    pub const BOTTOM: usize = 2;
    pub const TOP: usize = 3;
}

/// One condition per side, ordered left, right (and bottom, top in 2D).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryConfig {
    sides: Vec<BoundaryCondition>,
}

impl BoundaryConfig {
    pub fn new(sides: Vec<BoundaryCondition>) -> Result<Self> {
        if sides.len() != 2 && sides.len() != 4 {
            return Err(Error::invalid(
                "boundary config",
                "expected 2 sides (1D) or 4 sides (2D)",
            ));
        }
        Ok(BoundaryConfig { sides })
    }

    /// Both ends of the interval Dirichlet-zero.
    pub fn config_1d() -> Self {
        BoundaryConfig {
            sides: vec![BoundaryCondition::DirichletZero; 2],
        }
    }

    /// All four sides of the square Dirichlet-zero.
    pub fn config_2da() -> Self {
        BoundaryConfig {
            sides: vec![BoundaryCondition::DirichletZero; 4],
        }
    }

    /// Left/right Dirichlet-zero, top/bottom zero-flux.
    pub fn config_2db() -> Self {
        use BoundaryCondition::*;
        BoundaryConfig {
            sides: vec![DirichletZero, DirichletZero, ZeroFlux, ZeroFlux],
        }
    }

    pub fn all_zero_flux(dim: usize) -> Self {
        BoundaryConfig {
            sides: vec![BoundaryCondition::ZeroFlux; 2 * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.sides.len() / 2
    }

    pub fn side(&self, index: usize) -> BoundaryCondition {
        self.sides[index]
    }

    pub fn sides(&self) -> &[BoundaryCondition] {
        &self.sides
    }

    pub fn has_dirichlet(&self) -> bool {
        self.sides.contains(&BoundaryCondition::DirichletZero)
    }
}

/// The three domain/boundary setups used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// `[0,1]`, Dirichlet-zero at both ends.
    OneD,
    /// `[0,1]^2`, Dirichlet-zero on all sides.
    TwoDA,
    /// `[0,1]^2`, Dirichlet-zero left/right, zero-flux top/bottom.
    TwoDB,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::OneD, Scenario::TwoDA, Scenario::TwoDB];

    pub fn dim(self) -> usize {
        match self {
            Scenario::OneD => 1,
            Scenario::TwoDA | Scenario::TwoDB => 2,
        }
    }

    pub fn boundary(self) -> BoundaryConfig {
        match self {
            Scenario::OneD => BoundaryConfig::config_1d(),
            Scenario::TwoDA => BoundaryConfig::config_2da(),
            Scenario::TwoDB => BoundaryConfig::config_2db(),
        }
    }

    /// 100 cells in 1D, 25 x 25 in 2D.
    pub fn default_cells(self) -> usize {
        match self {
            Scenario::OneD => 100,
            Scenario::TwoDA | Scenario::TwoDB => 25,
        }
    }

    pub fn grid(self, cells_per_axis: usize, length: f64) -> Result<Grid> {
        Grid::new(self.dim(), cells_per_axis, length, self.boundary())
    }

    pub fn default_grid(self) -> Grid {
        self.grid(self.default_cells(), 1.0)
            .expect("default scenario grids are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::OneD => "1d",
            Scenario::TwoDA => "2da",
            Scenario::TwoDB => "2db",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1d" | "config_1d" => Ok(Scenario::OneD),
            "2da" | "2d(a)" | "config_2da" => Ok(Scenario::TwoDA),
            "2db" | "2d(b)" | "config_2db" => Ok(Scenario::TwoDB),
            _ => Err(Error::invalid(
                "scenario",
                alloc::format!("unknown scenario `{s}`"),
            )),
        }
    }
}

/// Uniform grid with `cells_per_axis` cells of width `h = length / cells_per_axis`
/// along each axis. Cells are numbered x-fastest: `index = iy * n + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    cells_per_axis: usize,
    length: f64,
    h: f64,
    boundary: BoundaryConfig,
}

impl Grid {
    pub fn new(
        dim: usize,
        cells_per_axis: usize,
        length: f64,
        boundary: BoundaryConfig,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::invalid("grid dimension", "must be 1 or 2"));
        }
        if cells_per_axis == 0 {
            return Err(Error::invalid("cells per axis", "must be at least 1"));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid("domain length", "must be positive"));
        }
        if boundary.dim() != dim {
            return Err(Error::DimensionMismatch {
                what: "boundary sides",
                expected: 2 * dim,
                found: boundary.sides().len(),
            });
        }
        Ok(Grid {
            dim,
            cells_per_axis,
            length,
            h: length / cells_per_axis as f64,
            boundary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> &BoundaryConfig {
        &self.boundary
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    /// `|K| = h^d`.
    pub fn cell_volume(&self) -> f64 {
        match self.dim {
            1 => self.h,
            _ => self.h * self.h,
        }
    }

    /// `|e|`: 1 in 1D, `h` in 2D.
    pub fn face_measure(&self) -> f64 {
        match self.dim {
            1 => 1.0,
            _ => self.h,
        }
    }

    pub fn domain_volume(&self) -> f64 {
        match self.dim {
            1 => self.length,
            _ => self.length * self.length,
        }
    }

    /// `(ix, iy)` for a flat cell index; `iy` is 0 in 1D.
    pub fn cell_coords(&self, index: usize) -> (usize, usize) {
        (index % self.cells_per_axis, index / self.cells_per_axis)
    }

    /// Cell centre `((ix + 1/2) h, (iy + 1/2) h)`; the second component is 0 in 1D.
    pub fn cell_center(&self, index: usize) -> (f64, f64) {
        let (ix, iy) = self.cell_coords(index);
        let x = (ix as f64 + 0.5) * self.h;
        let y = if self.dim == 2 {
            (iy as f64 + 0.5) * self.h
        } else {
            0.0
        };
        (x, y)
    }
}

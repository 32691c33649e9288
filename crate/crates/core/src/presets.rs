//! Named parameter sets for the two- and three-species survival scenarios.
//!
//! Diffusion entries are the `D` values; a run uses `eps = D` (regular) or
//! `eps = D / 10` (small).

use crate::linalg::Matrix;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// Number of species expected to survive under the reference setup.
    pub expected_survivors: usize,
    growth: &'static [f64],
    diffusion: &'static [f64],
    competition: &'static [&'static [f64]],
}

impl Preset {
    pub fn species_count(&self) -> usize {
        self.growth.len()
    }

    pub fn params(&self) -> ModelParams {
        let rows: alloc::vec::Vec<_> = self.competition.iter().map(|r| r.to_vec()).collect();
        ModelParams::new(
            self.growth.to_vec(),
            Matrix::from_rows(&rows).expect("preset rows are rectangular"),
            self.diffusion.to_vec(),
        )
        .expect("preset parameters are valid")
    }
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        name: "case-2sp-1",
        description: "two species, one survives",
        expected_survivors: 1,
        diffusion: &[0.035, 0.014],
        growth: &[0.074, 0.084],
        competition: &[&[0.0, 0.074], &[0.013, 0.0]],
    },
    Preset {
        name: "case-2sp-2",
        description: "two species, both survive",
        expected_survivors: 2,
        diffusion: &[0.016, 0.014],
        growth: &[0.083, 0.081],
        competition: &[&[0.0, 0.053], &[0.049, 0.0]],
    },
    Preset {
        name: "case-3sp-1",
        description: "three species, one survives",
        expected_survivors: 1,
        diffusion: &[0.078, 0.087, 0.012],
        growth: &[0.050, 0.087, 0.041],
        competition: &[
            &[0.0, 0.048, 0.067],
            &[0.051, 0.0, 0.094],
            &[0.028, 0.041, 0.0],
        ],
    },
    Preset {
        name: "case-3sp-2",
        description: "three species, two survive",
        expected_survivors: 2,
        diffusion: &[0.022, 0.021, 0.063],
        growth: &[0.086, 0.091, 0.066],
        competition: &[
            &[0.0, 0.031, 0.045],
            &[0.051, 0.0, 0.019],
            &[0.058, 0.085, 0.0],
        ],
    },
    Preset {
        name: "case-3sp-3",
        description: "three species, all survive",
        expected_survivors: 3,
        diffusion: &[0.031, 0.027, 0.026],
        growth: &[0.098, 0.095, 0.078],
        competition: &[
            &[0.0, 0.055, 0.057],
            &[0.095, 0.0, 0.031],
            &[0.070, 0.022, 0.0],
        ],
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

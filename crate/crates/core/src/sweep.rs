//! Monte Carlo experiment protocols.
//!
//! Every run index owns its own ChaCha stream (`seed` selects the key, the
//! run index selects the stream), so a record depends only on
//! `(spec, run_index)` and never on execution order or worker count.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::grid::{Grid, Scenario};
use crate::integrator::{run_to_equilibrium, FieldState, RunOptions, SurvivalCode};
use crate::model::{ModelParams, SpeciesVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepMode {
    /// Diffusion coefficients drawn per run; growth, competition and initial
    /// populations held at the base values.
    RandomDiffusion,
    /// Initial populations drawn per run; all rates held fixed.
    RandomIc,
    /// Growth, diffusion, competition and initial populations all drawn.
    FullRandom,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::RandomDiffusion => "random-diffusion",
            SweepMode::RandomIc => "random-ic",
            SweepMode::FullRandom => "full-random",
        }
    }

    /// 1000 runs for the single-class sweeps, 10,000 for fully random ones.
    pub fn default_run_count(self) -> usize {
        match self {
            SweepMode::RandomDiffusion | SweepMode::RandomIc => 1000,
            SweepMode::FullRandom => 10_000,
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-diffusion" => Ok(SweepMode::RandomDiffusion),
            "random-ic" => Ok(SweepMode::RandomIc),
            "full-random" => Ok(SweepMode::FullRandom),
            _ => Err(Error::invalid("sweep mode", format!("unknown mode `{s}`"))),
        }
    }
}

/// `eps = D` (regular) or `eps = D / 10` (small).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DiffusionScale {
    #[default]
    Regular,
    Small,
}

impl DiffusionScale {
    pub fn factor(self) -> f64 {
        match self {
            DiffusionScale::Regular => 1.0,
            DiffusionScale::Small => 0.1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DiffusionScale::Regular => "regular",
            DiffusionScale::Small => "small",
        }
    }
}

impl fmt::Display for DiffusionScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiffusionScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(DiffusionScale::Regular),
            "small" => Ok(DiffusionScale::Small),
            _ => Err(Error::invalid(
                "diffusion scale",
                format!("unknown scale `{s}`"),
            )),
        }
    }
}

/// Open interval `(lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        let iv = Interval { lo, hi };
        iv.validate()?;
        Ok(iv)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::invalid(
                "sampling interval",
                format!("need lo < hi, got ({}, {})", self.lo, self.hi),
            ));
        }
        Ok(())
    }

    pub fn contains_open(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// Uniform draw on `[next_up(lo), next_down(hi)]`.
    pub fn sample(&self, rng: &mut impl RngCore) -> f64 {
        let lo = self.lo.next_up();
        let hi = self.hi.next_down();
        // 53 random mantissa bits -> [0, 1)
        let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (lo + (hi - lo) * unit).clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBounds {
    pub growth: Interval,
    pub competition: Interval,
    pub diffusion: Interval,
    pub initial: Interval,
}

impl Default for SweepBounds {
    fn default() -> Self {
        let rates = Interval { lo: 0.01, hi: 0.1 };
        SweepBounds {
            growth: rates,
            competition: rates,
            diffusion: rates,
            initial: Interval { lo: 0.01, hi: 0.99 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mode: SweepMode,
    /// Held-fixed rates. `diffusion()` holds `D`; the scale is applied per run.
    pub base_params: ModelParams,
    pub base_initial: SpeciesVector,
    pub bounds: SweepBounds,
    pub diffusion_scale: DiffusionScale,
    pub run_count: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub cells_per_axis: usize,
    pub length: f64,
    pub run: RunOptions,
}

impl SweepSpec {
    /// Spec with the standard bounds, grid, run count and `u0 = 0.5`.
    pub fn new(mode: SweepMode, base_params: ModelParams, scenario: Scenario) -> Self {
        let m = base_params.species_count();
        SweepSpec {
            mode,
            base_params,
            base_initial: SpeciesVector::uniform(m, 0.5),
            bounds: SweepBounds::default(),
            diffusion_scale: DiffusionScale::Regular,
            run_count: mode.default_run_count(),
            seed: 0,
            scenario,
            cells_per_axis: scenario.default_cells(),
            length: 1.0,
            run: RunOptions::default(),
        }
    }

    pub fn species_count(&self) -> usize {
        self.base_params.species_count()
    }

    pub fn grid(&self) -> Result<Grid> {
        self.scenario.grid(self.cells_per_axis, self.length)
    }

    pub fn validate(&self) -> Result<()> {
        for iv in [
            &self.bounds.growth,
            &self.bounds.competition,
            &self.bounds.diffusion,
            &self.bounds.initial,
        ] {
            iv.validate()?;
        }
        if self.bounds.diffusion.lo * self.diffusion_scale.factor() <= 0.0 {
            return Err(Error::invalid("diffusion bounds", "must be positive"));
        }
        if self.run_count == 0 {
            return Err(Error::invalid("run count", "must be at least 1"));
        }
        if self.base_initial.len() != self.species_count() {
            return Err(Error::DimensionMismatch {
                what: "base initial condition",
                expected: self.species_count(),
                found: self.base_initial.len(),
            });
        }
        self.grid()?;
        self.run.validate()
    }

    fn run_rng(&self, run_index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(run_index as u64);
        rng
    }
}

/// Parameters drawn for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRun {
    /// Model with the scaled diffusion `eps` in place.
    pub params: ModelParams,
    /// Unscaled `D`.
    pub raw_diffusion: Vec<f64>,
    pub initial: SpeciesVector,
}

/// Draws the free parameters of run `run_index`.
pub fn sample_params(spec: &SweepSpec, run_index: usize) -> Result<SampledRun> {
    let m = spec.species_count();
    let mut rng = spec.run_rng(run_index);
    let base = &spec.base_params;
    let b = &spec.bounds;
    let mut draw =
        |iv: &Interval, n: usize| -> Vec<f64> { (0..n).map(|_| iv.sample(&mut rng)).collect() };

    let (growth, raw_diffusion, off_diagonal, initial) = match spec.mode {
        SweepMode::RandomDiffusion => (
            base.growth().to_vec(),
            draw(&b.diffusion, m),
            base.off_diagonal(),
            spec.base_initial.to_vec(),
        ),
        SweepMode::RandomIc => (
            base.growth().to_vec(),
            base.diffusion().to_vec(),
            base.off_diagonal(),
            draw(&b.initial, m),
        ),
        SweepMode::FullRandom => {
            let growth = draw(&b.growth, m);
            let diffusion = draw(&b.diffusion, m);
            let off = draw(&b.competition, m * (m - 1));
            let initial = draw(&b.initial, m);
            (growth, diffusion, off, initial)
        }
    };
    let factor = spec.diffusion_scale.factor();
    let eps = raw_diffusion.iter().map(|d| d * factor).collect();
    let params = ModelParams::from_off_diagonal(growth, &off_diagonal, eps)?;
    Ok(SampledRun {
        params,
        raw_diffusion,
        initial: SpeciesVector(initial),
    })
}

/// Outcome of one sweep run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub run_index: usize,
    pub growth: Vec<f64>,
    /// Unscaled `D`.
    pub raw_diffusion: Vec<f64>,
    /// `eps` actually used.
    pub diffusion: Vec<f64>,
    /// Row-major off-diagonal competition entries.
    pub competition: Vec<f64>,
    pub initial: Vec<f64>,
    pub final_averages: Vec<f64>,
    pub survival_code: SurvivalCode,
    pub steps_to_equilibrium: usize,
    pub converged: bool,
}

impl SweepRecord {
    pub fn species_count(&self) -> usize {
        self.growth.len()
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::from_off_diagonal(
            self.growth.clone(),
            &self.competition,
            self.diffusion.clone(),
        )
    }

    /// `alpha_kl` for `k != l` (zero-based indices).
    pub fn alpha(&self, k: usize, l: usize) -> f64 {
        assert_ne!(k, l, "diagonal competition is not stored");
        let m = self.species_count();
        self.competition[k * (m - 1) + if l < k { l } else { l - 1 }]
    }

    /// Sampled and derived parameters as `(name, value)` pairs in a fixed
    /// order: `r_k`, `D_k`, `eps_k`, `a_kl`, `u0_k`.
    pub fn flat_params(&self) -> Vec<(String, f64)> {
        let m = self.species_count();
        let mut out = Vec::with_capacity(4 * m + m * m);
        for (k, &v) in self.growth.iter().enumerate() {
            out.push((format!("r{}", k + 1), v));
        }
        for (k, &v) in self.raw_diffusion.iter().enumerate() {
            out.push((format!("D{}", k + 1), v));
        }
        for (k, &v) in self.diffusion.iter().enumerate() {
            out.push((format!("eps{}", k + 1), v));
        }
        for (k, l) in off_diagonal_pairs(m) {
            out.push((format!("a{}{}", k + 1, l + 1), self.alpha(k, l)));
        }
        for (k, &v) in self.initial.iter().enumerate() {
            out.push((format!("u0_{}", k + 1), v));
        }
        out
    }
}

/// `(k, l)` pairs with `k != l` in row-major order.
pub fn off_diagonal_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |k| (0..m).filter(move |&l| l != k).map(move |l| (k, l)))
}

/// Samples and simulates run `run_index`. Simulation failures are recorded as
/// non-converged runs; only an invalid spec is an error.
pub fn run_single(spec: &SweepSpec, run_index: usize) -> Result<SweepRecord> {
    let sampled = sample_params(spec, run_index)?;
    let grid = spec.grid()?;
    let initial = FieldState::uniform(&grid, &sampled.initial, spec.run.tau)?;

    let (final_averages, survival_code, steps, converged) =
        match run_to_equilibrium(&sampled.params, &grid, &initial, &spec.run) {
            Ok(res) => (
                res.final_averages().to_vec(),
                res.survival_code,
                res.steps_to_equilibrium,
                res.converged,
            ),
            Err(err) => match err.partial {
                Some(p) => (
                    p.final_averages().to_vec(),
                    p.survival_code,
                    p.steps_to_equilibrium,
                    false,
                ),
                None => {
                    let code =
                        crate::integrator::classify_survival(&sampled.initial, spec.run.theta);
                    (sampled.initial.to_vec(), code, 0, false)
                }
            },
        };

    Ok(SweepRecord {
        run_index,
        growth: sampled.params.growth().to_vec(),
        raw_diffusion: sampled.raw_diffusion,
        diffusion: sampled.params.diffusion().to_vec(),
        competition: sampled.params.off_diagonal(),
        initial: sampled.initial.into_inner(),
        final_averages,
        survival_code,
        steps_to_equilibrium: steps,
        converged,
    })
}

/// Runs every index `0..run_count` sequentially.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    (0..spec.run_count).map(|i| run_single(spec, i)).collect()
}

/// Survival-code counts over converged runs; non-converged runs are counted
/// separately and excluded from the percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSummary {
    pub species: usize,
    /// Every code in ascending binary order with its count.
    pub counts: Vec<(SurvivalCode, usize)>,
    pub non_converged: usize,
    pub total: usize,
}

impl SurvivalSummary {
    pub fn converged(&self) -> usize {
        self.total - self.non_converged
    }

    pub fn count(&self, code: &SurvivalCode) -> usize {
        self.counts
            .iter()
            .find(|(c, _)| c == code)
            .map_or(0, |(_, n)| *n)
    }

    /// Fraction in `[0, 1]` of converged runs with `code`.
    pub fn fraction(&self, code: &SurvivalCode) -> f64 {
        match self.converged() {
            0 => 0.0,
            n => self.count(code) as f64 / n as f64,
        }
    }

    /// Percentages with two decimals that sum to exactly 100.00, by
    /// largest-remainder rounding of hundredths of a percent.
    pub fn rounded_percentages(&self) -> Vec<(SurvivalCode, usize, f64)> {
        let n = self.converged();
        if n == 0 {
            return self
                .counts
                .iter()
                .map(|(c, k)| (c.clone(), *k, 0.0))
                .collect();
        }
        let exact: Vec<f64> = self
            .counts
            .iter()
            .map(|(_, k)| *k as f64 * 10_000.0 / n as f64)
            .collect();
        let mut units: Vec<u64> = exact.iter().map(|e| *e as u64).collect();
        let assigned: u64 = units.iter().sum();
        let mut order: Vec<usize> = (0..exact.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - units[a] as f64;
            let rb = exact[b] - units[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order
            .iter()
            .take(10_000u64.saturating_sub(assigned) as usize)
        {
            units[i] += 1;
        }
        self.counts
            .iter()
            .zip(units)
            .map(|((c, k), u)| (c.clone(), *k, u as f64 / 100.0))
            .collect()
    }
}

pub fn survival_summary(records: &[SweepRecord]) -> Result<SurvivalSummary> {
    let first = records.first().ok_or(Error::Empty("sweep records"))?;
    let m = first.species_count();
    let mut counts: Vec<(SurvivalCode, usize)> =
        SurvivalCode::all(m).into_iter().map(|c| (c, 0)).collect();
    let mut non_converged = 0;
    for r in records {
        if r.species_count() != m {
            return Err(Error::DimensionMismatch {
                what: "record species count",
                expected: m,
                found: r.species_count(),
            });
        }
        if !r.converged {
            non_converged += 1;
            continue;
        }
        let slot = counts
            .iter_mut()
            .find(|(c, _)| *c == r.survival_code)
            .expect("every code of length M is enumerated");
        slot.1 += 1;
    }
    Ok(SurvivalSummary {
        species: m,
        counts,
        non_converged,
        total: records.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepsRow {
    pub run_index: usize,
    pub coords: Vec<f64>,
    pub steps: usize,
    pub survival_code: SurvivalCode,
    pub converged: bool,
}

/// Free-parameter coordinates of every run next to its step count.
#[derive(Debug, Clone, PartialEq)]
pub struct StepsMap {
    pub columns: Vec<String>,
    pub rows: Vec<StepsRow>,
}

pub fn steps_map(mode: SweepMode, records: &[SweepRecord]) -> Result<StepsMap> {
    let first = records.first().ok_or(Error::Empty("sweep records"))?;
    let free = |r: &SweepRecord| -> Vec<(String, f64)> {
        let flat = r.flat_params();
        flat.into_iter()
            .filter(|(name, _)| match mode {
                SweepMode::RandomDiffusion => name.starts_with('D'),
                SweepMode::RandomIc => name.starts_with("u0_"),
                SweepMode::FullRandom => !name.starts_with("eps"),
            })
            .collect()
    };
    let columns = free(first).into_iter().map(|(n, _)| n).collect();
    let rows = records
        .iter()
        .map(|r| StepsRow {
            run_index: r.run_index,
            coords: free(r).into_iter().map(|(_, v)| v).collect(),
            steps: r.steps_to_equilibrium,
            survival_code: r.survival_code.clone(),
            converged: r.converged,
        })
        .collect();
    Ok(StepsMap { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use alloc::vec;

    fn case(name: &str) -> ModelParams {
        presets::find(name).unwrap().params()
    }

    #[test]
    fn random_diffusion_keeps_rates() {
        let spec = SweepSpec::new(
            SweepMode::RandomDiffusion,
            case("case-2sp-1"),
            Scenario::OneD,
        );
        for i in 0..50 {
            let s = sample_params(&spec, i).unwrap();
            assert_eq!(s.params.growth(), &[0.074, 0.084]);
            assert_eq!(s.params.off_diagonal(), vec![0.074, 0.013]);
            assert!(s.raw_diffusion.iter().all(|&d| 0.01 < d && d < 0.1));
            assert_eq!(s.params.diffusion(), &s.raw_diffusion[..]);
            assert_eq!(s.initial.0, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn random_ic_keeps_rates() {
        let mut spec = SweepSpec::new(SweepMode::RandomIc, case("case-2sp-2"), Scenario::TwoDB);
        spec.diffusion_scale = DiffusionScale::Small;
        for i in 0..50 {
            let s = sample_params(&spec, i).unwrap();
            assert_eq!(s.raw_diffusion, vec![0.016, 0.014]);
            assert!((s.params.diffusion()[0] - 0.0016).abs() < 1e-18);
            assert!(s.initial.iter().all(|&u| 0.01 < u && u < 0.99));
        }
    }

    #[test]
    fn full_random_draws_everything_in_bounds() {
        let spec = SweepSpec::new(SweepMode::FullRandom, case("case-3sp-1"), Scenario::OneD);
        let b = spec.bounds;
        for i in 0..200 {
            let s = sample_params(&spec, i).unwrap();
            assert!(s.params.growth().iter().all(|&x| b.growth.contains_open(x)));
            assert!(s
                .raw_diffusion
                .iter()
                .all(|&x| b.diffusion.contains_open(x)));
            assert!(s
                .params
                .off_diagonal()
                .iter()
                .all(|&x| b.competition.contains_open(x)));
            assert!(s.initial.iter().all(|&x| b.initial.contains_open(x)));
        }
    }

    #[test]
    fn draws_are_deterministic_and_stream_separated() {
        let spec = SweepSpec::new(SweepMode::FullRandom, case("case-2sp-1"), Scenario::OneD);
        assert_eq!(
            sample_params(&spec, 7).unwrap(),
            sample_params(&spec, 7).unwrap()
        );
        assert_ne!(
            sample_params(&spec, 7).unwrap(),
            sample_params(&spec, 8).unwrap()
        );
        let mut other = spec.clone();
        other.seed = 1;
        assert_ne!(
            sample_params(&spec, 7).unwrap(),
            sample_params(&other, 7).unwrap()
        );
    }

    #[test]
    fn tight_interval_stays_inside() {
        let iv = Interval::new(0.5, 0.5f64.next_up().next_up()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert!(iv.contains_open(iv.sample(&mut rng)));
        }
        assert!(Interval::new(0.5, 0.5).is_err());
    }

    fn record(code: &str, converged: bool) -> SweepRecord {
        let code: SurvivalCode = code.parse().unwrap();
        let m = code.species_count();
        SweepRecord {
            run_index: 0,
            growth: vec![0.05; m],
            raw_diffusion: vec![0.02; m],
            diffusion: vec![0.02; m],
            competition: vec![0.03; m * (m - 1)],
            initial: vec![0.5; m],
            final_averages: vec![0.1; m],
            survival_code: code,
            steps_to_equilibrium: 10,
            converged,
        }
    }

    #[test]
    fn summary_quarters() {
        let recs: Vec<_> = ["00", "01", "10", "11"]
            .iter()
            .map(|c| record(c, true))
            .collect();
        let s = survival_summary(&recs).unwrap();
        for (code, _, pct) in s.rounded_percentages() {
            assert_eq!(pct, 25.0, "{code}");
        }
    }

    #[test]
    fn summary_single_code_and_non_converged() {
        let mut recs: Vec<_> = (0..5).map(|_| record("111", true)).collect();
        recs.push(record("000", false));
        let s = survival_summary(&recs).unwrap();
        assert_eq!(s.counts.len(), 8);
        assert_eq!(s.non_converged, 1);
        assert_eq!(s.converged(), 5);
        assert_eq!(s.fraction(&"111".parse().unwrap()), 1.0);
        assert_eq!(s.count(&"000".parse().unwrap()), 0);
        assert!(survival_summary(&[]).is_err());
    }

    #[test]
    fn rounded_percentages_sum_exactly() {
        let codes = ["000", "001", "010", "011", "100", "101", "110"];
        let recs: Vec<_> = codes.iter().map(|c| record(c, true)).collect();
        let s = survival_summary(&recs).unwrap();
        let total: f64 = s.rounded_percentages().iter().map(|(_, _, p)| p).sum();
        assert!((total - 100.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn steps_map_single_record() {
        let r = record("01", true);
        let map = steps_map(SweepMode::RandomDiffusion, core::slice::from_ref(&r)).unwrap();
        assert_eq!(map.columns, vec!["D1", "D2"]);
        assert_eq!(map.rows.len(), 1);
        assert_eq!(map.rows[0].coords, r.raw_diffusion);
        assert_eq!(map.rows[0].steps, 10);
        let ic = steps_map(SweepMode::RandomIc, core::slice::from_ref(&r)).unwrap();
        assert_eq!(ic.columns, vec!["u0_1", "u0_2"]);
        let full = steps_map(SweepMode::FullRandom, core::slice::from_ref(&r)).unwrap();
        assert_eq!(full.columns.len(), 2 + 2 + 2 + 2);
    }

    #[test]
    fn flat_params_order() {
        let r = record("101", true);
        let names: Vec<_> = r.flat_params().into_iter().map(|(n, _)| n).collect();
        assert_eq!(
            names,
            [
                "r1", "r2", "r3", "D1", "D2", "D3", "eps1", "eps2", "eps3", "a12", "a13", "a21",
                "a23", "a31", "a32", "u0_1", "u0_2", "u0_3"
            ]
        );
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = SweepSpec::new(SweepMode::FullRandom, case("case-2sp-1"), Scenario::OneD);
        spec.run_count = 0;
        assert!(run_sweep(&spec).is_err());
    }
}

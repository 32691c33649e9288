//! Flat `key = value` configuration shared by files and command-line flags.
//!
//! ```text
//! # two-species coexistence, 2D with insulated top and bottom
//! scenario = 2db
//! preset = case-2sp-2
//! tau = 1
//! ```
//!
//! Keys are case-sensitive; `-` and `_` are interchangeable. Matrices are
//! written row by row, rows separated by `;` and entries by `,`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use lvcomp_core::presets;
use lvcomp_core::{
    DiffusionScale, Matrix, ModelParams, RunOptions, Scenario, SpeciesVector, SweepMode, SweepSpec,
};
use thiserror::Error;

/// Every key the parser accepts, in echo order.
pub const KEYS: &[&str] = &[
    "scenario",
    "preset",
    "species",
    "growth",
    "diffusion",
    "competition",
    "initial",
    "grid",
    "length",
    "tau",
    "eps_stop",
    "theta",
    "max_steps",
    "diffusion_scale",
    "mode",
    "runs",
    "seed",
    "factors",
    "threads",
    "out",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

type Result<T, E = ConfigError> = std::result::Result<T, E>;

/// Canonical key name, or `None` if the key is not recognised.
pub fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim().replace('-', "_");
    KEYS.iter().copied().find(|c| *c == k)
}

/// Unvalidated key/value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<&'static str, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                text: content.to_string(),
            })?;
            let key_c = canonical_key(key).ok_or_else(|| ConfigError::UnknownKey {
                line: line_no,
                key: key.trim().to_string(),
            })?;
            if raw
                .entries
                .insert(key_c, value.trim().to_string())
                .is_some()
            {
                return Err(ConfigError::Duplicate {
                    line: line_no,
                    key: key_c.to_string(),
                });
            }
        }
        Ok(raw)
    }

    /// Sets `key`, replacing any earlier value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let k = canonical_key(key).ok_or_else(|| ConfigError::UnknownKey {
            line: 0,
            key: key.to_string(),
        })?;
        self.entries.insert(k, value.into());
        Ok(())
    }

    pub fn get(&self, key: &'static str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// `other` wins on conflicts.
    pub fn merge(&mut self, other: &RawConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k, v.clone());
        }
    }

    fn parsed<T: FromStr>(&self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Invalid {
                    key,
                    reason: format!("`{v}`: {e}"),
                })
            })
            .transpose()
    }

    fn floats(&self, key: &'static str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

/// Config key most likely responsible for a model validation error.
fn model_key(e: &lvcomp_core::Error) -> &'static str {
    let text = e.to_string();
    if text.contains("diffusion") {
        "diffusion"
    } else if text.contains("competition") {
        "competition"
    } else {
        "growth"
    }
}

fn parse_list(key: &'static str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| invalid(key, format!("`{t}` is not a number")))
        })
        .collect()
}

fn parse_matrix(key: &'static str, text: &str) -> Result<Matrix> {
    let rows = text
        .split(';')
        .map(|r| parse_list(key, r))
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(&rows).map_err(|e| invalid(key, e.to_string()))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn fmt_matrix(m: &Matrix) -> String {
    (0..m.rows())
        .map(|i| fmt_list(m.row(i)))
        .collect::<Vec<_>>()
        .join(";")
}

/// Settings common to single runs and sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub scenario: Scenario,
    pub preset: Option<&'static str>,
    /// Diffusion entries hold `D`; runs use `D` times the scale factor.
    pub params: ModelParams,
    pub initial: SpeciesVector,
    pub cells_per_axis: usize,
    pub length: f64,
    pub diffusion_scale: DiffusionScale,
    pub run: RunOptions,
    pub out: PathBuf,
}

fn model_config(raw: &RawConfig, allow_species_only: bool) -> Result<ModelConfig> {
    let scenario: Scenario = raw
        .parsed("scenario")?
        .ok_or(ConfigError::Missing("scenario"))?;

    let preset = match raw.get("preset") {
        Some(name) => Some(presets::find(name).ok_or_else(|| {
            let known: Vec<_> = presets::PRESETS.iter().map(|p| p.name).collect();
            invalid(
                "preset",
                format!("unknown preset `{name}`; known: {}", known.join(", ")),
            )
        })?),
        None => None,
    };
    let growth = raw.floats("growth")?;
    let diffusion = raw.floats("diffusion")?;
    let competition = raw
        .get("competition")
        .map(|v| parse_matrix("competition", v))
        .transpose()?;
    let species: Option<usize> = raw.parsed("species")?;

    let params = match (preset, growth, diffusion, competition) {
        (Some(p), None, None, None) => p.params(),
        (Some(_), ..) => {
            return Err(invalid(
                "preset",
                "cannot be combined with growth, diffusion or competition",
            ))
        }
        (None, Some(g), Some(d), Some(a)) => {
            ModelParams::new(g, a, d).map_err(|e| invalid(model_key(&e), e.to_string()))?
        }
        (None, None, None, None) if allow_species_only => {
            let m = species.ok_or(ConfigError::Missing("preset"))?;
            if m == 0 {
                return Err(invalid("species", "must be at least 1"));
            }
            // placeholder rates; a fully random sweep redraws all of them
            ModelParams::from_off_diagonal(vec![0.05; m], &vec![0.05; m * (m - 1)], vec![0.05; m])
                .map_err(|e| invalid("species", e.to_string()))?
        }
        (None, g, d, a) => {
            return Err(ConfigError::Missing(
                if g.is_none() && d.is_none() && a.is_none() {
                    "preset"
                } else if g.is_none() {
                    "growth"
                } else if d.is_none() {
                    "diffusion"
                } else {
                    "competition"
                },
            ));
        }
    };
    let m = params.species_count();
    if let Some(s) = species {
        if s != m {
            return Err(invalid(
                "species",
                format!("{s} does not match the model's {m} species"),
            ));
        }
    }

    let initial = match raw.floats("initial")? {
        Some(v) if v.len() == 1 => SpeciesVector::uniform(m, v[0]),
        Some(v) if v.len() == m => SpeciesVector(v),
        Some(v) => {
            return Err(invalid(
                "initial",
                format!("expected 1 or {m} values, got {}", v.len()),
            ))
        }
        None => SpeciesVector::uniform(m, 0.5),
    };
    if let Some(u) = initial.iter().find(|u| !(0.0..=1.0).contains(*u)) {
        return Err(invalid("initial", format!("{u} is outside [0, 1]")));
    }

    let cells_per_axis = raw.parsed("grid")?.unwrap_or(scenario.default_cells());
    if cells_per_axis == 0 {
        return Err(invalid("grid", "must be at least 1"));
    }
    let length: f64 = raw.parsed("length")?.unwrap_or(1.0);
    if !(length.is_finite() && length > 0.0) {
        return Err(invalid("length", "must be positive"));
    }

    let defaults = RunOptions::default();
    let run = RunOptions {
        tau: raw.parsed("tau")?.unwrap_or(defaults.tau),
        eps_stop: raw.parsed("eps_stop")?.unwrap_or(defaults.eps_stop),
        max_steps: raw.parsed("max_steps")?.unwrap_or(defaults.max_steps),
        theta: raw.parsed("theta")?.unwrap_or(defaults.theta),
        ..defaults
    };
    for (key, ok) in [
        ("tau", run.tau.is_finite() && run.tau > 0.0),
        ("eps_stop", run.eps_stop.is_finite() && run.eps_stop > 0.0),
        ("max_steps", run.max_steps >= 1),
        ("theta", run.theta.is_finite() && run.theta > 0.0),
    ] {
        if !ok {
            return Err(invalid(key, "out of range"));
        }
    }

    Ok(ModelConfig {
        scenario,
        preset: preset.map(|p| p.name),
        params,
        initial,
        cells_per_axis,
        length,
        diffusion_scale: raw.parsed("diffusion_scale")?.unwrap_or_default(),
        run,
        out: raw
            .get("out")
            .map_or_else(|| PathBuf::from("out"), PathBuf::from),
    })
}

impl ModelConfig {
    /// Parameters with the diffusion scale applied.
    pub fn scaled_params(&self) -> ModelParams {
        self.params
            .scale_diffusion(self.diffusion_scale.factor())
            .expect("scaling a valid model by a positive factor")
    }

    fn echo_into(&self, out: &mut BTreeMap<&'static str, String>) {
        out.insert("scenario", self.scenario.name().to_string());
        match self.preset {
            Some(p) => {
                out.insert("preset", p.to_string());
            }
            None => {
                out.insert("growth", fmt_list(self.params.growth()));
                out.insert("diffusion", fmt_list(self.params.diffusion()));
                out.insert("competition", fmt_matrix(self.params.competition()));
            }
        }
        out.insert("species", self.params.species_count().to_string());
        out.insert("initial", fmt_list(&self.initial));
        out.insert("grid", self.cells_per_axis.to_string());
        out.insert("length", fmt_f64(self.length));
        out.insert("tau", fmt_f64(self.run.tau));
        out.insert("eps_stop", fmt_f64(self.run.eps_stop));
        out.insert("theta", fmt_f64(self.run.theta));
        out.insert("max_steps", self.run.max_steps.to_string());
        out.insert("diffusion_scale", self.diffusion_scale.name().to_string());
        out.insert("out", self.out.display().to_string());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        for key in ["mode", "runs", "seed", "factors", "threads"] {
            if raw.get(key).is_some() {
                return Err(invalid(key, "only meaningful for sweeps"));
            }
        }
        Ok(RunConfig {
            model: model_config(raw, false)?,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn echo(&self) -> Echo {
        let mut e = BTreeMap::new();
        self.model.echo_into(&mut e);
        Echo(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: ModelConfig,
    pub mode: SweepMode,
    pub runs: usize,
    pub seed: u64,
    /// Factors to extract; `None` skips the factor analysis.
    pub factors: Option<usize>,
    /// Worker threads; `None` lets the pool decide.
    pub threads: Option<usize>,
}

/// Factor count matching the reference tables for two and three species.
pub fn default_factor_count(species: usize) -> Option<usize> {
    match species {
        2 => Some(4),
        3 => Some(7),
        _ => None,
    }
}

impl SweepConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mode: SweepMode = raw.parsed("mode")?.unwrap_or(SweepMode::FullRandom);
        let model = model_config(raw, mode == SweepMode::FullRandom)?;
        let runs = raw.parsed("runs")?.unwrap_or(mode.default_run_count());
        if runs == 0 {
            return Err(invalid("runs", "must be at least 1"));
        }
        let factors = match raw.parsed::<usize>("factors")? {
            Some(0) => return Err(invalid("factors", "must be at least 1")),
            Some(f) => Some(f),
            None if mode == SweepMode::FullRandom => {
                default_factor_count(model.params.species_count())
            }
            None => None,
        };
        if factors.is_some() && mode != SweepMode::FullRandom {
            return Err(invalid(
                "factors",
                "factor analysis needs a full-random sweep",
            ));
        }
        let threads = raw.parsed("threads")?;
        if threads == Some(0) {
            return Err(invalid("threads", "must be at least 1"));
        }
        Ok(SweepConfig {
            model,
            mode,
            runs,
            seed: raw.parsed("seed")?.unwrap_or(0),
            factors,
            threads,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn spec(&self) -> SweepSpec {
        let mut s = SweepSpec::new(self.mode, self.model.params.clone(), self.model.scenario);
        s.base_initial = self.model.initial.clone();
        s.diffusion_scale = self.model.diffusion_scale;
        s.run_count = self.runs;
        s.seed = self.seed;
        s.cells_per_axis = self.model.cells_per_axis;
        s.length = self.model.length;
        s.run = self.model.run;
        s
    }

    /// Thread count is left out: it never changes the results.
    pub fn echo(&self) -> Echo {
        let mut e = BTreeMap::new();
        self.model.echo_into(&mut e);
        if self.mode == SweepMode::FullRandom && self.model.preset.is_none() {
            e.remove("growth");
            e.remove("diffusion");
            e.remove("competition");
        }
        e.insert("mode", self.mode.name().to_string());
        e.insert("runs", self.runs.to_string());
        e.insert("seed", self.seed.to_string());
        if let Some(f) = self.factors {
            e.insert("factors", f.to_string());
        }
        Echo(e)
    }
}

/// Canonical settings that reproduce a run when parsed back.
#[derive(Debug, Clone, PartialEq)]
pub struct Echo(BTreeMap<&'static str, String>);

impl Echo {
    /// Entries in [`KEYS`] order.
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> + '_ {
        KEYS.iter()
            .filter_map(|k| self.0.get(k).map(|v| (*k, v.as_str())))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

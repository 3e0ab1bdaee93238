//! Experiment configuration: a single TOML document with stable key names.
//!
//! Schema (all keys lowercase unless noted):
//!
//! ```toml
//! master_seed = 42            # required; every random stream derives from it
//! trials = 1                  # Monte Carlo repetitions
//! period = 6                  # cycling period N (number of vertices)
//! data_length = 3000          # identification samples
//! validation_length = 1000    # noise-free validation samples
//! output_dir = "out"          # optional; CLI --out overrides
//!
//! [plant]                     # exactly one of `preset` / `matrices`
//! preset = "paper-true-plant"
//! # [plant.matrices]          # matrices as arrays of rows
//! # A = [[0.0, 1.0], [-0.5, 0.3]]
//! # B = [[1.0], [0.0]]
//! # C = [[1.0, 0.0]]
//! # D = [[0.0]]
//!
//! [input]                     # excitation (defaults to standard normal)
//! mean = 0.0
//! std_dev = 1.0
//!
//! [process_noise]
//! mean = 0.0
//! std_dev = 0.1
//!
//! [observation_noise]
//! mean = 0.0
//! std_dev = 0.05
//!
//! [identification]            # optional
//! # block_rows = 6            # omit for the default depth
//! rank_tolerance = 1e-8
//!
//! [pso]                       # optional; defaults shown
//! population = 50
//! max_iterations = 200
//! inertia = 0.7
//! cognitive = 2.0
//! social = 2.0
//! penalty_coefficient = 1e3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pso::PsoParams;
use crate::statespace::{reference_plant, StateSpaceModel, RANK_TOLERANCE};
use crate::subspace::IdentificationConfig;

/// Mean and standard deviation of one Gaussian noise source (seeds are
/// assigned by the harness).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub mean: f64,
    pub std_dev: f64,
}

impl NoiseParams {
    pub fn new(mean: f64, std_dev: f64) -> Self {
        Self { mean, std_dev }
    }

    pub fn standard_normal() -> Self {
        Self { mean: 0.0, std_dev: 1.0 }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !self.mean.is_finite() || !self.std_dev.is_finite() || self.std_dev < 0.0 {
            return Err(Error::Config(format!(
                "{name}: mean must be finite and std_dev nonnegative, got ({}, {})",
                self.mean, self.std_dev
            )));
        }
        Ok(())
    }
}

/// Plant selection: a named preset or explicit matrices (arrays of rows,
/// uppercase matrix keys matching the model document schema).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<PlantMatrices>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantMatrices {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

impl PlantSpec {
    pub fn preset(name: &str) -> Self {
        Self {
            preset: Some(name.to_string()),
            matrices: None,
        }
    }

    /// Resolves the spec into a concrete model.
    pub fn resolve(&self) -> Result<StateSpaceModel> {
        match (&self.preset, &self.matrices) {
            (Some(name), None) => match name.as_str() {
                "paper-true-plant" => Ok(reference_plant()),
                other => Err(Error::Config(format!("unknown plant preset {other:?}"))),
            },
            (None, Some(m)) => {
                let rows = m.a.len();
                if rows == 0 || m.a.iter().any(|r| r.len() != rows) {
                    return Err(Error::Config("plant matrix A must be square".into()));
                }
                let dims = |grid: &Vec<Vec<f64>>| (grid.len(), grid.first().map_or(0, Vec::len));
                let (n, _) = dims(&m.a);
                let (_, mm) = dims(&m.b);
                let (q, _) = dims(&m.c);
                let build = |grid: &Vec<Vec<f64>>, r: usize, c: usize, name: &str| {
                    if grid.len() != r || grid.iter().any(|row| row.len() != c) {
                        return Err(Error::Config(format!("plant matrix {name} must be {r}x{c}")));
                    }
                    Ok(nalgebra::DMatrix::from_row_iterator(
                        r,
                        c,
                        grid.iter().flatten().copied(),
                    ))
                };
                StateSpaceModel::new(
                    build(&m.a, n, n, "A")?,
                    build(&m.b, n, mm, "B")?,
                    build(&m.c, q, n, "C")?,
                    build(&m.d, q, mm, "D")?,
                )
                .map_err(|e| Error::Config(format!("invalid plant matrices: {e}")))
            }
            _ => Err(Error::Config(
                "plant must specify exactly one of `preset` or `matrices`".into(),
            )),
        }
    }
}

/// Subspace identification settings; `block_rows = None` selects the default
/// depth for the cycled order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentificationParams {
    pub block_rows: Option<usize>,
    pub rank_tolerance: f64,
}

impl Default for IdentificationParams {
    fn default() -> Self {
        Self {
            block_rows: None,
            rank_tolerance: RANK_TOLERANCE,
        }
    }
}

impl IdentificationParams {
    /// Concrete configuration for an identification at `order` with
    /// `output_dim` outputs.
    pub fn to_config(&self, order: usize, output_dim: usize) -> IdentificationConfig {
        let mut config = IdentificationConfig::for_order(order, output_dim);
        if let Some(rows) = self.block_rows {
            config.block_rows = rows;
        }
        config.rank_tolerance = self.rank_tolerance;
        config
    }
}

/// Swarm settings without a seed; the harness derives the seed per trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PsoSettings {
    pub population: usize,
    pub max_iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub penalty_coefficient: f64,
}

impl Default for PsoSettings {
    fn default() -> Self {
        let p = PsoParams::new(0);
        Self {
            population: p.population,
            max_iterations: p.max_iterations,
            inertia: p.inertia,
            cognitive: p.cognitive,
            social: p.social,
            penalty_coefficient: p.penalty_coefficient,
        }
    }
}

impl PsoSettings {
    pub fn to_params(&self, seed: u64) -> PsoParams {
        PsoParams {
            population: self.population,
            max_iterations: self.max_iterations,
            inertia: self.inertia,
            cognitive: self.cognitive,
            social: self.social,
            penalty_coefficient: self.penalty_coefficient,
            seed,
        }
    }
}

fn default_trials() -> usize {
    1
}

fn default_validation_length() -> usize {
    1000
}

/// One experiment description; see the module docs for the TOML schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub period: usize,
    pub data_length: usize,
    #[serde(default = "default_validation_length")]
    pub validation_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub plant: PlantSpec,
    #[serde(default = "NoiseParams::standard_normal")]
    pub input: NoiseParams,
    pub process_noise: NoiseParams,
    pub observation_noise: NoiseParams,
    #[serde(default)]
    pub identification: IdentificationParams,
    #[serde(default)]
    pub pso: PsoSettings,
}

impl ExperimentConfig {
    /// The reference study setup: built-in plant, period 6, 3000 samples,
    /// high noise, paper swarm settings.
    pub fn reference(master_seed: u64) -> Self {
        Self {
            master_seed,
            trials: 1,
            period: 6,
            data_length: 3000,
            validation_length: 1000,
            output_dir: None,
            plant: PlantSpec::preset("paper-true-plant"),
            input: NoiseParams::standard_normal(),
            process_noise: NoiseParams::new(0.0, 0.1),
            observation_noise: NoiseParams::new(0.0, 0.05),
            identification: IdentificationParams::default(),
            pso: PsoSettings::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("TOML write: {e}")))
    }

    /// Full validation, including the minimum data length demanded by the
    /// identification settings at the cycled order.
    pub fn validate(&self) -> Result<()> {
        if self.period == 0 {
            return Err(Error::Config("period must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.validation_length < 2 {
            return Err(Error::Config("validation_length must be at least 2".into()));
        }
        self.input.validate("input")?;
        self.process_noise.validate("process_noise")?;
        self.observation_noise.validate("observation_noise")?;
        let plant = self.plant.resolve()?;
        let min = self.min_data_length_for(&plant, self.period)?;
        if self.data_length < min {
            return Err(Error::Config(format!(
                "data_length {} is below the minimum {} required by the identification settings",
                self.data_length, min
            )));
        }
        self.pso
            .to_params(0)
            .validate()
            .map_err(|e| Error::Config(format!("pso: {e}")))?;
        Ok(())
    }

    /// Minimum data length for identifying the period-`N` lift of `plant`
    /// under these identification settings (also covers the conventional
    /// baseline, which never needs more).
    pub fn min_data_length_for(&self, plant: &StateSpaceModel, period: usize) -> Result<usize> {
        let (n, m, q) = (plant.order(), plant.input_dim(), plant.output_dim());
        let cycled = self.identification.to_config(period * n, period * q);
        cycled.validate(period * q).map_err(|e| {
            Error::Config(format!("identification settings invalid at period {period}: {e}"))
        })?;
        let conventional = IdentificationConfig::for_order(n, q);
        Ok(cycled
            .min_samples(period * m, period * q)
            .max(conventional.min_samples(m, q)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        master_seed = 42
        period = 6
        data_length = 3000

        [plant]
        preset = "paper-true-plant"

        [process_noise]
        mean = 0.0
        std_dev = 0.1

        [observation_noise]
        mean = 0.0
        std_dev = 0.05
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(config.master_seed, 42);
        assert_eq!(config.trials, 1);
        assert_eq!(config.validation_length, 1000);
        assert_eq!(config.input, NoiseParams::standard_normal());
        assert_eq!(config.pso.population, 50);
        assert_eq!(config.pso.max_iterations, 200);
        assert_eq!(config.pso.inertia, 0.7);
    }

    #[test]
    fn missing_master_seed_is_rejected() {
        let text = MINIMAL.replace("master_seed = 42", "");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&text),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn short_data_length_is_rejected_before_running() {
        let text = MINIMAL.replace("data_length = 3000", "data_length = 100");
        let err = ExperimentConfig::from_toml_str(&text);
        match err {
            Err(Error::Config(msg)) => assert!(msg.contains("minimum"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn explicit_matrices_resolve() {
        let text = r#"
            master_seed = 1
            period = 2
            data_length = 500

            [plant.matrices]
            A = [[0.5]]
            B = [[1.0]]
            C = [[1.0]]
            D = [[0.0]]

            [process_noise]
            mean = 0.0
            std_dev = 0.0

            [observation_noise]
            mean = 0.0
            std_dev = 0.0
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let plant = config.plant.resolve().unwrap();
        assert_eq!(plant.order(), 1);
    }

    #[test]
    fn unknown_preset_and_ambiguous_plant_are_rejected() {
        assert!(PlantSpec::preset("no-such-plant").resolve().is_err());
        assert!(PlantSpec::default().resolve().is_err());
    }

    #[test]
    fn reference_config_is_valid_and_round_trips() {
        let config = ExperimentConfig::reference(7);
        config.validate().unwrap();
        let text = config.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(config, back);
    }
}

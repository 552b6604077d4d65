//! TOML experiment configuration.
//!
//! Every table rejects unknown keys. The `[experiment]` table is kept as raw
//! TOML and decoded by the subcommand that runs, so each subcommand has its own
//! strict schema.

use std::path::PathBuf;

use harnacklab_core::solutions::Catalog;
use harnacklab_core::{EllipticityParams, Grid, OperatorKind, OperatorSpec, SpatialGrid};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand this file was written for; checked when present.
    pub kind: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    pub params: Option<EllipticityParams>,
    pub grid: Option<GridConfig>,
    pub operator: Option<OperatorConfig>,
    pub solution: Option<Catalog>,
    /// Members measured together, e.g. by the propagation harness.
    pub family: Option<Vec<Catalog>>,
    #[serde(default)]
    pub experiment: toml::Table,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub dx: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl GridConfig {
    pub fn space(&self) -> Result<SpatialGrid, CliError> {
        Ok(SpatialGrid::new(&self.center, &self.half_width, self.dx)?)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.space()?, self.t_start, self.t_end, self.dt)?)
    }

    /// Output slices of a run from `t_start` to `t_end` spaced by `dt`.
    pub fn n_out(&self) -> Result<usize, CliError> {
        let steps = (self.t_end - self.t_start) / self.dt;
        let rounded = steps.round();
        if !(rounded >= 1.0) || (steps - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(CliError::Validation(format!(
                "grid: (t_end - t_start) / dt must be a positive integer, got {steps}"
            )));
        }
        Ok(rounded as usize + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    PucciMinus,
    PucciPlus,
    Model,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub kind: OperatorName,
    /// Exponent of the model operator.
    pub q: Option<f64>,
    /// Gradient regularization.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    1e-3
}

impl OperatorConfig {
    pub fn spec(&self, params: EllipticityParams) -> Result<OperatorSpec, CliError> {
        let kind = match (self.kind, self.q) {
            (OperatorName::PucciMinus, None) => OperatorKind::PucciMinus,
            (OperatorName::PucciPlus, None) => OperatorKind::PucciPlus,
            (OperatorName::Model, Some(q)) => OperatorKind::Model { q },
            (OperatorName::Model, None) => {
                return Err(CliError::Validation("operator: the model operator needs q".into()))
            }
            (_, Some(_)) => {
                return Err(CliError::Validation("operator: q applies only to kind = \"model\"".into()))
            }
        };
        Ok(OperatorSpec::new(kind, params, self.delta)?)
    }
}

fn missing(table: &str) -> CliError {
    CliError::Validation(format!("config is missing the [{table}] table"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {}", e.message())))
    }

    pub fn check_kind(&self, command: &str) -> Result<(), CliError> {
        match &self.kind {
            Some(kind) if kind != command => Err(CliError::Validation(format!(
                "config was written for `{kind}` but the command is `{command}`"
            ))),
            _ => Ok(()),
        }
    }

    pub fn params(&self) -> Result<EllipticityParams, CliError> {
        self.params.ok_or_else(|| missing("params"))
    }

    pub fn grid(&self) -> Result<&GridConfig, CliError> {
        self.grid.as_ref().ok_or_else(|| missing("grid"))
    }

    pub fn operator(&self) -> Result<OperatorSpec, CliError> {
        self.operator.as_ref().ok_or_else(|| missing("operator"))?.spec(self.params()?)
    }

    pub fn solution(&self) -> Result<&Catalog, CliError> {
        self.solution.as_ref().ok_or_else(|| missing("solution"))
    }

    /// Decodes `[experiment]` into the subcommand's own schema.
    pub fn experiment<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        T::deserialize(toml::Value::Table(self.experiment.clone()))
            .map_err(|e| CliError::Validation(format!("[experiment]: {}", e.message())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let err = ExperimentConfig::parse("seed = 1\ncolour = 2\n").unwrap_err();
        assert!(matches!(err, CliError::Validation(m) if m.contains("colour")));
    }

    #[test]
    fn params_are_validated_while_parsing() {
        let err = ExperimentConfig::parse("[params]\nlambda = 2.0\nLambda = 1.0\np = 3.0\nn = 1\n").unwrap_err();
        assert!(matches!(err, CliError::Validation(m) if m.contains("EllipticityParams")));
    }

    #[test]
    fn n_out_needs_whole_steps() {
        let g = GridConfig { center: vec![0.0], half_width: vec![1.0], dx: 0.1, t_start: 0.0, t_end: 1.0, dt: 0.25 };
        assert_eq!(g.n_out().unwrap(), 5);
        let g = GridConfig { dt: 0.3, ..g };
        assert!(g.n_out().is_err());
    }

    #[test]
    fn model_operator_requires_q() {
        let prm = EllipticityParams::new(1.0, 1.0, 3.0, 1).unwrap();
        let op = OperatorConfig { kind: OperatorName::Model, q: None, delta: 1e-3 };
        assert!(op.spec(prm).is_err());
        let op = OperatorConfig { kind: OperatorName::PucciMinus, q: Some(2.0), delta: 1e-3 };
        assert!(op.spec(prm).is_err());
    }
}

//! Model-kind dispatch over the forest and the booster.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boost::{fit_gbt, GbtConfig, GbtModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::explain::{OutputSpace, TreeEnsemble};
use crate::forest::{fit_forest, ForestConfig, ForestModel};
use crate::json::{self, Versioned};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Gbt,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Forest, ModelKind::Gbt];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Gbt => "gbt",
        }
    }

    pub fn default_config(self, seed: u64) -> ModelConfig {
        match self {
            ModelKind::Forest => ModelConfig::Forest(ForestConfig { seed, ..Default::default() }),
            ModelKind::Gbt => ModelConfig::Gbt(GbtConfig { seed, ..Default::default() }),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" | "rf" => Ok(ModelKind::Forest),
            "gbt" | "xgb" => Ok(ModelKind::Gbt),
            other => Err(Error::param(format!("unknown model kind `{other}` (expected forest or gbt)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Forest(ForestConfig),
    Gbt(GbtConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Forest(_) => ModelKind::Forest,
            ModelConfig::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ModelConfig::Forest(c) => c.seed,
            ModelConfig::Gbt(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Forest(c) => c.seed = seed,
            ModelConfig::Gbt(c) => c.seed = seed,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Forest(c) => c.validate(),
            ModelConfig::Gbt(c) => c.validate(),
        }
    }

    pub fn fit(&self, train: &Dataset) -> Result<Model> {
        Ok(match self {
            ModelConfig::Forest(c) => Model::Forest(fit_forest(train, c)?),
            ModelConfig::Gbt(c) => Model::Gbt(fit_gbt(train, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Gbt(GbtModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Forest(_) => ModelKind::Forest,
            Model::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Forest(m) => m.predict_proba(row),
            Model::Gbt(m) => m.predict_proba(row),
        }
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        match self {
            Model::Forest(m) => m.predict(rows),
            Model::Gbt(m) => m.predict(rows),
        }
    }

    pub fn ensemble(&self) -> &dyn TreeEnsemble {
        match self {
            Model::Forest(m) => m,
            Model::Gbt(m) => m,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        match self {
            Model::Forest(m) => json::to_json(m),
            Model::Gbt(m) => json::to_json(m),
        }
    }

    /// Reads either model kind, dispatching on the document's format tag.
    pub fn from_json(text: &str) -> Result<Self> {
        let (format, found_version) = json::peek_format(text)?;
        match format.as_str() {
            ForestModel::FORMAT => Ok(Model::Forest(json::from_json(text)?)),
            GbtModel::FORMAT => Ok(Model::Gbt(json::from_json(text)?)),
            _ => Err(Error::Format {
                expected: format!("{} or {}", ForestModel::FORMAT, GbtModel::FORMAT),
                version: 1,
                found: format,
                found_version,
            }),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&json::read_text(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        json::write_text(path, &(self.to_json()? + "\n"))
    }

    pub fn output_space(&self) -> OutputSpace {
        self.ensemble().output_space()
    }
}

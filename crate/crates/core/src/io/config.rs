//! JSON run configuration.
//!
//! Every field is optional; missing fields take the defaults of the standard
//! setup and unknown fields are rejected.
//!
//! ```json
//! {
//!   "experiment": { "seed": 7, "train_samples": 30000 },
//!   "model": { "width": 32, "n_layers": 4, "modes": 12, "projection_hidden": 64 },
//!   "train": { "learning_rate": 0.0008, "steps": 2500, "batch_size": 12 }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiments::{ExperimentPlan, ModelConfig};
use crate::fno::{InputEncoding, TrainConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: ExperimentPlan,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.train.validate()?;
        self.model
            .fno_config(InputEncoding::BoundaryAware)
            .validate_for_grid(self.experiment.grid_n)
    }
}

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

/// Which inputs the operator sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputEncoding {
    /// `f, x, y, bc_value, dirichlet_mask, neumann_mask`.
    BoundaryAware,
    /// `f, x, y`.
    Ablated,
}

impl InputEncoding {
    pub fn channels(self) -> usize {
        match self {
            InputEncoding::BoundaryAware => 6,
            InputEncoding::Ablated => 3,
        }
    }

    pub fn from_channels(c: usize) -> Result<Self> {
        match c {
            6 => Ok(InputEncoding::BoundaryAware),
            3 => Ok(InputEncoding::Ablated),
            other => Err(LabError::InvalidConfig(format!(
                "in_channels must be 3 or 6, found {other}"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InputEncoding::BoundaryAware => "aware",
            InputEncoding::Ablated => "ablated",
        }
    }
}

/// Architecture hyperparameters. GELU is the only activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnoConfig {
    pub in_channels: usize,
    pub width: usize,
    pub n_layers: usize,
    /// Retained Fourier modes per axis and per sign; each layer keeps the four
    /// `modes × modes` corner blocks of the 2-D spectrum.
    pub modes: usize,
    pub projection_hidden: usize,
}

impl FnoConfig {
    /// 4 layers, width 32, 12 modes, projection width 64.
    pub fn standard(encoding: InputEncoding) -> Self {
        FnoConfig {
            in_channels: encoding.channels(),
            width: 32,
            n_layers: 4,
            modes: 12,
            projection_hidden: 64,
        }
    }

    pub fn encoding(&self) -> Result<InputEncoding> {
        InputEncoding::from_channels(self.in_channels)
    }

    pub fn validate(&self) -> Result<()> {
        InputEncoding::from_channels(self.in_channels)?;
        if self.width == 0 || self.n_layers == 0 || self.modes == 0 || self.projection_hidden == 0 {
            return Err(LabError::InvalidConfig(
                "width, n_layers, modes and projection_hidden must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Checks the mode count against a grid size (`modes ≤ ⌊n/2⌋`).
    pub fn validate_for_grid(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.modes > n / 2 {
            return Err(LabError::InvalidConfig(format!(
                "modes {} exceeds n/2 = {} for n = {n}",
                self.modes,
                n / 2
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash_hex(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex_digest(&json)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Held-out relative L² is logged every this many steps (and at the end).
    pub holdout_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 8e-4,
            steps: 2500,
            batch_size: 12,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 7,
            holdout_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(LabError::InvalidConfig(msg.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0) || !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0) {
            return bad("adam betas must lie in (0, 1)");
        }
        if !(self.adam_eps >= 0.0 && self.adam_eps.is_finite()) {
            return bad("adam_eps must be finite and >= 0");
        }
        if self.holdout_every == 0 {
            return bad("holdout_every must be >= 1");
        }
        Ok(())
    }
}

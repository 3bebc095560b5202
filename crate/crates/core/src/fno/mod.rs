//! A small Fourier neural operator with hand-written reverse-mode gradients.
//!
//! Layout conventions used throughout the submodules: a batch of `B`
//! multichannel fields on `P = n²` nodes is one row-major matrix with a row per
//! channel and `B·P` columns (`[C][B][P]`). Pointwise linear maps are then a
//! single GEMM over the whole batch.

mod adam;
mod config;
mod encode;
mod model;
mod network;
mod real;
mod spectral;
mod train;

pub use adam::{adam_step, AdamState};
pub use config::{FnoConfig, InputEncoding, TrainConfig};
pub use encode::{encode_input, MultiField};
pub use model::{FnoModel, Gradients, ParamArray};
pub use network::{gelu, gelu_grad};
pub use real::Real;
pub use spectral::SpectralPlan;
pub use train::{train, train_with, BatchSchedule, TrainingLog, TrainingLogRow, TrainingSample};

//! Hinge ranking loss over sliding windows with uniform negative sampling,
//! Adam updates and early stopping on validation loss.

mod history;
mod sampling;
mod trainer;

pub use history::{read_history, write_history, EarlyStopping, EpochRecord, TrainHistory};
pub use sampling::sample_negatives;
pub use trainer::{
    batch_loss, hinge, prepare_batch, train, validation_loss, PreparedBatch, TrainConfig,
    TrainOutcome,
};

use thiserror::Error;

use crate::autograd::AutogradError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("batch has no usable positive")]
    NoTriples,
    #[error("no training batch targeting slices up to {0} has a usable positive")]
    NoPositives(usize),
    #[error("history line {line}: {msg}")]
    History { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Autograd(#[from] AutogradError),
}

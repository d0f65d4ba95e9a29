//! Dense-matrix reverse-mode differentiation, the Adam optimizer, and a
//! central-difference gradient checker.

mod adam;
mod checkpoint;
mod gradcheck;
mod matrix;
mod params;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{read_params, write_params, Checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{finite_diff_check, GradCheckReport};
pub use matrix::DenseMatrix;
pub use params::Params;
pub use tape::{Gradients, ParamId, Tape, Var};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AutogradError {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },
    #[error("loss must be 1x1, got {}x{}", .0.0, .0.1)]
    NonScalarLoss((usize, usize)),
    #[error("non-finite gradient for parameter `{name}` at step {step}")]
    NonFiniteGradient { name: String, step: u64 },
    #[error("gradient for `{name}` has shape {got:?}, parameter has {expected:?}")]
    GradientShape {
        name: String,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

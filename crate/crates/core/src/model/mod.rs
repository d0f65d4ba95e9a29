//! Heterogeneous temporal graph network: type projection, intra-relation
//! mean aggregation, inter-relation attention, across-time attention,
//! time-summed embeddings and inner-product scoring.

mod forward;
mod layers;
mod params;
mod window;

pub use forward::{forward_window, pair_scores, score_matrix, WindowOutput};
pub use layers::{across_time_aggregate, inter_aggregate, intra_aggregate, recommend, score};
pub use params::{init_params, issue_embedding, parameter_count, ParamLayout};
pub use window::{NodeUniverse, TargetIssue, WindowGraph};

use thiserror::Error;

use crate::autograd::AutogradError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    pub layers: usize,
    pub tw: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            layers: 2,
            tw: 2,
            dropout: 0.2,
            seed: 42,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.hidden_dim >= 1
            && self.layers >= 1
            && (1..=crate::htg::MAX_WINDOW).contains(&self.tw)
            && (0.0..1.0).contains(&self.dropout);
        if ok {
            Ok(())
        } else {
            Err(ModelError::Config(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config {0}")]
    Config(String),
    #[error("no candidate developers")]
    EmptyCandidates,
    #[error("parameter `{0}` missing or misshapen")]
    Param(String),
    #[error("window does not match the model: {0}")]
    Window(String),
    #[error(transparent)]
    Autograd(#[from] AutogradError),
}

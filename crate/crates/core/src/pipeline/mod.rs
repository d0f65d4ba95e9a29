//! End-to-end orchestration shared by the command-line tool, the
//! acceptance harness and the benches.

mod config;
mod evaluate;
mod trained;

pub use config::{Pairing, RunConfig, CONFIG_ENV};
pub use evaluate::{baseline_set, evaluate, rank_adhoc, sweep_window, test_predictions, SweepRow};
pub use trained::{fit, Fitted, TrainedModel};

use thiserror::Error;

use crate::corpus::{relabel_corpus, Corpus, CorpusError, LabelRow, LabeledIssue, RelabelSummary};
use crate::evaluation::EvalError;
use crate::htg::{Htg, HtgError};
use crate::model::ModelError;
use crate::relations::{extract_relations, Edge, RelationError};
use crate::training::TrainError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint does not match the graph: {0}")]
    Mismatch(String),
    #[error("{0}")]
    Empty(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Htg(#[from] HtgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Autograd(#[from] crate::autograd::AutogradError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Relabeled closed issues with their label rows.
pub struct Labeled {
    pub issues: Vec<LabeledIssue>,
    pub rows: Vec<LabelRow>,
    pub summary: RelabelSummary,
}

pub fn relabel(corpus: &Corpus) -> Labeled {
    let (issues, summary) = relabel_corpus(corpus);
    let rows = issues.iter().map(LabelRow::from).collect();
    Labeled {
        issues,
        rows,
        summary,
    }
}

/// Corpus to graph in one call: relabel, extract relations, slice.
pub fn build_from_corpus(
    corpus: &Corpus,
    config: &RunConfig,
) -> Result<(Labeled, Vec<Edge>, Htg), PipelineError> {
    let labeled = relabel(corpus);
    let edges = extract_relations(corpus, &labeled.issues, config.relations);
    let htg = Htg::from_labels(&edges, &labeled.rows, config.slices)?;
    Ok((labeled, edges, htg))
}

//! Ranking metrics, developer-group recall, paired significance tests,
//! effect sizes, activity tables and a frequency baseline.

mod activity;
mod baseline;
mod groups;
mod metrics;
mod report;
mod stats;

pub use activity::{activity_table, ActivityTable};
pub use baseline::{baseline_predictions, frequency_baseline};
pub use groups::{group_recall, split_core_noncore, GroupRecall, GroupSplit};
pub use metrics::{mrr, prediction_overlap, topn_hit_rate, MrrSummary, Prediction, PredictionSet};
pub use report::{parse_report_sections, EvalReport, ReportSection};
pub use stats::{cliffs_delta, wilcoxon_signed_rank, Magnitude, Wilcoxon, EXACT_LIMIT};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no predictions")]
    Empty,
    #[error("paired samples differ in length: {0} vs {1}")]
    Unpaired(usize, usize),
    #[error("prediction sets cover different issues")]
    MismatchedIssues,
    #[error("report line {line}: {msg}")]
    Report { line: usize, msg: String },
}

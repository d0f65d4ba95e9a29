//! Issue-tracker records, loading and validation, fixer relabeling, and
//! label-quality statistics.

mod labels;
mod quality;
mod records;
mod relabel;
mod store;

pub use labels::{read_labels, write_labels, LabelRow};
pub use quality::{cohens_kappa, sample_size, Confidence};
pub use records::{
    ChangeType, CommentRecord, CommitRecord, DeveloperId, EventRecord, FileChange, FileContent,
    IssueRecord, IssueState, Timestamp,
};
pub use relabel::{
    developer_stats, relabel_corpus, relabel_issue, DevStats, DeveloperStats, LabelRule,
    LabeledIssue, Relabel, RelabelSummary,
};
pub use store::{load_corpus, Corpus, RecordStreams, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{stream} line {line}: {msg}")]
    Parse {
        stream: &'static str,
        line: usize,
        msg: String,
    },
    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("{stream} record references unknown issue `{issue_id}`")]
    UnknownIssue {
        stream: &'static str,
        issue_id: String,
    },
    #[error("issue `{issue_id}`: {msg}")]
    Invalid { issue_id: String, msg: String },
    #[error("identifier `{0}` contains a tab, newline, or (for developers) a comma")]
    BadIdentifier(String),
    #[error("issue `{0}` is not closed")]
    OpenIssue(String),
    #[error("labels line {line}: {msg}")]
    Labels { line: usize, msg: String },
    #[error("rater label lists differ in length ({0} vs {1}) or are empty")]
    RaterLength(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Issue-balanced time slices, per-slice heterogeneous snapshots, sliding
//! windows and chronological splits.

mod graph;
mod io;
mod timeline;
mod window;

pub use graph::{build_snapshots, BuildStats, Htg, IssueInfo, Snapshot};
pub use io::{hex_sha256, read_htg, structure_hash, write_htg};
pub use timeline::{chronological_split, slice_timeline, SliceSpec, Split, SplitRatios, Timeline};
pub use window::{window_batches, WindowBatch, WindowPlan, MAX_WINDOW};

use thiserror::Error;

use crate::relations::NodeRef;

#[derive(Debug, Error)]
pub enum HtgError {
    #[error("{n} issues cannot fill {t} slices")]
    TooFewIssues { n: usize, t: usize },
    #[error("edge endpoint {0} is not an issue of any slice")]
    DanglingEndpoint(NodeRef),
    #[error(
        "edge `{edge}` falls in slice {edge_slice} but its issue belongs to slice {issue_slice}"
    )]
    EdgeOutsideSlice {
        edge: String,
        issue_slice: usize,
        edge_slice: usize,
    },
    #[error("malformed edge `{0}`")]
    Malformed(String),
    #[error("split {ratios} does not divide {t} slices")]
    SplitRatio { t: usize, ratios: SplitRatios },
    #[error("window size {tw} outside 1..={max}")]
    WindowSize { tw: usize, max: usize },
    #[error("graph line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

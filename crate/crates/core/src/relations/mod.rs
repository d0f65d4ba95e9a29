//! Typed, timestamped edges among issues, developers and files.

mod extract;
mod io;
mod tfidf;
mod types;

pub use extract::{
    extract_create_remove, extract_relations, extract_report_comment, file_documents,
    similar_edges_text, similar_edges_text_filtered, similar_edges_traced, FileLifetimes,
    RelationConfig,
};
pub use io::{format_edge, parse_edge, read_edges, write_edges, EDGE_HEADER};
pub use tfidf::{build_tfidf_index, cosine, tokenize, SparseVec, TfidfIndex};
pub use types::{sort_edges, Edge, NodeRef, NodeType, Provenance, RelationType};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("issue `{0}` has no linked commit before it was closed")]
    NoTracedCommits(String),
    #[error("edges line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

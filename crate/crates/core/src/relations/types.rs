use std::fmt;
use std::str::FromStr;

use crate::corpus::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeType {
    Issue,
    Developer,
    File,
}

impl NodeType {
    pub const ALL: [NodeType; 3] = [NodeType::Issue, NodeType::Developer, NodeType::File];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Issue => "issue",
            NodeType::Developer => "developer",
            NodeType::File => "file",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "issue" => Ok(NodeType::Issue),
            "developer" => Ok(NodeType::Developer),
            "file" => Ok(NodeType::File),
            _ => Err(format!("unknown node type `{s}`")),
        }
    }
}

/// Typed node identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub node_type: NodeType,
    pub id: String,
}

impl NodeRef {
    pub fn new(node_type: NodeType, id: impl Into<String>) -> Self {
        Self {
            node_type,
            id: id.into(),
        }
    }

    pub fn issue(id: impl Into<String>) -> Self {
        Self::new(NodeType::Issue, id)
    }

    pub fn developer(id: impl Into<String>) -> Self {
        Self::new(NodeType::Developer, id)
    }

    pub fn file(id: impl Into<String>) -> Self {
        Self::new(NodeType::File, id)
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.node_type, self.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationType {
    Report,
    Comment,
    Create,
    Remove,
    Similar,
}

impl RelationType {
    pub const ALL: [RelationType; 5] = [
        RelationType::Report,
        RelationType::Comment,
        RelationType::Create,
        RelationType::Remove,
        RelationType::Similar,
    ];

    /// `(source type, destination type)` of every edge with this relation.
    pub fn endpoints(self) -> (NodeType, NodeType) {
        match self {
            RelationType::Report | RelationType::Comment => (NodeType::Issue, NodeType::Developer),
            RelationType::Create | RelationType::Remove => (NodeType::Developer, NodeType::File),
            RelationType::Similar => (NodeType::Issue, NodeType::File),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Report => "report",
            RelationType::Comment => "comment",
            RelationType::Create => "create",
            RelationType::Remove => "remove",
            RelationType::Similar => "similar",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationType::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

/// Where a `Similar` edge came from; other relations are `Observed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Observed,
    Traced,
    Textual,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Observed => "-",
            Provenance::Traced => "traced",
            Provenance::Textual => "textual",
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "-" => Ok(Provenance::Observed),
            "traced" => Ok(Provenance::Traced),
            "textual" => Ok(Provenance::Textual),
            _ => Err(format!("unknown provenance `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: NodeRef,
    pub dst: NodeRef,
    pub relation: RelationType,
    pub at: Timestamp,
    pub weight: f64,
    pub provenance: Provenance,
}

impl Edge {
    pub fn new(relation: RelationType, src: NodeRef, dst: NodeRef, at: Timestamp) -> Self {
        Self {
            src,
            dst,
            relation,
            at,
            weight: 1.0,
            provenance: Provenance::Observed,
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Endpoint types agree with the relation and the weight is usable.
    pub fn is_well_typed(&self) -> bool {
        let (s, d) = self.relation.endpoints();
        self.src.node_type == s
            && self.dst.node_type == d
            && self.weight.is_finite()
            && self.weight >= 0.0
    }

    /// Total order used for every exported edge list.
    pub fn sort_key(&self) -> (i64, RelationType, &NodeRef, &NodeRef, Provenance) {
        (
            self.at,
            self.relation,
            &self.src,
            &self.dst,
            self.provenance,
        )
    }
}

pub fn sort_edges(edges: &mut [Edge]) {
    edges.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then(a.weight.total_cmp(&b.weight))
    });
}

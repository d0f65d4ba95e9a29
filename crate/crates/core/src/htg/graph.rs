use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;

use super::timeline::{slice_timeline, Timeline};
use super::HtgError;
use crate::corpus::{LabelRow, Timestamp};
use crate::relations::{
    format_edge, sort_edges, Edge, FileLifetimes, NodeRef, NodeType, RelationType,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    /// 1-based.
    pub index: usize,
    /// Lower time bound; `None` for the first slice.
    pub start: Option<Timestamp>,
    /// Exclusive upper time bound; `None` for the last slice.
    pub end: Option<Timestamp>,
    pub issue_span: (Timestamp, Timestamp),
    /// Issue ids assigned to this slice, chronological.
    pub issues: Vec<String>,
    pub nodes: BTreeSet<NodeRef>,
    /// Sorted.
    pub edges: Vec<Edge>,
}

impl Snapshot {
    pub fn nodes_of(&self, t: NodeType) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(move |n| n.node_type == t)
            .map(|n| n.id.as_str())
    }

    pub fn contains(&self, n: &NodeRef) -> bool {
        self.nodes.contains(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueInfo {
    pub created_at: Timestamp,
    pub closed_at: Timestamp,
    pub fixers: BTreeSet<String>,
    pub slice: usize,
}

/// Edges discarded during construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    /// Comments landing after their issue's slice while the issue was open.
    pub late_comments_open: usize,
    /// Comments landing after their issue's slice and after it closed.
    pub late_comments_closed: usize,
}

/// A sequence of per-slice snapshots whose issue sets are pairwise disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Htg {
    snapshots: Vec<Snapshot>,
    issues: BTreeMap<String, IssueInfo>,
    stats: BuildStats,
}

/// Materializes one snapshot per timeline slice.
///
/// Issue-incident edges go to the issue's slice; any other edge goes to the
/// slice holding its timestamp. A Comment that lands in a later slice is
/// dropped and counted. Any other issue-incident edge outside the issue's
/// slice is an error. File nodes are the files that exist at the end of the
/// slice plus the files incident to its edges.
pub fn build_snapshots(
    edges: &[Edge],
    timeline: &Timeline,
    labels: &[LabelRow],
) -> Result<Htg, HtgError> {
    let by_id: HashMap<&str, &LabelRow> = labels.iter().map(|l| (l.issue_id.as_str(), l)).collect();
    let mut issues = BTreeMap::new();
    for s in timeline.slices() {
        for id in &s.issues {
            let l = by_id
                .get(id.as_str())
                .ok_or_else(|| HtgError::DanglingEndpoint(NodeRef::issue(id)))?;
            issues.insert(
                id.clone(),
                IssueInfo {
                    created_at: l.created_at,
                    closed_at: l.closed_at,
                    fixers: l.fixers.clone(),
                    slice: s.index,
                },
            );
        }
    }

    let t = timeline.len();
    let mut per_slice: Vec<Vec<Edge>> = vec![Vec::new(); t];
    let mut stats = BuildStats::default();
    for e in edges {
        if !e.is_well_typed() {
            return Err(HtgError::Malformed(format_edge(e)));
        }
        let slice = if e.src.node_type == NodeType::Issue {
            let info = issues
                .get(&e.src.id)
                .ok_or_else(|| HtgError::DanglingEndpoint(e.src.clone()))?;
            let by_time = timeline.slice_of_time(e.at);
            if e.at != info.created_at && by_time != info.slice {
                if e.relation == RelationType::Comment && by_time > info.slice {
                    if e.at < info.closed_at {
                        stats.late_comments_open += 1;
                    } else {
                        stats.late_comments_closed += 1;
                    }
                    continue;
                }
                return Err(HtgError::EdgeOutsideSlice {
                    edge: format_edge(e),
                    issue_slice: info.slice,
                    edge_slice: by_time,
                });
            }
            info.slice
        } else {
            timeline.slice_of_time(e.at)
        };
        per_slice[slice - 1].push(e.clone());
    }

    let lifetimes = FileLifetimes::from_edges(edges);
    let all_files: BTreeSet<&str> = edges
        .iter()
        .filter(|e| e.dst.node_type == NodeType::File)
        .map(|e| e.dst.id.as_str())
        .collect();

    let mut snapshots = Vec::with_capacity(t);
    for (i, mut slice_edges) in per_slice.into_iter().enumerate() {
        let spec = timeline.slice(i + 1);
        let (start, end) = timeline.bounds(i + 1);
        sort_edges(&mut slice_edges);
        let mut nodes: BTreeSet<NodeRef> = spec.issues.iter().map(NodeRef::issue).collect();
        for e in &slice_edges {
            nodes.insert(e.src.clone());
            nodes.insert(e.dst.clone());
        }
        let last = end.map_or(Timestamp::MAX, |e| e - 1);
        nodes.extend(
            all_files
                .iter()
                .filter(|f| lifetimes.exists(f, last))
                .map(|f| NodeRef::file(*f)),
        );
        snapshots.push(Snapshot {
            index: i + 1,
            start,
            end,
            issue_span: spec.issue_span,
            issues: spec.issues.clone(),
            nodes,
            edges: slice_edges,
        });
    }
    Ok(Htg {
        snapshots,
        issues,
        stats,
    })
}

impl Htg {
    /// Slices the labeled issues into `t` periods and builds the snapshots.
    pub fn from_labels(edges: &[Edge], labels: &[LabelRow], t: usize) -> Result<Self, HtgError> {
        let timeline = slice_timeline(
            labels.iter().map(|l| (l.issue_id.as_str(), l.created_at)),
            t,
        )?;
        build_snapshots(edges, &timeline, labels)
    }

    pub(crate) fn from_parts(
        snapshots: Vec<Snapshot>,
        issues: BTreeMap<String, IssueInfo>,
        stats: BuildStats,
    ) -> Self {
        Self {
            snapshots,
            issues,
            stats,
        }
    }

    pub fn t(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// 1-based.
    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t - 1]
    }

    pub fn issue(&self, id: &str) -> Option<&IssueInfo> {
        self.issues.get(id)
    }

    pub fn issues(&self) -> &BTreeMap<String, IssueInfo> {
        &self.issues
    }

    pub fn stats(&self) -> BuildStats {
        self.stats
    }

    pub fn node_count(&self) -> usize {
        self.snapshots.iter().map(|s| s.nodes.len()).sum()
    }

    pub fn edge_count(&self) -> usize {
        self.snapshots.iter().map(|s| s.edges.len()).sum()
    }

    /// Developers appearing in the given slices or fixing one of their issues.
    pub fn developers_in(&self, slices: RangeInclusive<usize>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in slices {
            let s = self.snapshot(t);
            out.extend(s.nodes_of(NodeType::Developer).map(str::to_string));
            for i in &s.issues {
                out.extend(self.issues[i].fixers.iter().cloned());
            }
        }
        out
    }

    /// Files appearing in the given slices.
    pub fn files_in(&self, slices: RangeInclusive<usize>) -> BTreeSet<String> {
        slices
            .flat_map(|t| {
                self.snapshot(t)
                    .nodes_of(NodeType::File)
                    .map(str::to_string)
            })
            .collect()
    }

    /// Fixers seen in time-ordered issue creation within the given slices,
    /// as `(created_at, fixer)` pairs.
    pub fn fix_history(&self, slices: RangeInclusive<usize>) -> Vec<(Timestamp, String)> {
        let mut out = Vec::new();
        for t in slices {
            for i in &self.snapshot(t).issues {
                let info = &self.issues[i];
                out.extend(info.fixers.iter().map(|f| (info.created_at, f.clone())));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelRule;

    fn row(id: &str, created: i64, closed: i64, fixers: &[&str]) -> LabelRow {
        LabelRow {
            issue_id: id.into(),
            created_at: created,
            closed_at: closed,
            rule: if fixers.is_empty() {
                LabelRule::Unlabeled
            } else {
                LabelRule::LinkedCommits
            },
            fixers: fixers.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn report(i: &str, d: &str, at: i64) -> Edge {
        Edge::new(
            RelationType::Report,
            NodeRef::issue(i),
            NodeRef::developer(d),
            at,
        )
    }

    fn comment(i: &str, d: &str, at: i64) -> Edge {
        Edge::new(
            RelationType::Comment,
            NodeRef::issue(i),
            NodeRef::developer(d),
            at,
        )
    }

    #[test]
    fn single_issue_snapshot() {
        let labels = [row("i", 0, 5, &["A"]), row("j", 10, 15, &[])];
        let edges = [
            report("i", "A", 0),
            comment("i", "B", 1),
            report("j", "C", 10),
        ];
        let g = Htg::from_labels(&edges, &labels, 2).unwrap();
        let s1 = g.snapshot(1);
        let want: BTreeSet<_> = [
            NodeRef::issue("i"),
            NodeRef::developer("A"),
            NodeRef::developer("B"),
        ]
        .into();
        assert_eq!(s1.nodes, want);
        assert_eq!(s1.edges.len(), 2);
    }

    #[test]
    fn developer_recurs_across_slices() {
        let labels = [row("i", 0, 5, &[]), row("j", 10, 15, &[])];
        let edges = [report("i", "A", 0), report("j", "A", 10)];
        let g = Htg::from_labels(&edges, &labels, 2).unwrap();
        assert!(g.snapshot(1).contains(&NodeRef::developer("A")));
        assert!(g.snapshot(2).contains(&NodeRef::developer("A")));
    }

    #[test]
    fn out_of_slice_issue_edge_is_an_error() {
        let labels: Vec<_> = (0..3)
            .map(|i| row(&format!("i{i}"), i * 10, i * 10 + 100, &[]))
            .collect();
        let late = Edge::new(
            RelationType::Similar,
            NodeRef::issue("i1"),
            NodeRef::file("f"),
            25,
        );
        assert!(matches!(
            Htg::from_labels(&[late], &labels, 3),
            Err(HtgError::EdgeOutsideSlice {
                issue_slice: 2,
                edge_slice: 3,
                ..
            })
        ));
        assert!(matches!(
            Htg::from_labels(&[report("zz", "A", 0)], &labels, 3),
            Err(HtgError::DanglingEndpoint(_))
        ));
    }

    #[test]
    fn late_comments_are_dropped_and_counted() {
        let labels = [row("i", 0, 5, &[]), row("j", 10, 30, &[])];
        let edges = [
            comment("i", "B", 12),
            report("j", "C", 10),
            comment("i", "D", 3),
        ];
        let g = Htg::from_labels(&edges, &labels, 2).unwrap();
        assert_eq!(g.stats().late_comments_closed, 1);
        assert!(!g.snapshot(2).contains(&NodeRef::issue("i")));
        assert!(g.snapshot(1).contains(&NodeRef::developer("D")));
    }

    #[test]
    fn files_exist_until_removed() {
        let labels: Vec<_> = (0..3)
            .map(|i| row(&format!("i{i}"), i * 10, i * 10 + 1, &[]))
            .collect();
        let edges = [
            Edge::new(
                RelationType::Create,
                NodeRef::developer("A"),
                NodeRef::file("f"),
                5,
            ),
            Edge::new(
                RelationType::Remove,
                NodeRef::developer("A"),
                NodeRef::file("f"),
                15,
            ),
        ];
        let g = Htg::from_labels(&edges, &labels, 3).unwrap();
        let f = NodeRef::file("f");
        assert!(g.snapshot(1).contains(&f));
        assert!(g.snapshot(2).contains(&f), "incident to the Remove edge");
        assert!(!g.snapshot(3).contains(&f));
    }
}

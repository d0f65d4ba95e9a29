//! `graph.htg` text format.
//!
//! ```text
//! htg	1	T=10	nodes=<n>	edges=<m>	late_open=<a>	late_closed=<b>
//! slice	1	-	1500360000	1500000000	1500350000
//! issue	1042	1500000000	1500086400	alice,bob
//! node	developer	alice
//! node	file	src/net/socket.rs
//! edge	issue	1042	report	developer	alice	1500000000	1	-
//! end
//! ```
//!
//! Slice lines carry `start end first_issue last_issue`, `-` for unbounded.
//! Issue lines carry `created_at closed_at fixers` with `-` for no fixer.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use sha2::{Digest, Sha256};

use super::graph::{BuildStats, Htg, IssueInfo, Snapshot};
use super::HtgError;
use crate::relations::{format_edge, parse_edge, NodeRef, NodeType};

fn opt(t: Option<i64>) -> String {
    t.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn write_htg<W: Write>(mut w: W, g: &Htg) -> std::io::Result<()> {
    let s = g.stats();
    writeln!(
        w,
        "htg\t1\tT={}\tnodes={}\tedges={}\tlate_open={}\tlate_closed={}",
        g.t(),
        g.node_count(),
        g.edge_count(),
        s.late_comments_open,
        s.late_comments_closed
    )?;
    for snap in g.snapshots() {
        writeln!(
            w,
            "slice\t{}\t{}\t{}\t{}\t{}",
            snap.index,
            opt(snap.start),
            opt(snap.end),
            snap.issue_span.0,
            snap.issue_span.1
        )?;
        for id in &snap.issues {
            let info = g.issue(id).expect("slice issue is indexed");
            let fixers = if info.fixers.is_empty() {
                "-".to_string()
            } else {
                info.fixers.iter().cloned().collect::<Vec<_>>().join(",")
            };
            writeln!(
                w,
                "issue\t{id}\t{}\t{}\t{fixers}",
                info.created_at, info.closed_at
            )?;
        }
        for n in snap.nodes.iter().filter(|n| n.node_type != NodeType::Issue) {
            writeln!(w, "node\t{}\t{}", n.node_type, n.id)?;
        }
        for e in &snap.edges {
            writeln!(w, "edge\t{}", format_edge(e))?;
        }
    }
    writeln!(w, "end")
}

pub fn read_htg<R: BufRead>(r: R) -> Result<Htg, HtgError> {
    let mut snapshots: Vec<Snapshot> = Vec::new();
    let mut issues = BTreeMap::new();
    let mut stats = BuildStats::default();
    let mut header: Option<(usize, usize, usize)> = None;
    let mut ended = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        let err = |msg: String| HtgError::Parse { line: no, msg };
        let num = |s: &str| s.parse::<i64>().map_err(|e| err(format!("`{s}`: {e}")));
        let cols: Vec<&str> = line.split('\t').collect();
        if ended {
            return Err(err("content after `end`".into()));
        }
        let current = |snaps: &mut Vec<Snapshot>| -> Result<usize, HtgError> {
            if snaps.is_empty() {
                Err(HtgError::Parse {
                    line: no,
                    msg: "record before the first slice".into(),
                })
            } else {
                Ok(snaps.len() - 1)
            }
        };
        match cols[..] {
            ["htg", "1", t, nodes, edges, late_open, late_closed] if header.is_none() => {
                let field = |s: &str, key: &str| -> Result<usize, HtgError> {
                    s.strip_prefix(key)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err(format!("expected {key}<count>, got `{s}`")))
                };
                header = Some((
                    field(t, "T=")?,
                    field(nodes, "nodes=")?,
                    field(edges, "edges=")?,
                ));
                stats.late_comments_open = field(late_open, "late_open=")?;
                stats.late_comments_closed = field(late_closed, "late_closed=")?;
            }
            _ if header.is_none() => return Err(err("missing `htg 1` header".into())),
            ["slice", idx, start, end, first, last] => {
                let idx: usize = idx
                    .parse()
                    .map_err(|_| err(format!("bad slice index `{idx}`")))?;
                if idx != snapshots.len() + 1 {
                    return Err(err(format!("slice {idx} out of order")));
                }
                let bound = |s: &str| if s == "-" { Ok(None) } else { num(s).map(Some) };
                snapshots.push(Snapshot {
                    index: idx,
                    start: bound(start)?,
                    end: bound(end)?,
                    issue_span: (num(first)?, num(last)?),
                    issues: Vec::new(),
                    nodes: BTreeSet::new(),
                    edges: Vec::new(),
                });
            }
            ["issue", id, created, closed, fixers] => {
                let s = current(&mut snapshots)?;
                let info = IssueInfo {
                    created_at: num(created)?,
                    closed_at: num(closed)?,
                    fixers: if fixers == "-" {
                        BTreeSet::new()
                    } else {
                        fixers.split(',').map(str::to_string).collect()
                    },
                    slice: s + 1,
                };
                if issues.insert(id.to_string(), info).is_some() {
                    return Err(err(format!("issue `{id}` appears in two slices")));
                }
                snapshots[s].issues.push(id.to_string());
                snapshots[s].nodes.insert(NodeRef::issue(id));
            }
            ["node", ty, id] => {
                let s = current(&mut snapshots)?;
                let ty: NodeType = ty.parse().map_err(err)?;
                if ty == NodeType::Issue {
                    return Err(err("issue nodes are declared by `issue` lines".into()));
                }
                snapshots[s].nodes.insert(NodeRef::new(ty, id));
            }
            ["edge", ..] => {
                let s = current(&mut snapshots)?;
                let e = parse_edge(&line["edge\t".len()..]).map_err(err)?;
                if !snapshots[s].nodes.contains(&e.src) || !snapshots[s].nodes.contains(&e.dst) {
                    return Err(err("edge endpoint not declared in its slice".into()));
                }
                snapshots[s].edges.push(e);
            }
            ["end"] => ended = true,
            _ => return Err(err(format!("unrecognized record `{line}`"))),
        }
    }
    let Some((t, nodes, edges)) = header else {
        return Err(HtgError::Parse {
            line: 0,
            msg: "empty graph file".into(),
        });
    };
    if !ended {
        return Err(HtgError::Parse {
            line: 0,
            msg: "truncated graph file (no `end`)".into(),
        });
    }
    let g = Htg::from_parts(snapshots, issues, stats);
    if g.t() != t || g.node_count() != nodes || g.edge_count() != edges {
        return Err(HtgError::Parse {
            line: 1,
            msg: format!(
                "header declares T={t} nodes={nodes} edges={edges}, body has T={} nodes={} edges={}",
                g.t(),
                g.node_count(),
                g.edge_count()
            ),
        });
    }
    Ok(g)
}

/// SHA-256 of the canonical serialization, as lowercase hex.
pub fn structure_hash(g: &Htg) -> String {
    let mut buf = Vec::new();
    write_htg(&mut buf, g).expect("writing to memory");
    hex_sha256(&buf)
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;

use super::layers::Messages;
use super::params::issue_embedding;
use super::ModelError;
use crate::autograd::DenseMatrix;
use crate::htg::{hex_sha256, Htg, Snapshot};
use crate::relations::{NodeRef, NodeType, Provenance, RelationType};

/// The developers and files that own trainable base embeddings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeUniverse {
    developers: Vec<String>,
    files: Vec<String>,
    dev_index: HashMap<String, usize>,
    file_index: HashMap<String, usize>,
}

impl NodeUniverse {
    pub fn new<I, J, S, T>(developers: I, files: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let developers: Vec<String> = developers
            .into_iter()
            .map(Into::into)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let files: Vec<String> = files
            .into_iter()
            .map(Into::into)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index = |v: &[String]| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self {
            dev_index: index(&developers),
            file_index: index(&files),
            developers,
            files,
        }
    }

    /// Developers and files of the given slices, plus those slices' fixers.
    pub fn from_htg(htg: &Htg, slices: RangeInclusive<usize>) -> Self {
        Self::new(htg.developers_in(slices.clone()), htg.files_in(slices))
    }

    pub fn developers(&self) -> &[String] {
        &self.developers
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn developer(&self, id: &str) -> Option<usize> {
        self.dev_index.get(id).copied()
    }

    pub fn file(&self, id: &str) -> Option<usize> {
        self.file_index.get(id).copied()
    }

    fn lookup(&self, n: &NodeRef) -> Option<usize> {
        match n.node_type {
            NodeType::Developer => self.developer(&n.id),
            NodeType::File => self.file(&n.id),
            NodeType::Issue => None,
        }
    }

    /// Content hash, stored with checkpoints to detect a mismatched graph.
    pub fn fingerprint(&self) -> String {
        let mut buf = String::new();
        for d in &self.developers {
            buf.push_str("d\t");
            buf.push_str(d);
            buf.push('\n');
        }
        for f in &self.files {
            buf.push_str("f\t");
            buf.push_str(f);
            buf.push('\n');
        }
        hex_sha256(buf.as_bytes())
    }
}

/// An issue to embed by one spatial pass over its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetIssue {
    pub id: String,
    /// `(relation, neighbor, weight)`; Report/Comment neighbors are
    /// developers and Similar neighbors are files.
    pub neighbors: Vec<(RelationType, NodeRef, f64)>,
}

impl TargetIssue {
    /// Targets for every issue of `snap`, using its Report, Comment and
    /// textual Similar edges only.
    pub fn from_snapshot(snap: &Snapshot) -> BTreeMap<String, TargetIssue> {
        let mut out: BTreeMap<String, TargetIssue> = snap
            .issues
            .iter()
            .map(|i| {
                (
                    i.clone(),
                    TargetIssue {
                        id: i.clone(),
                        neighbors: Vec::new(),
                    },
                )
            })
            .collect();
        for e in &snap.edges {
            let usable = match e.relation {
                RelationType::Report | RelationType::Comment => true,
                RelationType::Similar => e.provenance == Provenance::Textual,
                _ => false,
            };
            if usable && e.src.node_type == NodeType::Issue {
                if let Some(t) = out.get_mut(&e.src.id) {
                    t.neighbors.push((e.relation, e.dst.clone(), e.weight));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RelBlock {
    pub relation: RelationType,
    pub messages: Messages,
    /// Node index (within the slice) of each segment.
    pub targets: Vec<usize>,
}

/// One input slice. Local node order: issues, developers, files.
#[derive(Debug, Clone)]
pub(crate) struct SliceGraph {
    pub issue_x: Option<DenseMatrix>,
    pub n_issue: usize,
    /// Universe index of each local developer.
    pub dev_universe: Vec<usize>,
    /// Window slot of each local developer.
    pub dev_slots: Vec<usize>,
    pub file_universe: Vec<usize>,
    pub file_slots: Vec<usize>,
    pub blocks: Vec<RelBlock>,
}

impl SliceGraph {
    pub fn counts(&self) -> [usize; 3] {
        [self.n_issue, self.dev_slots.len(), self.file_slots.len()]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct TargetBlock {
    pub relation: RelationType,
    pub table: NodeType,
    pub messages: Messages,
    pub targets: Vec<usize>,
}

/// Precomputed index structure for one window and its target issues.
#[derive(Debug, Clone)]
pub struct WindowGraph {
    pub(crate) d: usize,
    pub(crate) slices: Vec<SliceGraph>,
    /// Universe index per window developer slot.
    pub(crate) window_devs: Vec<usize>,
    pub(crate) window_files: Vec<usize>,
    pub(crate) dev_presence: Vec<f64>,
    pub(crate) file_presence: Vec<f64>,
    /// Universe indices of table rows after the window slots.
    pub(crate) extra_devs: Vec<usize>,
    pub(crate) extra_files: Vec<usize>,
    pub(crate) target_ids: Vec<String>,
    pub(crate) target_x: DenseMatrix,
    pub(crate) target_blocks: Vec<TargetBlock>,
    pub(crate) candidates: Vec<String>,
    pub(crate) candidate_rows: Vec<usize>,
    isolated_targets: usize,
}

struct Slots {
    of: HashMap<usize, usize>,
    order: Vec<usize>,
}

impl Slots {
    fn new() -> Self {
        Self {
            of: HashMap::new(),
            order: Vec::new(),
        }
    }

    fn slot(&mut self, u: usize) -> usize {
        *self.of.entry(u).or_insert_with(|| {
            self.order.push(u);
            self.order.len() - 1
        })
    }
}

fn blocks_from_pairs(pairs: BTreeMap<RelationType, Vec<(usize, usize, f64)>>) -> Vec<RelBlock> {
    let mut out = Vec::new();
    for (relation, edges) in pairs {
        let mut msgs: Vec<(usize, usize, f64)> = Vec::with_capacity(edges.len() * 2);
        for (s, d, w) in edges {
            msgs.push((s, d, w));
            msgs.push((d, s, w));
        }
        let targets: Vec<usize> = msgs
            .iter()
            .map(|m| m.1)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let seg_of: HashMap<usize, usize> =
            targets.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let messages = Messages::new(
            msgs.iter().map(|m| m.0).collect(),
            msgs.iter().map(|m| seg_of[&m.1]).collect(),
            msgs.iter().map(|m| m.2).collect(),
            targets.len(),
        );
        out.push(RelBlock {
            relation,
            messages,
            targets,
        });
    }
    out
}

fn issue_matrix(ids: &[String], seed: u64, d: usize) -> DenseMatrix {
    let mut values = Vec::with_capacity(ids.len() * d);
    for id in ids {
        values.extend(issue_embedding(seed, id, d));
    }
    DenseMatrix::from_vec(ids.len(), d, values)
}

impl WindowGraph {
    /// Prepares `input_slices` of `htg` for a forward pass that embeds
    /// `targets` and the `candidates`.
    ///
    /// In input slices an issue's Similar edges are its traced ones when it
    /// has any, else its textual ones. Nodes outside `universe` are dropped
    /// together with their edges.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        htg: &Htg,
        input_slices: &[usize],
        targets: &[TargetIssue],
        candidates: &[String],
        universe: &NodeUniverse,
        d: usize,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if targets.is_empty() {
            return Err(ModelError::Window("no target issues".into()));
        }
        if candidates.is_empty() {
            return Err(ModelError::EmptyCandidates);
        }
        let mut dev_slots = Slots::new();
        let mut file_slots = Slots::new();
        let mut dev_count: HashMap<usize, f64> = HashMap::new();
        let mut file_count: HashMap<usize, f64> = HashMap::new();
        let mut slices = Vec::with_capacity(input_slices.len());

        for &s in input_slices {
            let snap = htg.snapshot(s);
            let mut local: HashMap<&NodeRef, usize> = HashMap::new();
            let issue_nodes: Vec<NodeRef> = snap.issues.iter().map(NodeRef::issue).collect();
            for (i, n) in issue_nodes.iter().enumerate() {
                local.insert(n, i);
            }
            let n_issue = issue_nodes.len();
            let mut sg = SliceGraph {
                issue_x: (n_issue > 0).then(|| issue_matrix(&snap.issues, seed, d)),
                n_issue,
                dev_universe: Vec::new(),
                dev_slots: Vec::new(),
                file_universe: Vec::new(),
                file_slots: Vec::new(),
                blocks: Vec::new(),
            };
            for n in snap
                .nodes
                .iter()
                .filter(|n| n.node_type == NodeType::Developer)
            {
                if let Some(u) = universe.developer(&n.id) {
                    local.insert(n, n_issue + sg.dev_universe.len());
                    sg.dev_universe.push(u);
                    sg.dev_slots.push(dev_slots.slot(u));
                    *dev_count.entry(u).or_default() += 1.0;
                }
            }
            let n_dev = sg.dev_universe.len();
            for n in snap.nodes.iter().filter(|n| n.node_type == NodeType::File) {
                if let Some(u) = universe.file(&n.id) {
                    local.insert(n, n_issue + n_dev + sg.file_universe.len());
                    sg.file_universe.push(u);
                    sg.file_slots.push(file_slots.slot(u));
                    *file_count.entry(u).or_default() += 1.0;
                }
            }
            let traced: BTreeSet<&str> = snap
                .edges
                .iter()
                .filter(|e| e.provenance == Provenance::Traced)
                .map(|e| e.src.id.as_str())
                .collect();
            let mut pairs: BTreeMap<RelationType, Vec<(usize, usize, f64)>> = BTreeMap::new();
            for e in &snap.edges {
                if e.provenance == Provenance::Textual && traced.contains(e.src.id.as_str()) {
                    continue;
                }
                if let (Some(&a), Some(&b)) = (local.get(&e.src), local.get(&e.dst)) {
                    pairs.entry(e.relation).or_default().push((a, b, e.weight));
                }
            }
            sg.blocks = blocks_from_pairs(pairs);
            slices.push(sg);
        }

        let window_devs = dev_slots.order;
        let window_files = file_slots.order;
        let dev_presence = window_devs.iter().map(|u| dev_count[u]).collect();
        let file_presence = window_files.iter().map(|u| file_count[u]).collect();

        let mut dev_rows: HashMap<usize, usize> = window_devs
            .iter()
            .enumerate()
            .map(|(i, &u)| (u, i))
            .collect();
        let mut file_rows: HashMap<usize, usize> = window_files
            .iter()
            .enumerate()
            .map(|(i, &u)| (u, i))
            .collect();
        let mut extra_devs = Vec::new();
        let mut extra_files = Vec::new();
        let mut row_of = |n: &NodeRef| -> Option<usize> {
            let u = universe.lookup(n)?;
            let (rows, extra) = match n.node_type {
                NodeType::Developer => (&mut dev_rows, &mut extra_devs),
                _ => (&mut file_rows, &mut extra_files),
            };
            let next = rows.len();
            Some(*rows.entry(u).or_insert_with(|| {
                extra.push(u);
                next
            }))
        };

        let mut candidate_rows = Vec::with_capacity(candidates.len());
        for c in candidates {
            let row = row_of(&NodeRef::developer(c)).ok_or_else(|| {
                ModelError::Window(format!("candidate `{c}` outside the node universe"))
            })?;
            candidate_rows.push(row);
        }

        let mut tpairs: BTreeMap<RelationType, Vec<(usize, usize, f64)>> = BTreeMap::new();
        let mut isolated_targets = 0;
        for (ti, t) in targets.iter().enumerate() {
            let mut any = false;
            for (rel, n, w) in &t.neighbors {
                let expected = rel.endpoints().1;
                if n.node_type != expected
                    || !matches!(
                        rel,
                        RelationType::Report | RelationType::Comment | RelationType::Similar
                    )
                {
                    return Err(ModelError::Window(format!(
                        "target `{}`: bad neighbor {n} via {rel}",
                        t.id
                    )));
                }
                if let Some(row) = row_of(n) {
                    tpairs.entry(*rel).or_default().push((row, ti, *w));
                    any = true;
                }
            }
            if !any {
                isolated_targets += 1;
            }
        }
        let mut target_blocks = Vec::new();
        for (relation, msgs) in tpairs {
            let tgt: Vec<usize> = msgs
                .iter()
                .map(|m| m.1)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let seg_of: HashMap<usize, usize> =
                tgt.iter().enumerate().map(|(i, &t)| (t, i)).collect();
            target_blocks.push(TargetBlock {
                relation,
                table: relation.endpoints().1,
                messages: Messages::new(
                    msgs.iter().map(|m| m.0).collect(),
                    msgs.iter().map(|m| seg_of[&m.1]).collect(),
                    msgs.iter().map(|m| m.2).collect(),
                    tgt.len(),
                ),
                targets: tgt,
            });
        }

        let target_ids: Vec<String> = targets.iter().map(|t| t.id.clone()).collect();
        Ok(Self {
            d,
            target_x: issue_matrix(&target_ids, seed, d),
            slices,
            window_devs,
            window_files,
            dev_presence,
            file_presence,
            extra_devs,
            extra_files,
            target_ids,
            target_blocks,
            candidates: candidates.to_vec(),
            candidate_rows,
            isolated_targets,
        })
    }

    pub fn target_ids(&self) -> &[String] {
        &self.target_ids
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn tw(&self) -> usize {
        self.slices.len()
    }

    /// Targets without any resolvable neighbor; they are embedded from
    /// their initial vector alone.
    pub fn isolated_targets(&self) -> usize {
        self.isolated_targets
    }

    /// Distinct developer and file nodes present in the input slices.
    pub fn window_node_counts(&self) -> (usize, usize) {
        (self.window_devs.len(), self.window_files.len())
    }

    /// Total `(nodes, edges)` over the input slices.
    pub fn size(&self) -> (usize, usize) {
        let nodes = self
            .slices
            .iter()
            .map(|s| s.counts().iter().sum::<usize>())
            .sum();
        let edges = self
            .slices
            .iter()
            .flat_map(|s| &s.blocks)
            .map(|b| b.messages.src.len() / 2)
            .sum();
        (nodes, edges)
    }
}

use std::collections::HashMap;

use rand::Rng;

use super::layers::{across, inter, intra};
use super::params::ParamLayout;
use super::window::WindowGraph;
use super::ModelError;
use crate::autograd::{DenseMatrix, ParamId, Params, Tape, Var};
use crate::relations::NodeType;

/// Embeddings produced by one window pass.
#[derive(Debug, Clone, Copy)]
pub struct WindowOutput {
    /// `n_targets × d`, in [`WindowGraph::target_ids`] order.
    pub targets: Var,
    /// `n_candidates × d`, in [`WindowGraph::candidates`] order.
    pub candidates: Var,
}

struct Leaves<'a> {
    params: &'a Params,
    vars: HashMap<ParamId, Var>,
}

impl Leaves<'_> {
    fn get(&mut self, tape: &mut Tape, id: ParamId) -> Var {
        *self
            .vars
            .entry(id)
            .or_insert_with(|| tape.param(id, self.params.get(id).clone()))
    }

    fn project(
        &mut self,
        tape: &mut Tape,
        layout: &ParamLayout,
        t: NodeType,
        x: Var,
    ) -> Result<Var, ModelError> {
        let (w, b) = layout.proj(t);
        let (w, b) = (self.get(tape, w), self.get(tape, b));
        let h = tape.matmul(x, w)?;
        Ok(tape.add_row(h, b)?)
    }
}

fn concat(tape: &mut Tape, parts: &[Var]) -> Result<Var, ModelError> {
    Ok(match parts {
        [one] => *one,
        _ => tape.concat_rows(parts)?,
    })
}

const TYPES: [NodeType; 3] = [NodeType::Issue, NodeType::Developer, NodeType::File];

/// Runs `L` layers of type projection, intra-relation, inter-relation and
/// across-time aggregation over the input slices, sums each developer's and
/// file's final embedding over the slices where it is present, then embeds
/// the target issues with one spatial pass over those final embeddings.
/// A target's seeded feature enters only when it has no neighbor at all.
///
/// Window nodes absent from every input slice use their projected base
/// embedding. Dropout acts on relation means only when `train` is set.
pub fn forward_window<R: Rng + ?Sized>(
    tape: &mut Tape,
    params: &Params,
    layout: &ParamLayout,
    g: &WindowGraph,
    dropout: f64,
    train: bool,
    rng: &mut R,
) -> Result<WindowOutput, ModelError> {
    if g.d != layout.d || g.tw() != layout.tw {
        return Err(ModelError::Window(format!(
            "graph has d={} tw={}, parameters have d={} tw={}",
            g.d,
            g.tw(),
            layout.d,
            layout.tw
        )));
    }
    let mut lv = Leaves {
        params,
        vars: HashMap::new(),
    };
    let base_dev = lv.get(tape, layout.base_developer);
    let base_file = lv.get(tape, layout.base_file);

    // Current per-slice embeddings, one optional block per node type.
    let mut h: Vec<[Option<Var>; 3]> = Vec::with_capacity(g.slices.len());
    for s in &g.slices {
        let hi = s.issue_x.as_ref().map(|x| tape.constant(x.clone()));
        let hd = match s.dev_universe.is_empty() {
            true => None,
            false => Some(tape.gather_rows(base_dev, &s.dev_universe)?),
        };
        let hf = match s.file_universe.is_empty() {
            true => None,
            false => Some(tape.gather_rows(base_file, &s.file_universe)?),
        };
        h.push([hi, hd, hf]);
    }

    let mut st: [Option<Var>; 2] = [None, None];
    for l in 1..=layout.layers {
        let mut spatial: Vec<[Option<Var>; 3]> = Vec::with_capacity(g.slices.len());
        for (o, s) in g.slices.iter().enumerate() {
            let counts = s.counts();
            let mut p_parts = Vec::new();
            let mut self_parts = Vec::new();
            for (k, t) in TYPES.iter().enumerate() {
                if let Some(x) = h[o][k] {
                    let p = lv.project(tape, layout, *t, x)?;
                    let ws = lv.get(tape, layout.inter_self(*t, o, l));
                    p_parts.push(p);
                    self_parts.push(tape.matmul(p, ws)?);
                }
            }
            if p_parts.is_empty() {
                spatial.push([None, None, None]);
                continue;
            }
            let p = concat(tape, &p_parts)?;
            let self_term = concat(tape, &self_parts)?;
            let mut rel = Vec::with_capacity(s.blocks.len());
            for b in &s.blocks {
                let (w, bias) = layout.intra(b.relation, o, l);
                let (w, bias) = (lv.get(tape, w), lv.get(tape, bias));
                rel.push((
                    intra(tape, p, &b.messages, w, bias, dropout, train, rng)?,
                    b.targets.as_slice(),
                ));
            }
            let q = lv.get(tape, layout.inter_q(o, l));
            let hr = inter(tape, self_term, &rel, q)?;
            let total: usize = counts.iter().sum();
            let mut out = [None, None, None];
            let mut start = 0;
            for (k, &n) in counts.iter().enumerate() {
                if n == total {
                    out[k] = Some(hr);
                } else if n > 0 {
                    let idx: Vec<usize> = (start..start + n).collect();
                    out[k] = Some(tape.gather_rows(hr, &idx)?);
                }
                start += n;
            }
            spatial.push(out);
        }

        for (k, t) in [(1usize, NodeType::Developer), (2, NodeType::File)] {
            let n_nodes = if k == 1 {
                g.window_devs.len()
            } else {
                g.window_files.len()
            };
            if n_nodes == 0 {
                continue;
            }
            let mut rows = Vec::new();
            let mut owners = Vec::new();
            for (o, s) in g.slices.iter().enumerate() {
                if let Some(v) = spatial[o][k] {
                    rows.push(v);
                    owners.extend_from_slice(if k == 1 { &s.dev_slots } else { &s.file_slots });
                }
            }
            let m = concat(tape, &rows)?;
            let q = lv.get(tape, layout.across(t, l));
            st[k - 1] = Some(across(tape, m, &owners, n_nodes, q)?);
        }

        for (o, s) in g.slices.iter().enumerate() {
            h[o][0] = spatial[o][0];
            h[o][1] = match (st[0], s.dev_slots.is_empty()) {
                (Some(v), false) => Some(tape.gather_rows(v, &s.dev_slots)?),
                _ => None,
            };
            h[o][2] = match (st[1], s.file_slots.is_empty()) {
                (Some(v), false) => Some(tape.gather_rows(v, &s.file_slots)?),
                _ => None,
            };
        }
    }

    let mut tables: [Option<Var>; 2] = [None, None];
    for (k, t) in [(0usize, NodeType::Developer), (1, NodeType::File)] {
        let (presence, extra, base) = if k == 0 {
            (&g.dev_presence, &g.extra_devs, base_dev)
        } else {
            (&g.file_presence, &g.extra_files, base_file)
        };
        let mut parts = Vec::new();
        if let Some(v) = st[k] {
            let c = tape.constant(DenseMatrix::from_vec(presence.len(), 1, presence.clone()));
            parts.push(tape.mul_rows(v, c)?);
        }
        if !extra.is_empty() {
            let x = tape.gather_rows(base, extra)?;
            parts.push(lv.project(tape, layout, t, x)?);
        }
        if !parts.is_empty() {
            tables[k] = Some(concat(tape, &parts)?);
        }
    }
    let dev_table = tables[0].ok_or(ModelError::EmptyCandidates)?;

    let o = layout.tw - 1;
    let l = layout.layers;
    let x = tape.constant(g.target_x.clone());
    let p = lv.project(tape, layout, NodeType::Issue, x)?;
    let ws = lv.get(tape, layout.inter_self(NodeType::Issue, o, l));
    let self_term = tape.matmul(p, ws)?;
    // Targets with neighbors are embedded from them alone; the seeded
    // feature only backs an isolated target.
    let mut keep = vec![1.0; g.target_x.rows()];
    for b in &g.target_blocks {
        for &t in &b.targets {
            keep[t] = 0.0;
        }
    }
    let keep = tape.constant(DenseMatrix::from_vec(keep.len(), 1, keep));
    let self_term = tape.mul_rows(self_term, keep)?;
    let mut rel = Vec::with_capacity(g.target_blocks.len());
    for b in &g.target_blocks {
        let table = match b.table {
            NodeType::Developer => dev_table,
            _ => tables[1]
                .ok_or_else(|| ModelError::Window("file neighbors without file table".into()))?,
        };
        let (w, bias) = layout.intra(b.relation, o, l);
        let (w, bias) = (lv.get(tape, w), lv.get(tape, bias));
        rel.push((
            intra(tape, table, &b.messages, w, bias, dropout, train, rng)?,
            b.targets.as_slice(),
        ));
    }
    let q = lv.get(tape, layout.inter_q(o, l));
    let targets = inter(tape, self_term, &rel, q)?;
    let candidates = tape.gather_rows(dev_table, &g.candidate_rows)?;
    Ok(WindowOutput {
        targets,
        candidates,
    })
}

/// Scores of `(target row, candidate row)` pairs as an `n × 1` column.
pub fn pair_scores(
    tape: &mut Tape,
    out: &WindowOutput,
    pairs: &[(usize, usize)],
) -> Result<Var, ModelError> {
    let ti: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let ci: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let a = tape.gather_rows(out.targets, &ti)?;
    let b = tape.gather_rows(out.candidates, &ci)?;
    Ok(tape.row_inner_product(a, b)?)
}

/// Eval-mode scores of every target against every candidate,
/// `n_targets × n_candidates`.
pub fn score_matrix(
    params: &Params,
    layout: &ParamLayout,
    g: &WindowGraph,
) -> Result<DenseMatrix, ModelError> {
    let mut tape = Tape::new();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let out = forward_window(&mut tape, params, layout, g, 0.0, false, &mut rng)?;
    Ok(tape.value(out.targets).matmul_t(tape.value(out.candidates)))
}

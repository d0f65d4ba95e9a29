use rand::Rng;

use super::ModelError;
use crate::autograd::{AutogradError, DenseMatrix, Tape, Var};

/// Messages of one relation: row `src[k]` of the input goes to segment
/// `seg[k]`, scaled by `weights[k]` when present.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Messages {
    pub src: Vec<usize>,
    pub seg: Vec<usize>,
    pub weights: Option<Vec<f64>>,
    pub n_segments: usize,
}

impl Messages {
    pub fn new(src: Vec<usize>, seg: Vec<usize>, weights: Vec<f64>, n_segments: usize) -> Self {
        let weights = weights.iter().any(|&w| w != 1.0).then_some(weights);
        Self {
            src,
            seg,
            weights,
            n_segments,
        }
    }
}

/// `ReLU(dropout(mean_u w_u·x_u)·W + b)` per segment.
pub(crate) fn intra<R: Rng + ?Sized>(
    tape: &mut Tape,
    x: Var,
    m: &Messages,
    w: Var,
    b: Var,
    dropout: f64,
    train: bool,
    rng: &mut R,
) -> Result<Var, AutogradError> {
    let mut g = tape.gather_rows(x, &m.src)?;
    if let Some(ws) = &m.weights {
        let col = tape.constant(DenseMatrix::from_vec(ws.len(), 1, ws.clone()));
        g = tape.mul_rows(g, col)?;
    }
    let mean = tape.segment_mean(g, &m.seg, m.n_segments)?;
    let mean = tape.dropout(mean, dropout, train, rng);
    let h = tape.matmul(mean, w)?;
    let h = tape.add_row(h, b)?;
    Ok(tape.relu(h))
}

/// `ReLU(self_term + Σ_r α_r·h_r)` with `α = softmax_r(tanh(h_r)·q)` over
/// the relations present at each node. `blocks` pairs each relation
/// embedding block with the node index of every row.
pub(crate) fn inter(
    tape: &mut Tape,
    self_term: Var,
    blocks: &[(Var, &[usize])],
    q: Var,
) -> Result<Var, AutogradError> {
    if blocks.is_empty() {
        return Ok(tape.relu(self_term));
    }
    let n = tape.shape(self_term).0;
    let vars: Vec<Var> = blocks.iter().map(|b| b.0).collect();
    let owners: Vec<usize> = blocks.iter().flat_map(|b| b.1.iter().copied()).collect();
    let all = tape.concat_rows(&vars)?;
    let t = tape.tanh(all);
    let scores = tape.matmul(t, q)?;
    let alpha = tape.segment_softmax(scores, &owners, n)?;
    let weighted = tape.mul_rows(all, alpha)?;
    let agg = tape.segment_sum(weighted, &owners, n)?;
    let h = tape.add(self_term, agg)?;
    Ok(tape.relu(h))
}

/// Attention over the slices where each node is present:
/// `Σ_t softmax_t(h_t·q)·h_t`. `owners[k]` is the node of row `k`.
pub(crate) fn across(
    tape: &mut Tape,
    rows: Var,
    owners: &[usize],
    n_nodes: usize,
    q: Var,
) -> Result<Var, AutogradError> {
    let scores = tape.matmul(rows, q)?;
    let beta = tape.segment_softmax(scores, owners, n_nodes)?;
    let weighted = tape.mul_rows(rows, beta)?;
    tape.segment_sum(weighted, owners, n_nodes)
}

fn row(v: &[f64]) -> DenseMatrix {
    DenseMatrix::from_vec(1, v.len(), v.to_vec())
}

fn stack(rows: &[Vec<f64>]) -> DenseMatrix {
    DenseMatrix::from_rows(rows)
}

/// Single-node form of the intra-relation step (no dropout):
/// `ReLU(mean_u(w_u·h_u)·W + b)`.
pub fn intra_aggregate(
    neighbors: &[Vec<f64>],
    weights: Option<&[f64]>,
    w: &DenseMatrix,
    b: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if neighbors.is_empty() {
        return Err(ModelError::Window("empty neighbor set".into()));
    }
    let mut tape = Tape::new();
    let x = tape.constant(stack(neighbors));
    let n = neighbors.len();
    let m = Messages::new(
        (0..n).collect(),
        vec![0; n],
        weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec),
        1,
    );
    let (wv, bv) = (tape.constant(w.clone()), tape.constant(row(b)));
    let out = intra(
        &mut tape,
        x,
        &m,
        wv,
        bv,
        0.0,
        false,
        &mut rand::rngs::mock::StepRng::new(0, 0),
    )?;
    Ok(tape.value(out).row(0).to_vec())
}

/// Single-node form of the inter-relation step; returns the spatial
/// embedding and the attention weights, in input order.
pub fn inter_aggregate(
    relations: &[Vec<f64>],
    own_projected: &[f64],
    w_self: &DenseMatrix,
    q: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    let mut tape = Tape::new();
    let p = tape.constant(row(own_projected));
    let ws = tape.constant(w_self.clone());
    let self_term = tape.matmul(p, ws)?;
    let qv = tape.constant(DenseMatrix::from_vec(q.len(), 1, q.to_vec()));
    if relations.is_empty() {
        let out = inter(&mut tape, self_term, &[], qv)?;
        return Ok((tape.value(out).row(0).to_vec(), Vec::new()));
    }
    let owners = vec![0; relations.len()];
    let blocks = tape.constant(stack(relations));
    let out = inter(&mut tape, self_term, &[(blocks, &owners)], qv)?;
    let t = tape.tanh(blocks);
    let s = tape.matmul(t, qv)?;
    let alpha = tape.segment_softmax(s, &owners, 1)?;
    Ok((
        tape.value(out).row(0).to_vec(),
        tape.value(alpha).values().to_vec(),
    ))
}

/// Single-node form of the across-time step; returns the fused embedding
/// and the per-slice weights.
pub fn across_time_aggregate(
    spatial: &[Vec<f64>],
    q: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
    if spatial.is_empty() {
        return Err(ModelError::Window("node absent from every slice".into()));
    }
    let mut tape = Tape::new();
    let rows = tape.constant(stack(spatial));
    let qv = tape.constant(DenseMatrix::from_vec(q.len(), 1, q.to_vec()));
    let owners = vec![0; spatial.len()];
    let out = across(&mut tape, rows, &owners, 1, qv)?;
    let s = tape.matmul(rows, qv)?;
    let beta = tape.segment_softmax(s, &owners, 1)?;
    Ok((
        tape.value(out).row(0).to_vec(),
        tape.value(beta).values().to_vec(),
    ))
}

/// Matching score: inner product.
pub fn score(issue: &[f64], developer: &[f64]) -> f64 {
    assert_eq!(issue.len(), developer.len(), "embedding lengths differ");
    issue.iter().zip(developer).map(|(a, b)| a * b).sum()
}

/// Top `n` candidates by score descending, ties by id ascending.
pub fn recommend<S: AsRef<str> + Clone>(
    scored: &[(S, f64)],
    n: usize,
) -> Result<Vec<(S, f64)>, ModelError> {
    if scored.is_empty() {
        return Err(ModelError::EmptyCandidates);
    }
    let mut v = scored.to_vec();
    v.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| a.0.as_ref().cmp(b.0.as_ref()))
    });
    v.truncate(n);
    Ok(v)
}

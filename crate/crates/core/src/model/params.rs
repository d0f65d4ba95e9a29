use rand::Rng;

use super::window::NodeUniverse;
use super::{ModelConfig, ModelError};
use crate::autograd::{DenseMatrix, ParamId, Params};
use crate::relations::{NodeType, RelationType};
use crate::rng;

/// Uniform initialization bound `1/√d`.
pub fn init_bound(d: usize) -> f64 {
    1.0 / (d as f64).sqrt()
}

/// Fixed, non-trainable initial embedding of an issue, reproducible from
/// `(seed, issue id)` alone.
pub fn issue_embedding(seed: u64, issue_id: &str, d: usize) -> Vec<f64> {
    let a = init_bound(d);
    let mut r = rng::substream(seed, &format!("issue:{issue_id}"));
    (0..d).map(|_| r.gen_range(-a..a)).collect()
}

/// Total scalar count for a configuration and node universe.
pub fn parameter_count(c: &ModelConfig, developers: usize, files: usize) -> usize {
    let (d, tw, l) = (c.hidden_dim, c.tw, c.layers);
    let dense = d * d + d;
    3 * dense
        + RelationType::ALL.len() * tw * l * dense
        + tw * l * d
        + 3 * tw * l * d * d
        + 2 * l * d
        + (developers + files) * d
}

/// Resolved parameter ids, indexed by role.
#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub d: usize,
    pub layers: usize,
    pub tw: usize,
    proj_w: Vec<ParamId>,
    proj_b: Vec<ParamId>,
    intra_w: Vec<ParamId>,
    intra_b: Vec<ParamId>,
    inter_q: Vec<ParamId>,
    inter_self: Vec<ParamId>,
    across: Vec<ParamId>,
    pub base_developer: ParamId,
    pub base_file: ParamId,
}

fn names(c: &ModelConfig) -> Vec<(String, usize, usize)> {
    let d = c.hidden_dim;
    let mut out = Vec::new();
    for t in NodeType::ALL {
        out.push((format!("proj.{t}.w"), d, d));
        out.push((format!("proj.{t}.b"), 1, d));
    }
    for r in RelationType::ALL {
        for o in 0..c.tw {
            for l in 1..=c.layers {
                out.push((format!("intra.{r}.o{o}.l{l}.w"), d, d));
                out.push((format!("intra.{r}.o{o}.l{l}.b"), 1, d));
            }
        }
    }
    for o in 0..c.tw {
        for l in 1..=c.layers {
            out.push((format!("inter.q.o{o}.l{l}"), d, 1));
        }
    }
    for t in NodeType::ALL {
        for o in 0..c.tw {
            for l in 1..=c.layers {
                out.push((format!("inter.self.{t}.o{o}.l{l}"), d, d));
            }
        }
    }
    for t in [NodeType::Developer, NodeType::File] {
        for l in 1..=c.layers {
            out.push((format!("across.{t}.l{l}"), d, 1));
        }
    }
    out
}

/// Every parameter drawn from `Uniform(−1/√d, 1/√d)` on the `init` stream.
pub fn init_params(c: &ModelConfig, universe: &NodeUniverse) -> Result<Params, ModelError> {
    c.validate()?;
    let d = c.hidden_dim;
    let a = init_bound(d);
    let mut r = rng::substream(c.seed, rng::INIT);
    let mut draw = |rows: usize, cols: usize| {
        DenseMatrix::from_vec(
            rows,
            cols,
            (0..rows * cols).map(|_| r.gen_range(-a..a)).collect(),
        )
    };
    let mut p = Params::new();
    for (name, rows, cols) in names(c) {
        p.insert(name, draw(rows, cols));
    }
    p.insert(
        "base.developer",
        draw(universe.developers().len().max(1), d),
    );
    p.insert("base.file", draw(universe.files().len().max(1), d));
    Ok(p)
}

impl ParamLayout {
    /// Resolves ids and checks every shape against `c` and `universe`.
    pub fn new(c: &ModelConfig, universe: &NodeUniverse, p: &Params) -> Result<Self, ModelError> {
        let d = c.hidden_dim;
        let get = |name: &str, rows: usize, cols: usize| -> Result<ParamId, ModelError> {
            let id = p
                .id(name)
                .ok_or_else(|| ModelError::Param(name.to_string()))?;
            if p.get(id).shape() != (rows, cols) {
                return Err(ModelError::Param(format!(
                    "{name}: shape {:?}, expected {:?}",
                    p.get(id).shape(),
                    (rows, cols)
                )));
            }
            Ok(id)
        };
        let mut ids = Vec::new();
        for (name, rows, cols) in names(c) {
            ids.push(get(&name, rows, cols)?);
        }
        let mut it = ids.into_iter();
        let mut take = |n: usize| -> Vec<ParamId> { it.by_ref().take(n).collect() };
        let (tw, l) = (c.tw, c.layers);
        let proj = take(6);
        let intra = take(RelationType::ALL.len() * tw * l * 2);
        let inter_q = take(tw * l);
        let inter_self = take(3 * tw * l);
        let across = take(2 * l);
        Ok(Self {
            d,
            layers: l,
            tw,
            proj_w: proj.iter().step_by(2).copied().collect(),
            proj_b: proj.iter().skip(1).step_by(2).copied().collect(),
            intra_w: intra.iter().step_by(2).copied().collect(),
            intra_b: intra.iter().skip(1).step_by(2).copied().collect(),
            inter_q,
            inter_self,
            across,
            base_developer: get("base.developer", universe.developers().len().max(1), d)?,
            base_file: get("base.file", universe.files().len().max(1), d)?,
        })
    }

    pub fn proj(&self, t: NodeType) -> (ParamId, ParamId) {
        (self.proj_w[t.index()], self.proj_b[t.index()])
    }

    /// `offset` is 0-based, `layer` 1-based.
    pub fn intra(&self, r: RelationType, offset: usize, layer: usize) -> (ParamId, ParamId) {
        let i = (r.index() * self.tw + offset) * self.layers + (layer - 1);
        (self.intra_w[i], self.intra_b[i])
    }

    pub fn inter_q(&self, offset: usize, layer: usize) -> ParamId {
        self.inter_q[offset * self.layers + layer - 1]
    }

    pub fn inter_self(&self, t: NodeType, offset: usize, layer: usize) -> ParamId {
        self.inter_self[(t.index() * self.tw + offset) * self.layers + layer - 1]
    }

    /// Panics for issue nodes, which have no temporal neighbors.
    pub fn across(&self, t: NodeType, layer: usize) -> ParamId {
        let k = match t {
            NodeType::Developer => 0,
            NodeType::File => 1,
            NodeType::Issue => panic!("issues have no across-time parameters"),
        };
        self.across[k * self.layers + layer - 1]
    }
}

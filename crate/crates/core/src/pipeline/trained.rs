use std::collections::BTreeSet;

use super::{PipelineError, RunConfig};
use crate::autograd::{Checkpoint, Params};
use crate::htg::{chronological_split, structure_hash, window_batches, Htg, Split};
use crate::model::{
    score_matrix, ModelConfig, NodeUniverse, ParamLayout, TargetIssue, WindowGraph,
};
use crate::training::{train, TrainHistory};

/// Parameters bound to the graph they were trained on.
pub struct TrainedModel {
    pub config: ModelConfig,
    pub split: Split,
    pub universe: NodeUniverse,
    /// Ranking pool: developers of the training slices.
    pub candidates: Vec<String>,
    pub params: Params,
    pub layout: ParamLayout,
}

fn meta_get<'a>(c: &'a Checkpoint, key: &str) -> Result<&'a str, PipelineError> {
    c.meta(key)
        .ok_or_else(|| PipelineError::Mismatch(format!("checkpoint lacks `{key}`")))
}

fn meta_parse<T: std::str::FromStr>(c: &Checkpoint, key: &str) -> Result<T, PipelineError> {
    meta_get(c, key)?
        .parse()
        .map_err(|_| PipelineError::Mismatch(format!("bad `{key}` in checkpoint")))
}

fn pool_fingerprint(devs: &[String]) -> String {
    crate::htg::hex_sha256(devs.join("\n").as_bytes())
}

impl TrainedModel {
    /// Universe, pool and split that a run on `htg` uses.
    pub fn frame(
        htg: &Htg,
        config: &RunConfig,
    ) -> Result<(Split, NodeUniverse, Vec<String>), PipelineError> {
        let split = chronological_split(htg.t(), config.split)?;
        let universe = NodeUniverse::from_htg(htg, 1..=*split.validation.end());
        let candidates: Vec<String> = htg.developers_in(split.train.clone()).into_iter().collect();
        if candidates.is_empty() {
            return Err(PipelineError::Empty(
                "no developer in the training slices".into(),
            ));
        }
        Ok((split, universe, candidates))
    }

    pub fn to_checkpoint(
        &self,
        htg: &Htg,
        params: &Params,
        extra: &[(&str, String)],
    ) -> Checkpoint {
        let c = &self.config;
        let mut meta: Vec<(String, String)> = vec![
            ("hidden_dim".into(), c.hidden_dim.to_string()),
            ("layers".into(), c.layers.to_string()),
            ("tw".into(), c.tw.to_string()),
            ("dropout".into(), c.dropout.to_string()),
            ("seed".into(), c.seed.to_string()),
            ("train_end".into(), self.split.train.end().to_string()),
            (
                "validation_end".into(),
                self.split.validation.end().to_string(),
            ),
            ("universe".into(), self.universe.fingerprint()),
            ("candidates".into(), pool_fingerprint(&self.candidates)),
            ("graph".into(), structure_hash(htg)),
        ];
        meta.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        Checkpoint {
            meta,
            params: params.clone(),
        }
    }

    /// Rebinds a checkpoint to `htg`, which must be the graph it was
    /// trained on.
    pub fn from_checkpoint(
        ckpt: Checkpoint,
        htg: &Htg,
        config: &RunConfig,
    ) -> Result<Self, PipelineError> {
        let model = ModelConfig {
            hidden_dim: meta_parse(&ckpt, "hidden_dim")?,
            layers: meta_parse(&ckpt, "layers")?,
            tw: meta_parse(&ckpt, "tw")?,
            dropout: meta_parse(&ckpt, "dropout")?,
            seed: meta_parse(&ckpt, "seed")?,
        };
        model.validate()?;
        let graph = meta_get(&ckpt, "graph")?;
        if graph != structure_hash(htg) {
            return Err(PipelineError::Mismatch(format!(
                "trained on graph {graph}, given {}",
                structure_hash(htg)
            )));
        }
        let (split, universe, candidates) = Self::frame(htg, config)?;
        let train_end: usize = meta_parse(&ckpt, "train_end")?;
        if train_end != *split.train.end() {
            return Err(PipelineError::Mismatch(format!(
                "trained with train slices 1..={train_end}, config gives {:?}",
                split.train
            )));
        }
        if meta_get(&ckpt, "universe")? != universe.fingerprint()
            || meta_get(&ckpt, "candidates")? != pool_fingerprint(&candidates)
        {
            return Err(PipelineError::Mismatch("node universe differs".into()));
        }
        let layout = ParamLayout::new(&model, &universe, &ckpt.params)?;
        Ok(Self {
            config: model,
            split,
            universe,
            candidates,
            params: ckpt.params,
            layout,
        })
    }

    /// Full candidate ranking per target, best first, ties by id.
    pub fn rank(
        &self,
        htg: &Htg,
        input_slices: &[usize],
        targets: &[TargetIssue],
    ) -> Result<Vec<Vec<(String, f64)>>, PipelineError> {
        let g = WindowGraph::new(
            htg,
            input_slices,
            targets,
            &self.candidates,
            &self.universe,
            self.config.hidden_dim,
            self.config.seed,
        )?;
        let s = score_matrix(&self.params, &self.layout, &g)?;
        let mut out = Vec::with_capacity(targets.len());
        for id in targets.iter().map(|t| &t.id) {
            let row = g
                .target_ids()
                .iter()
                .position(|x| x == id)
                .expect("target row");
            let scored: Vec<(String, f64)> = g
                .candidates()
                .iter()
                .cloned()
                .zip(s.row(row).iter().copied())
                .collect();
            out.push(crate::model::recommend(&scored, scored.len())?);
        }
        Ok(out)
    }

    pub fn pool(&self) -> BTreeSet<&str> {
        self.candidates.iter().map(String::as_str).collect()
    }
}

/// Outcome of [`fit`]: the best model plus the final parameters.
pub struct Fitted {
    pub model: TrainedModel,
    pub last: Params,
    pub history: TrainHistory,
}

/// Trains a fresh model on `htg` with the settings of `config`.
pub fn fit(htg: &Htg, config: &RunConfig) -> Result<Fitted, PipelineError> {
    config.validate()?;
    let (split, universe, candidates) = TrainedModel::frame(htg, config)?;
    let plan = window_batches(htg, config.model.tw, &split)?;
    let out = train(
        htg,
        &plan,
        &universe,
        &candidates,
        &config.model,
        &config.train,
    )?;
    Ok(Fitted {
        model: TrainedModel {
            config: config.model,
            split,
            universe,
            candidates,
            params: out.best,
            layout: out.layout,
        },
        last: out.last,
        history: out.history,
    })
}

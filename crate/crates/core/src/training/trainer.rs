use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use rand::Rng;

use super::history::{EarlyStopping, EpochRecord, TrainHistory};
use super::sampling::sample_negatives;
use super::TrainError;
use crate::autograd::{Adam, AdamConfig, Params, Tape, Var};
use crate::htg::{Htg, WindowBatch, WindowPlan};
use crate::model::{
    forward_window, init_params, pair_scores, ModelConfig, NodeUniverse, ParamLayout, TargetIssue,
    WindowGraph, WindowOutput,
};
use crate::rng::{substream, DROPOUT, NEGATIVES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub patience: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub margin: f64,
    /// Negatives drawn per positive pair.
    pub negatives: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            patience: 10,
            lr: 5e-3,
            weight_decay: 5e-4,
            margin: 1.0,
            negatives: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let ok = self.epochs >= 1
            && self.patience >= 1
            && self.lr > 0.0
            && self.weight_decay >= 0.0
            && self.margin > 0.0
            && self.negatives >= 1;
        if ok {
            Ok(())
        } else {
            Err(TrainError::Config(format!("{self:?}")))
        }
    }
}

/// `max(0, margin − pos + neg)`.
pub fn hinge(pos: f64, neg: f64, margin: f64) -> f64 {
    (margin - pos + neg).max(0.0)
}

/// A window ready for repeated forward passes.
pub struct PreparedBatch {
    pub target_slice: usize,
    pub graph: WindowGraph,
    /// `(target row, candidate row)` of every positive whose fixer is a
    /// candidate.
    pub positives: Vec<(usize, usize)>,
    /// Fixers of each target row; never drawn as negatives.
    pub fixers: Vec<BTreeSet<String>>,
}

impl PreparedBatch {
    /// `(target, positive, negative)` rows; `k` negatives per positive.
    pub fn triples<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<(usize, usize, usize)> {
        let rows: HashMap<&str, usize> = self
            .graph
            .candidates()
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut out = Vec::with_capacity(self.positives.len() * k);
        for &(t, p) in &self.positives {
            for n in sample_negatives(&self.fixers[t], self.graph.candidates(), k, rng) {
                out.push((t, p, rows[n]));
            }
        }
        out
    }
}

/// Builds the window of `batch` over the labeled target issues that have
/// at least one fixer among `candidates`; `None` when there is none.
pub fn prepare_batch(
    htg: &Htg,
    batch: &WindowBatch,
    candidates: &[String],
    universe: &NodeUniverse,
    config: &ModelConfig,
) -> Result<Option<PreparedBatch>, TrainError> {
    let cand_set: BTreeSet<&str> = candidates.iter().map(String::as_str).collect();
    let mut by_issue: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (i, f) in &batch.positives {
        by_issue.entry(i).or_default().insert(f.clone());
    }
    by_issue.retain(|_, fx| fx.iter().any(|f| cand_set.contains(f.as_str())));
    if by_issue.is_empty() {
        return Ok(None);
    }
    let mut all = TargetIssue::from_snapshot(htg.snapshot(batch.target_slice));
    let targets: Vec<TargetIssue> = by_issue
        .keys()
        .map(|i| all.remove(*i).expect("labeled issue is in its slice"))
        .collect();
    let graph = WindowGraph::new(
        htg,
        &batch.input_slices,
        &targets,
        candidates,
        universe,
        config.hidden_dim,
        config.seed,
    )?;
    let rows: HashMap<&str, usize> = graph
        .candidates()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut positives = Vec::new();
    let mut fixers = Vec::new();
    for (t, id) in graph.target_ids().iter().enumerate() {
        let fx = &by_issue[id.as_str()];
        positives.extend(
            fx.iter()
                .filter_map(|f| rows.get(f.as_str()))
                .map(|&c| (t, c)),
        );
        fixers.push(fx.clone());
    }
    Ok(Some(PreparedBatch {
        target_slice: batch.target_slice,
        graph,
        positives,
        fixers,
    }))
}

/// Mean hinge loss over `(target, positive, negative)` rows.
pub fn batch_loss(
    tape: &mut Tape,
    out: &WindowOutput,
    triples: &[(usize, usize, usize)],
    margin: f64,
) -> Result<Var, TrainError> {
    if triples.is_empty() {
        return Err(TrainError::NoTriples);
    }
    let pos: Vec<(usize, usize)> = triples.iter().map(|&(t, p, _)| (t, p)).collect();
    let neg: Vec<(usize, usize)> = triples.iter().map(|&(t, _, n)| (t, n)).collect();
    let sp = pair_scores(tape, out, &pos)?;
    let sn = pair_scores(tape, out, &neg)?;
    let minus_sp = tape.scale(sp, -1.0);
    let diff = tape.add(sn, minus_sp)?;
    let shifted = tape.add_scalar(diff, margin);
    let h = tape.relu(shifted);
    Ok(tape.mean(h))
}

fn eval_loss(
    params: &Params,
    layout: &ParamLayout,
    b: &PreparedBatch,
    triples: &[(usize, usize, usize)],
    margin: f64,
) -> Result<Option<f64>, TrainError> {
    if triples.is_empty() {
        return Ok(None);
    }
    let mut tape = Tape::new();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let out = forward_window(&mut tape, params, layout, &b.graph, 0.0, false, &mut rng)?;
    let loss = batch_loss(&mut tape, &out, triples, margin)?;
    Ok(Some(tape.value(loss).get(0, 0)))
}

/// Mean dropout-free loss over batches with fixed triples; `None` when no
/// batch has a triple.
pub fn validation_loss(
    params: &Params,
    layout: &ParamLayout,
    batches: &[(PreparedBatch, Vec<(usize, usize, usize)>)],
    margin: f64,
) -> Result<Option<f64>, TrainError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (b, triples) in batches {
        if let Some(l) = eval_loss(params, layout, b, triples, margin)? {
            sum += l;
            n += 1;
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

pub struct TrainOutcome {
    /// Parameters after the epoch with the lowest validation loss.
    pub best: Params,
    /// Parameters after the last completed epoch.
    pub last: Params,
    pub layout: ParamLayout,
    pub history: TrainHistory,
}

/// Trains from a fresh initialization. Batches are visited in chronological
/// order with one Adam step each. When the validation split has no usable
/// batch, training loss drives early stopping. A non-finite loss or gradient
/// stops training and keeps the last good parameters.
pub fn train(
    htg: &Htg,
    plan: &WindowPlan,
    universe: &NodeUniverse,
    candidates: &[String],
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    model.validate()?;
    config.validate()?;
    let mut params = init_params(model, universe)?;
    let layout = ParamLayout::new(model, universe, &params)?;

    let mut train_batches = Vec::new();
    for b in &plan.train {
        if let Some(p) = prepare_batch(htg, b, candidates, universe, model)? {
            train_batches.push(p);
        }
    }
    if train_batches.is_empty() {
        return Err(TrainError::NoPositives(
            plan.train.last().map_or(0, |b| b.target_slice),
        ));
    }
    // Validation pairs every positive with every non-fixer candidate, so the
    // stopping signal carries no sampling noise.
    let mut val_rng = substream(model.seed, &format!("{NEGATIVES}:validation"));
    let mut val_batches = Vec::new();
    for b in &plan.validation {
        if let Some(p) = prepare_batch(htg, b, candidates, universe, model)? {
            let triples = p.triples(candidates.len(), &mut val_rng);
            val_batches.push((p, triples));
        }
    }

    let mut neg_rng = substream(model.seed, NEGATIVES);
    let mut drop_rng = substream(model.seed, DROPOUT);
    let mut adam = Adam::new(AdamConfig {
        lr: config.lr,
        weight_decay: config.weight_decay,
        ..AdamConfig::default()
    });
    let mut stopping = EarlyStopping::new(config.patience);
    let mut history = TrainHistory::default();
    let mut best = params.clone();

    'epochs: for epoch in 1..=config.epochs {
        let started = Instant::now();
        let snapshot = params.clone();
        let mut sum = 0.0;
        let mut n = 0usize;
        for b in &train_batches {
            let triples = b.triples(config.negatives, &mut neg_rng);
            if triples.is_empty() {
                continue;
            }
            let mut tape = Tape::new();
            let out = forward_window(
                &mut tape,
                &params,
                &layout,
                &b.graph,
                model.dropout,
                true,
                &mut drop_rng,
            )?;
            let loss = batch_loss(&mut tape, &out, &triples, config.margin)?;
            let value = tape.value(loss).get(0, 0);
            let finite = value.is_finite()
                && match adam.step(&mut params, &tape.backward(loss)?) {
                    Ok(()) => true,
                    Err(crate::autograd::AutogradError::NonFiniteGradient { .. }) => false,
                    Err(e) => return Err(e.into()),
                };
            if !finite || !params.all_finite() {
                history.aborted = Some(format!(
                    "non-finite loss or gradient at epoch {epoch}, slice {}",
                    b.target_slice
                ));
                params = snapshot;
                break 'epochs;
            }
            sum += value;
            n += 1;
        }
        let train_loss = if n > 0 { sum / n as f64 } else { 0.0 };
        let val =
            validation_loss(&params, &layout, &val_batches, config.margin)?.unwrap_or(train_loss);
        if !val.is_finite() {
            history.aborted = Some(format!("non-finite validation loss at epoch {epoch}"));
            params = snapshot;
            break;
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_loss: val,
            seconds: started.elapsed().as_secs_f64(),
        });
        if stopping.observe(epoch, val) {
            best = params.clone();
        }
        if stopping.should_stop() {
            history.stopped_early = epoch < config.epochs;
            break;
        }
    }
    history.best_epoch = stopping.best_epoch();
    Ok(TrainOutcome {
        best,
        last: params,
        layout,
        history,
    })
}

use std::collections::{BTreeMap, BTreeSet};

use super::{fit, Pairing, PipelineError, RunConfig, TrainedModel};
use crate::corpus::{Corpus, IssueRecord};
use crate::evaluation::{
    activity_table, baseline_predictions, cliffs_delta, frequency_baseline, group_recall, mrr,
    prediction_overlap, split_core_noncore, topn_hit_rate, wilcoxon_signed_rank, EvalReport,
    Prediction, PredictionSet,
};
use crate::htg::{slice_timeline, window_batches, Htg, Split};
use crate::model::TargetIssue;
use crate::relations::{
    build_tfidf_index, extract_create_remove, file_documents, similar_edges_text_filtered,
    FileLifetimes, NodeRef, RelationConfig, RelationType,
};

const DAY: f64 = 86_400.0;

/// Model rankings for every labeled issue of the test slices.
pub fn test_predictions(model: &TrainedModel, htg: &Htg) -> Result<PredictionSet, PipelineError> {
    let plan = window_batches(htg, model.config.tw, &model.split)?;
    let mut preds = Vec::new();
    for b in &plan.test {
        let mut all = TargetIssue::from_snapshot(htg.snapshot(b.target_slice));
        let targets: Vec<TargetIssue> = b
            .target_issues()
            .into_iter()
            .map(|i| all.remove(i).expect("labeled issue is in its slice"))
            .collect();
        if targets.is_empty() {
            continue;
        }
        let ranked = model.rank(htg, &b.input_slices, &targets)?;
        for (t, ranking) in targets.iter().zip(ranked) {
            preds.push(Prediction {
                issue_id: t.id.clone(),
                ranking,
                fixers: htg.issue(&t.id).expect("indexed").fixers.clone(),
            });
        }
    }
    if preds.is_empty() {
        return Err(PipelineError::Empty(
            "no labeled issue in the test slices".into(),
        ));
    }
    Ok(PredictionSet::new("model", preds))
}

/// Frequency-baseline rankings for the issues of `like`, from training
/// fixes decayed up to the first test slice.
pub fn baseline_set(
    htg: &Htg,
    split: &Split,
    candidates: &[String],
    half_life_days: Option<f64>,
    like: &PredictionSet,
) -> PredictionSet {
    let now = htg.snapshot(*split.test.start()).start.unwrap_or_else(|| {
        htg.issues()
            .values()
            .map(|i| i.created_at)
            .max()
            .unwrap_or(0)
    });
    let ranking = frequency_baseline(
        &htg.fix_history(split.train.clone()),
        now,
        half_life_days.map(|d| d * DAY),
    );
    let issues: Vec<(String, BTreeSet<String>)> = like
        .predictions
        .iter()
        .map(|p| (p.issue_id.clone(), p.fixers.clone()))
        .collect();
    PredictionSet::new(
        "baseline",
        baseline_predictions(&ranking, candidates, &issues),
    )
}

fn paired(set: &PredictionSet, pairing: Pairing) -> Vec<f64> {
    set.predictions
        .iter()
        .map(|p| match pairing {
            Pairing::ReciprocalRank => p.reciprocal_rank(),
            Pairing::Top1 => f64::from(u8::from(p.hit_at(1))),
        })
        .collect()
}

fn join<'a, I: IntoIterator<Item = &'a String>>(v: I) -> String {
    let s: Vec<&str> = v.into_iter().map(String::as_str).collect();
    if s.is_empty() {
        "-".into()
    } else {
        s.join(",")
    }
}

/// Scores `model` on the test slices of `htg` against the frequency
/// baseline. `corpus` enables the activity section; `inputs` lists
/// `(artifact, content hash)` pairs echoed into the report.
pub fn evaluate(
    htg: &Htg,
    model: &TrainedModel,
    config: &RunConfig,
    corpus: Option<&Corpus>,
    inputs: &[(String, String)],
) -> Result<EvalReport, PipelineError> {
    let preds = test_predictions(model, htg)?;
    let base = baseline_set(
        htg,
        &model.split,
        &model.candidates,
        config.baseline_half_life_days,
        &preds,
    );
    let mut r = EvalReport::default();
    // The checkpoint, not the caller, decides the model settings.
    let echoed = RunConfig {
        model: model.config,
        ..config.clone()
    };
    for (k, v) in echoed.pairs() {
        r.set("config", k, v);
    }
    r.section_mut("inputs");
    for (k, v) in inputs {
        r.set("inputs", k, v);
    }

    let m = mrr(&preds)?;
    r.set("metrics", "issues", preds.len());
    r.set("metrics", "candidates", model.candidates.len());
    r.set("metrics", "unreachable", m.unreachable);
    for set in [&preds, &base] {
        for &n in &config.topn {
            r.set(
                "metrics",
                &format!("{}.top{n}", set.system),
                topn_hit_rate(set, n)?,
            );
        }
        r.set("metrics", &format!("{}.mrr", set.system), mrr(set)?.value);
    }

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &preds.predictions {
        for f in &p.fixers {
            *counts.entry(f.clone()).or_default() += 1;
        }
    }
    let split = split_core_noncore(&counts);
    r.set("groups", "core", join(&split.core));
    r.set("groups", "non_core", join(&split.non_core));
    for set in [&preds, &base] {
        let g = group_recall(set, &split);
        let s = &set.system;
        r.set_opt("groups", &format!("{s}.recall_core"), g.core);
        r.set_opt("groups", &format!("{s}.recall_non_core"), g.non_core);
        r.set("groups", &format!("{s}.t_core"), g.t_core);
        r.set("groups", &format!("{s}.f_core"), g.f_core);
        r.set("groups", &format!("{s}.t_non_core"), g.t_non_core);
        r.set("groups", &format!("{s}.f_non_core"), g.f_non_core);
    }

    let (x, y) = (
        paired(&preds, config.pairing),
        paired(&base, config.pairing),
    );
    let w = wilcoxon_signed_rank(&x, &y)?;
    let (delta, magnitude) = cliffs_delta(&x, &y)?;
    r.set("statistics", "pairing", config.pairing.as_str());
    r.set("statistics", "wilcoxon.n", w.n);
    r.set("statistics", "wilcoxon.w_plus", w.w_plus);
    r.set("statistics", "wilcoxon.w_minus", w.w_minus);
    r.set("statistics", "wilcoxon.w", w.w);
    r.set("statistics", "wilcoxon.p", w.p_value);
    r.set("statistics", "wilcoxon.exact", w.exact);
    r.set("statistics", "wilcoxon.degenerate", w.degenerate);
    r.set("statistics", "cliffs.delta", delta);
    r.set("statistics", "cliffs.magnitude", magnitude);
    for (subset, n) in prediction_overlap(&[preds.clone(), base.clone()])? {
        r.set("statistics", &format!("overlap.{}", subset.join("+")), n);
    }

    if let Some(corpus) = corpus {
        let stages = slice_timeline(
            htg.issues()
                .iter()
                .map(|(id, i)| (id.as_str(), i.created_at)),
            config.activity_stages.min(htg.issues().len()),
        )?;
        let starts: Vec<i64> = stages.slices().iter().map(|s| s.start).collect();
        let table = activity_table(corpus.commits(), &starts);
        let mut header = vec!["developer".to_string()];
        header.extend((1..=starts.len()).map(|s| format!("stage{s}")));
        r.row("activity", &header);
        let mut totals = vec!["commits".to_string()];
        totals.extend(table.commits_per_stage.iter().map(usize::to_string));
        r.row("activity", &totals);
        for (dev, pct) in &table.rows {
            let mut row = vec![dev.clone()];
            row.extend(
                pct.iter()
                    .map(|p| p.map_or("-".into(), |v| format!("{v:.1}"))),
            );
            r.row("activity", &row);
        }
    }

    if config.rankings {
        let top = config.topn.iter().copied().max().unwrap_or(5);
        for p in &preds.predictions {
            let ranked: Vec<String> = p
                .ranking
                .iter()
                .take(top)
                .map(|(d, s)| format!("{d}:{s:.6}"))
                .collect();
            r.row(
                "rankings",
                &[p.issue_id.clone(), join(&p.fixers), ranked.join(",")],
            );
        }
    }
    Ok(r)
}

/// Ranks an issue that is not in the graph, embedded from its reporter,
/// any corpus comments and its most similar existing files, using the last
/// `tw` slices as input.
pub fn rank_adhoc(
    model: &TrainedModel,
    htg: &Htg,
    corpus: &Corpus,
    issue: &IssueRecord,
    relations: RelationConfig,
) -> Result<Vec<(String, f64)>, PipelineError> {
    let mut neighbors = vec![(
        RelationType::Report,
        NodeRef::developer(&issue.reporter),
        1.0,
    )];
    let mut seen = BTreeSet::new();
    for c in corpus.comments_for(&issue.issue_id) {
        if seen.insert(c.author.clone()) {
            neighbors.push((RelationType::Comment, NodeRef::developer(&c.author), 1.0));
        }
    }
    let index = build_tfidf_index(file_documents(corpus));
    let lifetimes = FileLifetimes::from_edges(&extract_create_remove(corpus.commits()));
    for e in similar_edges_text_filtered(issue, &index, relations.k, relations.tau, |f| {
        lifetimes.exists(f, issue.created_at)
    }) {
        neighbors.push((RelationType::Similar, e.dst, e.weight));
    }
    let t = htg.t();
    let tw = model.config.tw.min(t);
    let inputs: Vec<usize> = (t + 1 - tw..=t).collect();
    let target = TargetIssue {
        id: issue.issue_id.clone(),
        neighbors,
    };
    Ok(model.rank(htg, &inputs, &[target])?.remove(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tw: usize,
    /// `(n, hit rate)` per configured top-N.
    pub top: Vec<(usize, f64)>,
    pub mrr: f64,
    pub epochs: usize,
    pub best_epoch: usize,
}

fn sweep_one(htg: &Htg, config: &RunConfig, tw: usize) -> Result<SweepRow, PipelineError> {
    let mut c = config.clone();
    c.model.tw = tw;
    let fitted = fit(htg, &c)?;
    let preds = test_predictions(&fitted.model, htg)?;
    Ok(SweepRow {
        tw,
        top: c
            .topn
            .iter()
            .map(|&n| Ok((n, topn_hit_rate(&preds, n)?)))
            .collect::<Result<_, PipelineError>>()?,
        mrr: mrr(&preds)?.value,
        epochs: fitted.history.epochs.len(),
        best_epoch: fitted.history.best_epoch,
    })
}

/// Trains and tests one model per window size. With `parallel`, each size
/// runs on its own thread.
pub fn sweep_window(
    htg: &Htg,
    config: &RunConfig,
    tws: &[usize],
    parallel: bool,
) -> Result<Vec<SweepRow>, PipelineError> {
    if !parallel {
        return tws.iter().map(|&tw| sweep_one(htg, config, tw)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = tws
            .iter()
            .map(|&tw| s.spawn(move || sweep_one(htg, config, tw)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

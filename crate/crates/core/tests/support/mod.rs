//! Independent oracles and fixtures shared by the integration tests and the
//! acceptance harness.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use htgtriage_core::autograd::{finite_diff_check, GradCheckReport, Gradients, Params, Tape};
use htgtriage_core::corpus::{
    cohens_kappa, relabel_issue, ChangeType, CommitRecord, DevStats, DeveloperStats, EventRecord,
    FileChange, IssueRecord, IssueState, LabelRow, LabelRule,
};
use htgtriage_core::evaluation::{
    cliffs_delta, mrr, topn_hit_rate, wilcoxon_signed_rank, Magnitude, Prediction, PredictionSet,
};
use htgtriage_core::htg::{chronological_split, slice_timeline, Htg, SplitRatios};
use htgtriage_core::model::{
    forward_window, init_params, ModelConfig, NodeUniverse, ParamLayout, TargetIssue, WindowGraph,
};
use htgtriage_core::relations::{Edge, NodeRef, Provenance, RelationType};
use htgtriage_core::training::batch_loss;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- metrics

/// Fraction `num / den` reduced to lowest terms, for exact comparisons.
fn ratio(num: i64, den: i64) -> (i64, i64) {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let g = gcd(num, den).max(1);
    (num / g, den / g)
}

fn oracle_first_hit(p: &Prediction) -> Option<usize> {
    for (i, (d, _)) in p.ranking.iter().enumerate() {
        if p.fixers.iter().any(|f| f == d) {
            return Some(i + 1);
        }
    }
    None
}

fn oracle_mrr(set: &PredictionSet) -> f64 {
    let mut sum = 0.0;
    for p in &set.predictions {
        if let Some(r) = oracle_first_hit(p) {
            sum += 1.0 / r as f64;
        }
    }
    sum / set.predictions.len() as f64
}

/// Hits in the first `n`, as an exact fraction of the issue count.
fn oracle_topn(set: &PredictionSet, n: usize) -> (i64, i64) {
    let hits = set
        .predictions
        .iter()
        .filter(|p| p.ranking.iter().take(n).any(|(d, _)| p.fixers.contains(d)))
        .count();
    ratio(hits as i64, set.predictions.len() as i64)
}

fn oracle_cliffs(x: &[f64], y: &[f64]) -> (i64, i64) {
    let mut dom = 0i64;
    for a in x {
        for b in y {
            if a > b {
                dom += 1;
            } else if a < b {
                dom -= 1;
            }
        }
    }
    ratio(dom, (x.len() * y.len()) as i64)
}

fn oracle_magnitude(num: i64, den: i64) -> Magnitude {
    let a = num.abs() as f64 / den as f64;
    match a {
        a if a >= 0.474 => Magnitude::Large,
        a if a >= 0.33 => Magnitude::Medium,
        a if a >= 0.147 => Magnitude::Small,
        _ => Magnitude::Negligible,
    }
}

/// Kappa from a contingency count, as an exact fraction; `None` when chance
/// agreement is 1.
fn oracle_kappa(a: &[u8], b: &[u8]) -> Option<(i64, i64)> {
    let n = a.len() as i64;
    let mut table = [[0i64; 4]; 4];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1;
    }
    let agree: i64 = (0..4).map(|k| table[k][k]).sum();
    let chance: i64 = (0..4)
        .map(|k| {
            let row: i64 = table[k].iter().sum();
            let col: i64 = (0..4).map(|r| table[r][k]).sum();
            row * col
        })
        .sum();
    // κ = (agree/n − chance/n²) / (1 − chance/n²)
    let den = n * n - chance;
    (den != 0).then(|| ratio(agree * n - chance, den))
}

/// Signed-rank statistics and exact two-sided p-value by enumerating every
/// sign assignment. Ranks are doubled to stay integral.
fn oracle_wilcoxon(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|v| *v != 0.0)
        .collect();
    if d.is_empty() {
        return None;
    }
    let doubled: Vec<i64> = d
        .iter()
        .map(|v| {
            let less = d.iter().filter(|w| w.abs() < v.abs()).count() as i64;
            let equal = d.iter().filter(|w| w.abs() == v.abs()).count() as i64;
            2 * less + equal + 1
        })
        .collect();
    let plus: i64 = d
        .iter()
        .zip(&doubled)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let minus: i64 = d
        .iter()
        .zip(&doubled)
        .filter(|(v, _)| **v < 0.0)
        .map(|(_, r)| r)
        .sum();
    let w = plus.min(minus);
    let m = d.len();
    let mut at_most = 0u64;
    for mask in 0u32..(1 << m) {
        let s: i64 = (0..m)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| doubled[i])
            .sum();
        if s <= w {
            at_most += 1;
        }
    }
    let p = (2.0 * at_most as f64 / (1u64 << m) as f64).min(1.0);
    Some((plus as f64 / 2.0, minus as f64 / 2.0, p))
}

fn random_predictions(rng: &mut ChaCha8Rng) -> PredictionSet {
    let pool: Vec<String> = (0..12).map(|i| format!("d{i}")).collect();
    let n = rng.gen_range(1..=10);
    let preds = (0..n)
        .map(|i| {
            let mut ranked = pool.clone();
            ranked.shuffle(rng);
            ranked.truncate(rng.gen_range(1..=10));
            let k = rng.gen_range(1..=3);
            let fixers: BTreeSet<String> = pool.choose_multiple(rng, k).cloned().collect();
            Prediction {
                issue_id: format!("i{i}"),
                ranking: ranked
                    .into_iter()
                    .enumerate()
                    .map(|(r, d)| (d, -(r as f64)))
                    .collect(),
                fixers,
            }
        })
        .collect();
    PredictionSet::new("s", preds)
}

fn small_sample(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| f64::from(rng.gen_range(0u8..5))).collect()
}

/// Runs `instances` random small cases per metric against the oracles above
/// and returns one line per disagreement.
pub fn metric_discrepancies(instances: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for case in 0..instances {
        let set = random_predictions(&mut rng);
        let got = mrr(&set).unwrap().value;
        let want = oracle_mrr(&set);
        if (got - want).abs() > 1e-12 {
            bad.push(format!("mrr case {case}: {got} vs {want}"));
        }
        let n = rng.gen_range(1..=10);
        let (num, den) = oracle_topn(&set, n);
        let got = topn_hit_rate(&set, n).unwrap();
        if got != num as f64 / den as f64 {
            bad.push(format!("top{n} case {case}: {got} vs {num}/{den}"));
        }

        let (nx, ny) = (rng.gen_range(1..=10), rng.gen_range(1..=10));
        let x = small_sample(&mut rng, nx);
        let y = small_sample(&mut rng, ny);
        let (num, den) = oracle_cliffs(&x, &y);
        let (got, mag) = cliffs_delta(&x, &y).unwrap();
        if got != num as f64 / den as f64 || mag != oracle_magnitude(num, den) {
            bad.push(format!("cliffs case {case}: {got} {mag} vs {num}/{den}"));
        }

        let len = rng.gen_range(1..=10);
        let cats = rng.gen_range(1..=4u8);
        let a: Vec<u8> = (0..len).map(|_| rng.gen_range(0..cats)).collect();
        let b: Vec<u8> = (0..len).map(|_| rng.gen_range(0..cats)).collect();
        let got = cohens_kappa(&a, &b).unwrap();
        let want = oracle_kappa(&a, &b).map_or(1.0, |(p, q)| p as f64 / q as f64);
        if (got - want).abs() > 1e-12 {
            bad.push(format!("kappa case {case}: {got} vs {want}"));
        }

        let len = rng.gen_range(1..=10);
        let x = small_sample(&mut rng, len);
        let y = small_sample(&mut rng, len);
        let w = wilcoxon_signed_rank(&x, &y).unwrap();
        match oracle_wilcoxon(&x, &y) {
            None if w.degenerate && w.p_value == 1.0 => {}
            Some((plus, minus, p))
                if w.exact
                    && w.w_plus == plus
                    && w.w_minus == minus
                    && (w.p_value - p).abs() <= 1e-12 => {}
            want => bad.push(format!("wilcoxon case {case}: {w:?} vs {want:?}")),
        }
    }
    bad
}

// ---------------------------------------------------------------- slicing

/// Checks balance, disjointness and chronology of a ten-slice timeline and
/// its 8:1:1 split on `corpora` random issue sets of 10 to 5000 issues.
pub fn slicing_violations(corpora: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for case in 0..corpora {
        let n = rng.gen_range(10..=5000);
        // Narrow time ranges force many ties.
        let span = if rng.gen_bool(0.3) { 20 } else { 10_000_000 };
        let issues: Vec<(String, i64)> = (0..n)
            .map(|i| (format!("issue-{i}"), rng.gen_range(0..span)))
            .collect();
        bad.extend(check_slicing(case, &issues));
    }
    bad
}

pub fn check_slicing(case: usize, issues: &[(String, i64)]) -> Vec<String> {
    let mut bad = Vec::new();
    let tl = slice_timeline(issues.iter().map(|(id, at)| (id.as_str(), *at)), 10).unwrap();
    let sizes: Vec<usize> = tl.slices().iter().map(|s| s.issues.len()).collect();
    let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
    if hi - lo > 1 {
        bad.push(format!("case {case}: sizes {sizes:?}"));
    }
    let time: BTreeMap<&str, i64> = issues.iter().map(|(id, at)| (id.as_str(), *at)).collect();
    let mut seen = BTreeSet::new();
    for s in tl.slices() {
        for id in &s.issues {
            if !seen.insert(id.as_str()) {
                bad.push(format!("case {case}: {id} in two slices"));
            }
        }
    }
    if seen.len() != issues.len() {
        bad.push(format!(
            "case {case}: {} of {} issues sliced",
            seen.len(),
            issues.len()
        ));
    }
    let span = |t: usize| {
        let ts = tl.slice(t).issues.iter().map(|id| time[id.as_str()]);
        (ts.clone().min().unwrap(), ts.max().unwrap())
    };
    for t in 1..10 {
        if span(t).1 > span(t + 1).0 {
            bad.push(format!(
                "case {case}: slice {t} ends after slice {} starts",
                t + 1
            ));
        }
    }
    let split = chronological_split(10, SplitRatios::default()).unwrap();
    if split.train != (1..=8) || split.validation != (9..=9) || split.test != (10..=10) {
        bad.push(format!("case {case}: split {split:?}"));
    }
    bad
}

// ---------------------------------------------------------------- relabel

pub struct RelabelFixture {
    pub name: &'static str,
    pub issue: IssueRecord,
    pub events: Vec<EventRecord>,
    pub commits: Vec<CommitRecord>,
    pub stats: DeveloperStats,
    pub want: &'static [&'static str],
    pub rule: LabelRule,
}

fn closed_issue(closed_at: i64, closed_by: Option<&str>) -> IssueRecord {
    IssueRecord {
        issue_id: "42".into(),
        title: "t".into(),
        body: String::new(),
        reporter: "reporter".into(),
        created_at: 0,
        closed_at: Some(closed_at),
        closed_by: closed_by.map(Into::into),
        original_assignees: BTreeSet::new(),
        state: IssueState::Closed,
    }
}

fn commit(sha: &str, author: &str, at: i64) -> CommitRecord {
    CommitRecord {
        sha: sha.into(),
        author: author.into(),
        committed_at: at,
        file_changes: vec![FileChange {
            path: "src/lib.rs".into(),
            change_type: ChangeType::Modified,
        }],
    }
}

fn link(sha: Option<&str>, at: i64) -> EventRecord {
    EventRecord {
        issue_id: "42".into(),
        actor: "bot".into(),
        event_type: if sha.is_some() {
            "referenced"
        } else {
            "closed"
        }
        .into(),
        created_at: at,
        commit_sha: sha.map(Into::into),
    }
}

fn stats(rows: &[(&str, u64, u64)]) -> DeveloperStats {
    rows.iter()
        .map(|&(d, commits, closed)| {
            (
                d.to_string(),
                DevStats {
                    commit_count: commits,
                    closed_issue_count: closed,
                },
            )
        })
        .collect()
}

/// The three documented relabel cases followed by ten further fixtures.
pub fn relabel_fixtures() -> Vec<RelabelFixture> {
    use LabelRule::*;
    let f = |name, issue, events, commits, stats, want, rule| RelabelFixture {
        name,
        issue,
        events,
        commits,
        stats,
        want,
        rule,
    };
    vec![
        f(
            "commit after close is ignored",
            closed_issue(5, Some("C")),
            vec![link(Some("c1"), 3), link(Some("c2"), 6)],
            vec![commit("c1", "A", 3), commit("c2", "B", 6)],
            stats(&[("C", 12, 5)]),
            &["A"],
            LinkedCommits,
        ),
        f(
            "closer with more commits than closures",
            closed_issue(5, Some("C")),
            vec![],
            vec![],
            stats(&[("C", 12, 5)]),
            &["C"],
            Closer,
        ),
        f(
            "closer with fewer commits stays unlabeled",
            closed_issue(5, Some("C")),
            vec![],
            vec![],
            stats(&[("C", 3, 5)]),
            &[],
            Unlabeled,
        ),
        f(
            "every pre-close author is a fixer",
            closed_issue(10, None),
            vec![link(Some("c1"), 2), link(Some("c2"), 4)],
            vec![commit("c1", "A", 2), commit("c2", "B", 4)],
            stats(&[]),
            &["A", "B"],
            LinkedCommits,
        ),
        f(
            "repeated link counts once",
            closed_issue(10, None),
            vec![link(Some("c1"), 2), link(Some("c1"), 3)],
            vec![commit("c1", "A", 2)],
            stats(&[]),
            &["A"],
            LinkedCommits,
        ),
        f(
            "commit at the close instant is not before it",
            closed_issue(10, Some("D")),
            vec![link(Some("c1"), 10)],
            vec![commit("c1", "A", 10)],
            stats(&[("D", 2, 2)]),
            &[],
            Unlabeled,
        ),
        f(
            "events without a sha are skipped",
            closed_issue(10, Some("Z")),
            vec![link(None, 1), link(Some("c1"), 2), link(None, 10)],
            vec![commit("c1", "A", 2)],
            stats(&[("Z", 50, 0)]),
            &["A"],
            LinkedCommits,
        ),
        f(
            "dangling sha falls back to the closer",
            closed_issue(10, Some("E")),
            vec![link(Some("missing"), 2)],
            vec![],
            stats(&[("E", 5, 1)]),
            &["E"],
            Closer,
        ),
        f(
            "only post-close commits fall back to the closer",
            closed_issue(10, Some("F")),
            vec![link(Some("c1"), 11)],
            vec![commit("c1", "A", 11)],
            stats(&[("F", 1, 0)]),
            &["F"],
            Closer,
        ),
        f(
            "a qualifying closer is not added to traced fixers",
            closed_issue(10, Some("G")),
            vec![link(Some("c1"), 2)],
            vec![commit("c1", "A", 2)],
            stats(&[("G", 10, 1)]),
            &["A"],
            LinkedCommits,
        ),
        f(
            "no commits and no closer",
            closed_issue(10, None),
            vec![],
            vec![],
            stats(&[]),
            &[],
            Unlabeled,
        ),
        f(
            "closer without recorded activity",
            closed_issue(10, Some("H")),
            vec![],
            vec![],
            stats(&[]),
            &[],
            Unlabeled,
        ),
        f(
            "several commits by one author",
            closed_issue(10, None),
            vec![
                link(Some("c1"), 1),
                link(Some("c2"), 2),
                link(Some("c3"), 3),
                link(Some("c4"), 12),
            ],
            vec![
                commit("c1", "A", 1),
                commit("c2", "A", 2),
                commit("c3", "A", 3),
                commit("c4", "B", 12),
            ],
            stats(&[]),
            &["A"],
            LinkedCommits,
        ),
    ]
}

/// Relabels `fx` with its events in the given order.
pub fn relabel_fixture(
    fx: &RelabelFixture,
    events: &[EventRecord],
) -> (BTreeSet<String>, LabelRule) {
    let by_sha: BTreeMap<&str, &CommitRecord> =
        fx.commits.iter().map(|c| (c.sha.as_str(), c)).collect();
    let r = relabel_issue(&fx.issue, events, |s| by_sha.get(s).copied(), &fx.stats).unwrap();
    (r.fixers, r.rule)
}

pub fn relabel_mismatches() -> Vec<String> {
    relabel_fixtures()
        .iter()
        .filter_map(|fx| {
            let (got, rule) = relabel_fixture(fx, &fx.events);
            let want: BTreeSet<String> = fx.want.iter().map(|s| s.to_string()).collect();
            (got != want || rule != fx.rule).then(|| {
                format!(
                    "{}: got {got:?}/{rule:?}, want {want:?}/{:?}",
                    fx.name, fx.rule
                )
            })
        })
        .collect()
}

// ---------------------------------------------------------------- graphs

/// Four slices of two issues over developers a, b, c and files f1, f2, f3.
/// A window with `tw = 3` targeting slice 4 has 15 nodes.
pub fn small_htg() -> Htg {
    let fixers = ["a", "b", "a", "c", "b", "a", "c", "b"];
    let labels: Vec<LabelRow> = (0..8)
        .map(|i| LabelRow {
            issue_id: format!("i{i}"),
            created_at: i as i64 * 10,
            closed_at: i as i64 * 10 + 5,
            rule: LabelRule::LinkedCommits,
            fixers: [fixers[i].to_string()].into(),
        })
        .collect();
    let devs = ["a", "b", "c"];
    let mut edges = Vec::new();
    for (i, fixer) in fixers.iter().enumerate() {
        let id = format!("i{i}");
        let at = i as i64 * 10;
        let issue = NodeRef::issue(&id);
        edges.push(Edge::new(
            RelationType::Report,
            issue.clone(),
            NodeRef::developer(devs[(i + 1) % 3]),
            at,
        ));
        edges.push(Edge::new(
            RelationType::Comment,
            issue.clone(),
            NodeRef::developer(*fixer),
            at + 1,
        ));
        let f = if i % 2 == 0 { "f1" } else { "f2" };
        edges.push(
            Edge::new(RelationType::Similar, issue, NodeRef::file(f), at)
                .with_weight(0.5 + 0.05 * i as f64)
                .with_provenance(Provenance::Textual),
        );
    }
    edges.push(Edge::new(
        RelationType::Create,
        NodeRef::developer("a"),
        NodeRef::file("f1"),
        2,
    ));
    edges.push(Edge::new(
        RelationType::Create,
        NodeRef::developer("b"),
        NodeRef::file("f2"),
        12,
    ));
    edges.push(Edge::new(
        RelationType::Remove,
        NodeRef::developer("c"),
        NodeRef::file("f3"),
        22,
    ));
    Htg::from_labels(&edges, &labels, 4).unwrap()
}

/// End-to-end finite-difference check of the mean hinge loss on the
/// three-slice window of [`small_htg`], dropout off. Returns the number of
/// distinct window nodes, the loss and the report.
pub fn window_gradcheck(h: f64) -> (usize, f64, GradCheckReport) {
    let htg = small_htg();
    let config = ModelConfig {
        tw: 3,
        ..ModelConfig::default()
    };
    let universe = NodeUniverse::from_htg(&htg, 1..=3);
    let params = init_params(&config, &universe).unwrap();
    let layout = ParamLayout::new(&config, &universe, &params).unwrap();
    let targets: Vec<TargetIssue> = TargetIssue::from_snapshot(htg.snapshot(4))
        .into_values()
        .collect();
    let candidates: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let inputs = [1, 2, 3];
    let graph = WindowGraph::new(
        &htg,
        &inputs,
        &targets,
        &candidates,
        &universe,
        config.hidden_dim,
        config.seed,
    )
    .unwrap();

    let mut nodes: BTreeSet<NodeRef> = BTreeSet::new();
    for &t in &inputs {
        nodes.extend(htg.snapshot(t).nodes.iter().cloned());
    }
    nodes.extend(targets.iter().map(|t| NodeRef::issue(&t.id)));
    nodes.extend(candidates.iter().map(NodeRef::developer));

    let mut triples = Vec::new();
    for (t, id) in graph.target_ids().iter().enumerate() {
        let fixers = &htg.issue(id).unwrap().fixers;
        let p = candidates.iter().position(|c| fixers.contains(c)).unwrap();
        for n in (0..candidates.len()).filter(|&n| n != p) {
            triples.push((t, p, n));
        }
    }
    let loss = |params: &Params| -> (f64, Gradients) {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = forward_window(
            &mut tape,
            params,
            &layout,
            &graph,
            config.dropout,
            false,
            &mut rng,
        )
        .unwrap();
        let l = batch_loss(&mut tape, &out, &triples, 1.0).unwrap();
        (tape.value(l).get(0, 0), tape.backward(l).unwrap())
    };
    let (value, grads) = loss(&params);
    let report = finite_diff_check(&params, &grads, |p| loss(p).0, h, 64, 1);
    (nodes.len(), value, report)
}

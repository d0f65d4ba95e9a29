mod support;

use std::collections::BTreeSet;

use htgtriage_core::htg::{
    chronological_split, read_htg, structure_hash, window_batches, write_htg, SplitRatios,
};
use htgtriage_core::pipeline::{build_from_corpus, RunConfig};
use htgtriage_core::relations::{
    build_tfidf_index, extract_relations, file_documents, similar_edges_text, write_edges,
    RelationType,
};
use htgtriage_core::synth::{generate_synthetic, SynthSpec};
use proptest::prelude::*;

fn synth(seed: u64) -> htgtriage_core::corpus::Corpus {
    generate_synthetic(&SynthSpec {
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

#[test]
fn two_hundred_random_timelines_slice_cleanly() {
    let bad = support::slicing_violations(200, 21);
    assert!(bad.is_empty(), "{bad:#?}");
}

proptest! {
    #[test]
    fn any_timeline_slices_cleanly(times in prop::collection::vec(0i64..50, 10..300)) {
        let issues: Vec<(String, i64)> =
            times.into_iter().enumerate().map(|(i, t)| (format!("x{i}"), t)).collect();
        let bad = support::check_slicing(0, &issues);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }
}

#[test]
fn graph_covers_all_closed_issues_and_round_trips() {
    let corpus = synth(2);
    let config = RunConfig::default();
    let (labeled, edges, htg) = build_from_corpus(&corpus, &config).unwrap();

    let mut seen = BTreeSet::new();
    for s in htg.snapshots() {
        for i in &s.issues {
            assert!(seen.insert(i.clone()), "{i} twice");
        }
    }
    let all: BTreeSet<String> = labeled.rows.iter().map(|r| r.issue_id.clone()).collect();
    assert_eq!(seen, all);

    let mut bytes = Vec::new();
    write_htg(&mut bytes, &htg).unwrap();
    let back = read_htg(&bytes[..]).unwrap();
    assert_eq!(structure_hash(&back), structure_hash(&htg));
    let again = htgtriage_core::htg::Htg::from_labels(&edges, &labeled.rows, 10).unwrap();
    assert_eq!(structure_hash(&again), structure_hash(&htg));

    let split = chronological_split(10, SplitRatios::default()).unwrap();
    let plan = window_batches(&htg, 2, &split).unwrap();
    for b in plan.train.iter().chain(&plan.validation).chain(&plan.test) {
        for (issue, fixer) in &b.positives {
            let row = labeled.rows.iter().find(|r| &r.issue_id == issue).unwrap();
            assert!(row.fixers.contains(fixer));
        }
    }
}

#[test]
fn extraction_is_pure_and_well_typed() {
    let corpus = synth(5);
    let labeled = htgtriage_core::pipeline::relabel(&corpus);
    let config = RunConfig::default().relations;
    let a = extract_relations(&corpus, &labeled.issues, config);
    let b = extract_relations(&corpus, &labeled.issues, config);
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    write_edges(&mut ta, &a).unwrap();
    write_edges(&mut tb, &b).unwrap();
    assert_eq!(ta, tb);
    assert!(a.iter().all(|e| e.is_well_typed()));

    let similar = a
        .iter()
        .filter(|e| e.relation == RelationType::Similar)
        .count();
    let per_issue = similar as f64 / labeled.issues.len() as f64;
    assert!((1.0..=5.0).contains(&per_issue), "{per_issue}");
}

#[test]
fn textual_similarity_ignores_file_order() {
    let corpus = synth(6);
    let docs: Vec<(String, String)> = file_documents(&corpus).into_iter().collect();
    let forward = build_tfidf_index(docs.clone());
    let backward = build_tfidf_index(docs.into_iter().rev());
    for issue in corpus.issues().iter().take(100) {
        assert_eq!(
            similar_edges_text(issue, &forward, 3, 0.05),
            similar_edges_text(issue, &backward, 3, 0.05)
        );
    }
}

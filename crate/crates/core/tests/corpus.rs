mod support;

use std::collections::BTreeSet;

use htgtriage_core::corpus::{developer_stats, relabel_corpus, LabelRule};
use htgtriage_core::synth::{generate_synthetic, SynthSpec};
use proptest::prelude::*;

#[test]
fn relabel_fixtures_give_their_fixer_sets() {
    let fixtures = support::relabel_fixtures();
    assert_eq!(fixtures.len(), 13);
    let bad = support::relabel_mismatches();
    assert!(bad.is_empty(), "{bad:#?}");
}

proptest! {
    #[test]
    fn relabel_ignores_event_order(case in 0usize..13, perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
        let fixtures = support::relabel_fixtures();
        let fx = &fixtures[case];
        let mut events = fx.events.clone();
        let order: Vec<usize> = perm.into_iter().filter(|&i| i < events.len()).collect();
        events = order.iter().map(|&i| events[i].clone()).collect();
        prop_assert_eq!(support::relabel_fixture(fx, &events), support::relabel_fixture(fx, &fx.events));
    }
}

#[test]
fn synthetic_fixers_are_traced_authors_or_the_closer() {
    let corpus = generate_synthetic(&SynthSpec {
        seed: 3,
        ..SynthSpec::default()
    })
    .unwrap();
    let (labeled, summary) = relabel_corpus(&corpus);
    assert_eq!(
        labeled.len(),
        corpus.issues().iter().filter(|i| i.is_closed()).count()
    );
    assert_eq!(summary.labeled + summary.unlabeled, labeled.len());
    for l in &labeled {
        let closed_at = l.issue.closed_at.unwrap();
        let mut allowed: BTreeSet<String> = corpus
            .events_for(&l.issue.issue_id)
            .filter_map(|e| e.commit_sha.as_deref())
            .filter_map(|s| corpus.commit(s))
            .filter(|c| c.committed_at < closed_at)
            .map(|c| c.author.clone())
            .collect();
        allowed.extend(l.issue.closed_by.clone());
        assert!(l.fixers.is_subset(&allowed), "{}", l.issue.issue_id);
        assert_eq!(l.rule == LabelRule::Unlabeled, l.fixers.is_empty());
    }
}

#[test]
fn developer_stat_totals_match_the_corpus() {
    let corpus = generate_synthetic(&SynthSpec {
        seed: 4,
        issues: 200,
        ..SynthSpec::default()
    })
    .unwrap();
    let stats = developer_stats(&corpus);
    let commits: u64 = stats.values().map(|s| s.commit_count).sum();
    let closed: u64 = stats.values().map(|s| s.closed_issue_count).sum();
    assert_eq!(commits as usize, corpus.commit_count());
    let with_closer = corpus
        .issues()
        .iter()
        .filter(|i| i.closed_by.is_some())
        .count();
    assert_eq!(closed as usize, with_closer);
}

use std::collections::BTreeMap;

use crate::corpus::{CommitRecord, Timestamp};

/// Per-developer share (percent) of each stage's commits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivityTable {
    pub stage_starts: Vec<Timestamp>,
    pub commits_per_stage: Vec<usize>,
    /// `None` for stages without commits.
    pub rows: BTreeMap<String, Vec<Option<f64>>>,
}

/// Stage `j` covers `[starts[j], starts[j + 1])`; the first stage is
/// unbounded below and the last above. `starts` must be ascending.
pub fn activity_table(commits: &[CommitRecord], starts: &[Timestamp]) -> ActivityTable {
    let stages = starts.len().max(1);
    let stage_of = |at: Timestamp| starts.partition_point(|&s| s <= at).saturating_sub(1);
    let mut counts: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut totals = vec![0usize; stages];
    for c in commits {
        let s = stage_of(c.committed_at);
        totals[s] += 1;
        counts.entry(&c.author).or_insert_with(|| vec![0; stages])[s] += 1;
    }
    let rows = counts
        .into_iter()
        .map(|(d, per)| {
            let pct = per
                .iter()
                .zip(&totals)
                .map(|(&c, &t)| (t > 0).then(|| 100.0 * c as f64 / t as f64))
                .collect();
            (d.to_string(), pct)
        })
        .collect();
    ActivityTable {
        stage_starts: starts.to_vec(),
        commits_per_stage: totals,
        rows,
    }
}

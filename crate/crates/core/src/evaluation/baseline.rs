use std::collections::{BTreeMap, BTreeSet};

use super::metrics::Prediction;
use crate::corpus::Timestamp;

/// Developers ranked by fix count, each fix weighted by
/// `0.5^((now − at) / half_life)`. `None` disables decay. Ties break by id.
pub fn frequency_baseline(
    fixes: &[(Timestamp, String)],
    now: Timestamp,
    half_life: Option<f64>,
) -> Vec<(String, f64)> {
    let mut score: BTreeMap<&str, f64> = BTreeMap::new();
    for (at, dev) in fixes {
        let w = match half_life {
            Some(h) => 0.5f64.powf((now - at) as f64 / h),
            None => 1.0,
        };
        *score.entry(dev).or_default() += w;
    }
    let mut ranked: Vec<(String, f64)> =
        score.into_iter().map(|(d, s)| (d.to_string(), s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// The same global ranking for every issue, restricted to `candidates` and
/// followed by candidates without fixes in id order.
pub fn baseline_predictions(
    ranking: &[(String, f64)],
    candidates: &[String],
    issues: &[(String, BTreeSet<String>)],
) -> Vec<Prediction> {
    let pool: BTreeSet<&str> = candidates.iter().map(String::as_str).collect();
    let mut full: Vec<(String, f64)> = ranking
        .iter()
        .filter(|(d, _)| pool.contains(d.as_str()))
        .cloned()
        .collect();
    let ranked: BTreeSet<String> = full.iter().map(|(d, _)| d.clone()).collect();
    full.extend(
        pool.iter()
            .filter(|d| !ranked.contains(**d))
            .map(|d| (d.to_string(), 0.0)),
    );
    issues
        .iter()
        .map(|(id, fixers)| Prediction {
            issue_id: id.clone(),
            ranking: full.clone(),
            fixers: fixers.clone(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixes(v: &[(i64, &str)]) -> Vec<(Timestamp, String)> {
        v.iter().map(|(t, d)| (*t, d.to_string())).collect()
    }

    #[test]
    fn dominant_fixer_ranks_first() {
        let f = fixes(&[(1, "a"), (2, "a"), (3, "b"), (4, "a")]);
        let r = frequency_baseline(&f, 10, None);
        assert_eq!(r[0], ("a".to_string(), 3.0));
        assert_eq!(r[1].0, "b");
    }

    #[test]
    fn decay_prefers_recent_successor() {
        // `old` fixed six issues early on, `new` took over with three
        let f = fixes(&[
            (0, "old"),
            (10, "old"),
            (20, "old"),
            (30, "old"),
            (40, "old"),
            (50, "old"),
            (100, "new"),
            (110, "new"),
            (120, "new"),
        ]);
        assert_eq!(frequency_baseline(&f, 130, None)[0].0, "old");
        assert_eq!(frequency_baseline(&f, 130, Some(1e12))[0].0, "old");
        assert_eq!(frequency_baseline(&f, 130, Some(10.0))[0].0, "new");
    }

    #[test]
    fn predictions_cover_all_candidates() {
        let ranking = vec![("x".to_string(), 2.0), ("gone".to_string(), 1.0)];
        let cands = vec!["a".to_string(), "x".to_string()];
        let issues = vec![("1".to_string(), BTreeSet::from(["a".to_string()]))];
        let p = baseline_predictions(&ranking, &cands, &issues);
        let order: Vec<&str> = p[0].ranking.iter().map(|(d, _)| d.as_str()).collect();
        assert_eq!(order, ["x", "a"]);
        assert_eq!(p[0].first_hit(), Some(2));
    }
}

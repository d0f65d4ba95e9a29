use std::collections::{BTreeMap, BTreeSet};

use super::EvalError;

/// Ranked developers for one test issue and its true fixers.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub issue_id: String,
    /// Best first; scores are informational.
    pub ranking: Vec<(String, f64)>,
    pub fixers: BTreeSet<String>,
}

impl Prediction {
    /// 1-based rank of the first fixer; `None` when no fixer is ranked.
    pub fn first_hit(&self) -> Option<usize> {
        self.ranking
            .iter()
            .position(|(d, _)| self.fixers.contains(d))
            .map(|p| p + 1)
    }

    pub fn hit_at(&self, n: usize) -> bool {
        self.first_hit().is_some_and(|r| r <= n)
    }

    /// `1 / rank` of the first fixer, 0 when unreachable.
    pub fn reciprocal_rank(&self) -> f64 {
        self.first_hit().map_or(0.0, |r| 1.0 / r as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionSet {
    pub system: String,
    pub predictions: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(system: impl Into<String>, predictions: Vec<Prediction>) -> Self {
        Self {
            system: system.into(),
            predictions,
        }
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }
}

/// Share of issues with a fixer among the first `n` ranked developers.
pub fn topn_hit_rate(set: &PredictionSet, n: usize) -> Result<f64, EvalError> {
    if set.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = set.predictions.iter().filter(|p| p.hit_at(n)).count();
    Ok(hits as f64 / set.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrrSummary {
    pub value: f64,
    /// Issues without any fixer in their ranking; they contribute 0.
    pub unreachable: usize,
}

pub fn mrr(set: &PredictionSet) -> Result<MrrSummary, EvalError> {
    if set.is_empty() {
        return Err(EvalError::Empty);
    }
    let sum: f64 = set
        .predictions
        .iter()
        .map(Prediction::reciprocal_rank)
        .sum();
    Ok(MrrSummary {
        value: sum / set.len() as f64,
        unreachable: set
            .predictions
            .iter()
            .filter(|p| p.first_hit().is_none())
            .count(),
    })
}

/// For every non-empty subset of systems, the number of issues that exactly
/// that subset gets right at top-1. Subsets are listed by system name.
pub fn prediction_overlap(
    sets: &[PredictionSet],
) -> Result<BTreeMap<Vec<String>, usize>, EvalError> {
    let Some(first) = sets.first() else {
        return Ok(BTreeMap::new());
    };
    let ids: Vec<&str> = first
        .predictions
        .iter()
        .map(|p| p.issue_id.as_str())
        .collect();
    let mut hit_sets: Vec<BTreeMap<&str, bool>> = Vec::with_capacity(sets.len());
    for s in sets {
        let m: BTreeMap<&str, bool> = s
            .predictions
            .iter()
            .map(|p| (p.issue_id.as_str(), p.hit_at(1)))
            .collect();
        if m.len() != ids.len() || ids.iter().any(|i| !m.contains_key(i)) {
            return Err(EvalError::MismatchedIssues);
        }
        hit_sets.push(m);
    }
    let mut out = BTreeMap::new();
    for id in ids {
        let subset: Vec<String> = sets
            .iter()
            .zip(&hit_sets)
            .filter(|(_, m)| m[id])
            .map(|(s, _)| s.system.clone())
            .collect();
        if !subset.is_empty() {
            *out.entry(subset).or_default() += 1;
        }
    }
    Ok(out)
}

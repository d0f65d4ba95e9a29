use std::collections::{BTreeMap, BTreeSet};

use super::metrics::PredictionSet;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupSplit {
    pub core: BTreeSet<String>,
    pub non_core: BTreeSet<String>,
}

/// Core = shortest prefix of developers, by resolved count descending then
/// id, whose cumulative count reaches half the total.
pub fn split_core_noncore(counts: &BTreeMap<String, usize>) -> GroupSplit {
    let mut order: Vec<(&String, usize)> = counts.iter().map(|(d, &c)| (d, c)).collect();
    order.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total: usize = order.iter().map(|(_, c)| c).sum();
    let mut split = GroupSplit::default();
    let mut acc = 0;
    for (d, c) in order {
        // 2·acc ≥ total avoids rounding half of an odd total
        if acc * 2 >= total && !split.core.is_empty() {
            split.non_core.insert(d.clone());
        } else {
            split.core.insert(d.clone());
            acc += c;
        }
    }
    split
}

/// Top-1 recall per developer group. An issue belongs to every group
/// holding one of its fixers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupRecall {
    /// `None` when no issue belongs to the group.
    pub core: Option<f64>,
    pub non_core: Option<f64>,
    pub t_core: usize,
    pub f_core: usize,
    pub t_non_core: usize,
    pub f_non_core: usize,
}

pub fn group_recall(set: &PredictionSet, split: &GroupSplit) -> GroupRecall {
    let mut g = GroupRecall::default();
    for p in &set.predictions {
        let hit = p.hit_at(1);
        if p.fixers.iter().any(|f| split.core.contains(f)) {
            if hit {
                g.t_core += 1;
            } else {
                g.f_core += 1;
            }
        }
        if p.fixers.iter().any(|f| split.non_core.contains(f)) {
            if hit {
                g.t_non_core += 1;
            } else {
                g.f_non_core += 1;
            }
        }
    }
    let ratio = |t: usize, f: usize| (t + f > 0).then(|| t as f64 / (t + f) as f64);
    g.core = ratio(g.t_core, g.f_core);
    g.non_core = ratio(g.t_non_core, g.f_non_core);
    g
}

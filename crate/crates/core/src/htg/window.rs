use super::graph::Htg;
use super::timeline::Split;
use super::HtgError;

pub const MAX_WINDOW: usize = 7;

/// `tw` consecutive input slices and the slice whose issues they predict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowBatch {
    pub input_slices: Vec<usize>,
    pub target_slice: usize,
    /// `(issue, fixer)` for every labeled target-slice issue.
    pub positives: Vec<(String, String)>,
}

impl WindowBatch {
    /// Distinct target issues that carry at least one positive.
    pub fn target_issues(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for (i, _) in &self.positives {
            if out.last() != Some(&i.as_str()) {
                out.push(i);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    pub tw: usize,
    /// Targets in chronological order.
    pub train: Vec<WindowBatch>,
    pub validation: Vec<WindowBatch>,
    pub test: Vec<WindowBatch>,
}

fn batch(htg: &Htg, tw: usize, target: usize) -> WindowBatch {
    let mut positives = Vec::new();
    for issue in &htg.snapshot(target).issues {
        for f in &htg.issue(issue).expect("slice issue is indexed").fixers {
            positives.push((issue.clone(), f.clone()));
        }
    }
    WindowBatch {
        input_slices: (target - tw..target).collect(),
        target_slice: target,
        positives,
    }
}

/// Sliding windows of `tw` slices: every training target with a full window,
/// then one batch per validation and test slice.
pub fn window_batches(htg: &Htg, tw: usize, split: &Split) -> Result<WindowPlan, HtgError> {
    let max = MAX_WINDOW.min(split.train.end().saturating_sub(1));
    if tw == 0 || tw > max || *split.test.end() > htg.t() {
        return Err(HtgError::WindowSize { tw, max });
    }
    let first = (split.train.start() + tw).max(1);
    Ok(WindowPlan {
        tw,
        train: (first..=*split.train.end())
            .map(|t| batch(htg, tw, t))
            .collect(),
        validation: split
            .validation
            .clone()
            .map(|t| batch(htg, tw, t))
            .collect(),
        test: split.test.clone().map(|t| batch(htg, tw, t)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabelRow, LabelRule};
    use crate::htg::{chronological_split, SplitRatios};

    fn htg() -> Htg {
        let labels: Vec<LabelRow> = (0..20)
            .map(|i| LabelRow {
                issue_id: format!("i{i:02}"),
                created_at: i * 10,
                closed_at: i * 10 + 5,
                rule: LabelRule::Closer,
                fixers: [format!("d{}", i % 3)].into(),
            })
            .collect();
        Htg::from_labels(&[], &labels, 10).unwrap()
    }

    #[test]
    fn window_enumeration() {
        let g = htg();
        let split = chronological_split(10, SplitRatios::default()).unwrap();
        let p = window_batches(&g, 3, &split).unwrap();
        let targets: Vec<_> = p.train.iter().map(|b| b.target_slice).collect();
        assert_eq!(targets, [4, 5, 6, 7, 8]);
        assert_eq!(p.train[0].input_slices, [1, 2, 3]);
        assert_eq!(p.validation[0].input_slices, [6, 7, 8]);
        assert_eq!(p.test[0].target_slice, 10);
        assert_eq!(p.test[0].input_slices, [7, 8, 9]);

        let p = window_batches(&g, 7, &split).unwrap();
        assert_eq!(p.train.len(), 1);
        assert_eq!(p.train[0].input_slices, (1..=7).collect::<Vec<_>>());
        assert_eq!(window_batches(&g, 1, &split).unwrap().train.len(), 7);
        assert!(window_batches(&g, 0, &split).is_err());
        assert!(window_batches(&g, 8, &split).is_err());
    }

    #[test]
    fn positives_come_from_target_slice() {
        let g = htg();
        let split = chronological_split(10, SplitRatios::default()).unwrap();
        for b in window_batches(&g, 2, &split).unwrap().train {
            assert_eq!(b.positives.len(), 2);
            for (i, _) in &b.positives {
                assert_eq!(g.issue(i).unwrap().slice, b.target_slice);
            }
        }
    }
}

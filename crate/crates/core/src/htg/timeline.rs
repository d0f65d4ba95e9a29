use std::ops::RangeInclusive;

use super::HtgError;
use crate::corpus::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceSpec {
    /// 1-based slice index.
    pub index: usize,
    /// Creation time of the slice's first issue. Slice 1 is unbounded below.
    pub start: Timestamp,
    /// Issue ids in `(created_at, id)` order.
    pub issues: Vec<String>,
    /// `(first, last)` issue creation times.
    pub issue_span: (Timestamp, Timestamp),
}

/// Issue-balanced partition of the timeline.
///
/// Issues are assigned by rank, so slice sizes differ by at most one even
/// under timestamp ties. Time-keyed edges use half-open ranges
/// `[start_t, start_{t+1})`, with slice 1 open below and slice T open above.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    slices: Vec<SliceSpec>,
}

/// Partitions issues into `t` chronological slices; with `n = q·t + r` the
/// first `r` slices hold `q + 1` issues.
pub fn slice_timeline<I, S>(issues: I, t: usize) -> Result<Timeline, HtgError>
where
    I: IntoIterator<Item = (S, Timestamp)>,
    S: Into<String>,
{
    let mut items: Vec<(Timestamp, String)> =
        issues.into_iter().map(|(id, at)| (at, id.into())).collect();
    if t == 0 || items.len() < t {
        return Err(HtgError::TooFewIssues { n: items.len(), t });
    }
    items.sort();
    let (q, r) = (items.len() / t, items.len() % t);
    let mut slices = Vec::with_capacity(t);
    let mut iter = items.into_iter();
    for i in 0..t {
        let size = q + usize::from(i < r);
        let chunk: Vec<(Timestamp, String)> = iter.by_ref().take(size).collect();
        slices.push(SliceSpec {
            index: i + 1,
            start: chunk[0].0,
            issue_span: (chunk[0].0, chunk[size - 1].0),
            issues: chunk.into_iter().map(|(_, id)| id).collect(),
        });
    }
    Ok(Timeline { slices })
}

impl Timeline {
    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn slices(&self) -> &[SliceSpec] {
        &self.slices
    }

    pub fn slice(&self, t: usize) -> &SliceSpec {
        &self.slices[t - 1]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.slices.iter().map(|s| s.issues.len()).collect()
    }

    /// 1-based slice holding time `at`.
    pub fn slice_of_time(&self, at: Timestamp) -> usize {
        self.slices[1..].partition_point(|s| s.start <= at) + 1
    }

    /// `(lower, upper)` time bounds of slice `t`; `None` means unbounded.
    pub fn bounds(&self, t: usize) -> (Option<Timestamp>, Option<Timestamp>) {
        let lower = (t > 1).then(|| self.slices[t - 1].start);
        let upper = self.slices.get(t).map(|s| s.start);
        (lower, upper)
    }
}

/// Train/validation/test proportions over the slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRatios {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 8,
            validation: 1,
            test: 1,
        }
    }
}

impl std::fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.train, self.validation, self.test)
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [train, validation, test] => Ok(Self {
                train,
                validation,
                test,
            }),
            _ => Err(format!("`{s}`: expected train:validation:test")),
        }
    }
}

/// 1-based inclusive slice ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: RangeInclusive<usize>,
    pub validation: RangeInclusive<usize>,
    pub test: RangeInclusive<usize>,
}

/// Chronological split of `t` slices. The ratio parts must be positive and
/// their sum must divide `t`.
pub fn chronological_split(t: usize, ratios: SplitRatios) -> Result<Split, HtgError> {
    let sum = ratios.train + ratios.validation + ratios.test;
    let bad = ratios.train == 0 || ratios.validation == 0 || ratios.test == 0;
    if bad || t == 0 || t % sum != 0 {
        return Err(HtgError::SplitRatio { t, ratios });
    }
    let scale = t / sum;
    let a = ratios.train * scale;
    let b = a + ratios.validation * scale;
    Ok(Split {
        train: 1..=a,
        validation: a + 1..=b,
        test: b + 1..=t,
    })
}

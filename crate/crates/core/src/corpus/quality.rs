use std::collections::HashMap;
use std::hash::Hash;

use super::CorpusError;

/// Cohen's kappa between two raters labeling the same items.
///
/// Returns 1.0 when chance agreement is 1 (both raters constant and equal).
pub fn cohens_kappa<T: Eq + Hash>(labels_a: &[T], labels_b: &[T]) -> Result<f64, CorpusError> {
    if labels_a.len() != labels_b.len() || labels_a.is_empty() {
        return Err(CorpusError::RaterLength(labels_a.len(), labels_b.len()));
    }
    let n = labels_a.len() as f64;
    let mut agree = 0usize;
    let mut marg_a: HashMap<&T, usize> = HashMap::new();
    let mut marg_b: HashMap<&T, usize> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        if a == b {
            agree += 1;
        }
        *marg_a.entry(a).or_default() += 1;
        *marg_b.entry(b).or_default() += 1;
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marg_a
        .iter()
        .map(|(k, &ca)| ca as f64 * marg_b.get(k).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    P90,
    P95,
    P99,
}

impl Confidence {
    /// Two-sided standard normal quantile.
    pub fn z(self) -> f64 {
        match self {
            Confidence::P90 => 1.644_853_626_951_472_2,
            Confidence::P95 => 1.959_963_984_540_054,
            Confidence::P99 => 2.575_829_303_548_900_4,
        }
    }

    pub fn from_level(level: f64) -> Option<Self> {
        [Confidence::P90, Confidence::P95, Confidence::P99]
            .into_iter()
            .find(|c| (c.level() - level).abs() < 1e-9)
    }

    pub fn level(self) -> f64 {
        match self {
            Confidence::P90 => 0.90,
            Confidence::P95 => 0.95,
            Confidence::P99 => 0.99,
        }
    }
}

/// Minimum sample for estimating a proportion (worst case p = 0.5) within
/// `margin` at the given confidence, with finite-population correction.
///
/// Panics unless `0 < margin < 1` and `population > 0`.
pub fn sample_size(population: u64, confidence: Confidence, margin: f64) -> u64 {
    assert!(margin > 0.0 && margin < 1.0, "margin must be in (0, 1)");
    assert!(population > 0, "population must be positive");
    let z = confidence.z();
    let n0 = z * z * 0.25 / (margin * margin);
    let n = n0 / (1.0 + (n0 - 1.0) / population as f64);
    (n.ceil() as u64).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_from_two_by_two_table() {
        // a=40 (yes,yes), b=10 (yes,no), c=10 (no,yes), d=40 (no,no)
        let mut ra = Vec::new();
        let mut rb = Vec::new();
        for (x, y, n) in [(1, 1, 40), (1, 0, 10), (0, 1, 10), (0, 0, 40)] {
            for _ in 0..n {
                ra.push(x);
                rb.push(y);
            }
        }
        let k = cohens_kappa(&ra, &rb).unwrap();
        assert!((k - 0.6).abs() < 1e-12, "{k}");
    }

    #[test]
    fn kappa_edge_cases() {
        assert_eq!(
            cohens_kappa(&["a", "b", "a"], &["a", "b", "a"]).unwrap(),
            1.0
        );
        assert_eq!(cohens_kappa(&["x", "x"], &["x", "x"]).unwrap(), 1.0);
        assert!(cohens_kappa(&["x"], &["x", "y"]).is_err());
        assert!(cohens_kappa::<u8>(&[], &[]).is_err());
    }

    #[test]
    fn sample_size_reference_points() {
        let n = sample_size(58_306, Confidence::P95, 0.05);
        assert!((381..=383).contains(&n), "{n}");
        assert_eq!(sample_size(u64::MAX, Confidence::P95, 0.05), 385);
        assert_eq!(sample_size(1000, Confidence::P95, 1.0 - 1e-9), 1);
        assert_eq!(Confidence::from_level(0.99), Some(Confidence::P99));
    }
}

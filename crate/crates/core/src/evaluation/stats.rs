use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

/// Largest non-zero-difference count evaluated with the exact null
/// distribution.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(w_plus, w_minus)`.
    pub w: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    /// Two-sided.
    pub p_value: f64,
    pub exact: bool,
    /// Every difference was zero; `p_value` is 1 by convention.
    pub degenerate: bool,
}

/// Mid-ranks of `v` (1-based), in input order.
fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// `P(W⁺ ≤ w)` under the null, by counting sign assignments over doubled
/// (integral) ranks.
fn exact_cdf(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let limit = (w * 2.0).round() as usize;
    let below: f64 = counts[..=limit.min(total)].iter().sum();
    below / 2f64.powi(ranks.len() as i32)
}

/// Two-sided signed-rank test on paired samples. Zero differences are
/// dropped; ties share mid-ranks.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<Wilcoxon, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::Unpaired(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(EvalError::Empty);
    }
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = d.len();
    if n == 0 {
        return Ok(Wilcoxon {
            w_plus: 0.0,
            w_minus: 0.0,
            w: 0.0,
            n: 0,
            p_value: 1.0,
            exact: true,
            degenerate: true,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w_plus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus: f64 = d
        .iter()
        .zip(&ranks)
        .filter(|(v, _)| **v < 0.0)
        .map(|(_, r)| r)
        .sum();
    let w = w_plus.min(w_minus);
    let (p, exact) = if n <= EXACT_LIMIT {
        ((2.0 * exact_cdf(&ranks, w)).min(1.0), true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut sorted = abs.clone();
        sorted.sort_by(f64::total_cmp);
        for run in sorted.chunk_by(|a, b| a == b) {
            let t = run.len() as f64;
            ties += t * t * t - t;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = (w - mean) / var.sqrt();
            (2.0 * Normal::standard().cdf(z)).min(1.0)
        };
        (p, false)
    };
    Ok(Wilcoxon {
        w_plus,
        w_minus,
        w,
        n,
        p_value: p,
        exact,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn of(delta: f64) -> Self {
        let a = delta.abs();
        if a < 0.147 {
            Magnitude::Negligible
        } else if a < 0.33 {
            Magnitude::Small
        } else if a < 0.474 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "negligible",
            Magnitude::Small => "small",
            Magnitude::Medium => "medium",
            Magnitude::Large => "large",
        }
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(#{x > y} − #{x < y}) / (|x|·|y|)` over all cross pairs.
pub fn cliffs_delta(x: &[f64], y: &[f64]) -> Result<(f64, Magnitude), EvalError> {
    if x.is_empty() || y.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut y_sorted = y.to_vec();
    y_sorted.sort_by(f64::total_cmp);
    let mut dominance: i64 = 0;
    for &a in x {
        let below = y_sorted.partition_point(|&b| b < a) as i64;
        let above = (y_sorted.len() - y_sorted.partition_point(|&b| b <= a)) as i64;
        dominance += below - above;
    }
    let delta = dominance as f64 / (x.len() * y.len()) as f64;
    Ok((delta, Magnitude::of(delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wilcoxon_examples() {
        let same = wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!(same.degenerate);
        assert_eq!(same.p_value, 1.0);
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        assert_eq!((r.w_minus, r.w_plus, r.w), (0.0, 6.0, 0.0));
        assert!((r.p_value - 0.25).abs() < 1e-15);
        assert!(r.exact);
        assert!(wilcoxon_signed_rank(&[1.0], &[]).is_err());
    }

    #[test]
    fn normal_branch_with_ties() {
        let x: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 3) % 5) as f64).collect();
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!(!r.exact);
        assert!((0.0..=1.0).contains(&r.p_value));
        assert_eq!(r.w_plus + r.w_minus, (r.n * (r.n + 1)) as f64 / 2.0);
    }

    #[test]
    fn exact_branch_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sims = 2000;
        let rejected = (0..sims)
            .filter(|_| {
                let x: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
                let y: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
                wilcoxon_signed_rank(&x, &y).unwrap().p_value < 0.05
            })
            .count();
        let rate = rejected as f64 / sims as f64;
        assert!((0.02..=0.09).contains(&rate), "{rate}");
    }

    #[test]
    fn cliffs_examples() {
        assert_eq!(
            cliffs_delta(&[5.0, 6.0], &[1.0, 2.0]).unwrap(),
            (1.0, Magnitude::Large)
        );
        assert_eq!(
            cliffs_delta(&[1.0, 2.0], &[1.0, 3.0]).unwrap(),
            (-0.25, Magnitude::Small)
        );
        assert_eq!(
            cliffs_delta(&[3.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(),
            (0.0, Magnitude::Negligible)
        );
        assert_eq!(Magnitude::of(0.33), Magnitude::Medium);
        assert_eq!(Magnitude::of(-0.474), Magnitude::Large);
        assert!(cliffs_delta(&[], &[1.0]).is_err());
    }
}

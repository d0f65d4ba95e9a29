use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

/// Up to `k` distinct uniform draws from `candidates` minus `fixers`, in
/// draw order. Returns the whole pool, in candidate order, when it holds at
/// most `k` developers.
pub fn sample_negatives<'a, R: Rng + ?Sized>(
    fixers: &BTreeSet<String>,
    candidates: &'a [String],
    k: usize,
    rng: &mut R,
) -> Vec<&'a str> {
    let pool: Vec<&str> = candidates
        .iter()
        .map(String::as_str)
        .filter(|c| !fixers.contains(*c))
        .collect();
    if pool.len() <= k {
        return pool;
    }
    sample(rng, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

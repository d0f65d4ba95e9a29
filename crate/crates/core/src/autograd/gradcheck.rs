use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Gradients, Params};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Max over checked coordinates of `|a − n| / max(1, |a|, |n|)`.
    pub max_rel_error: f64,
    /// Worst error per parameter name.
    pub per_param: Vec<(String, f64)>,
    pub coordinates_checked: usize,
}

/// Compares analytic gradients against central differences.
///
/// `f` must be deterministic. Parameters with more than `max_coords` entries
/// are checked on a seeded random subset of coordinates.
pub fn finite_diff_check<F>(
    params: &Params,
    analytic: &Gradients,
    mut f: F,
    h: f64,
    max_coords: usize,
    seed: u64,
) -> GradCheckReport
where
    F: FnMut(&Params) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work = params.clone();
    let mut max_rel_error: f64 = 0.0;
    let mut per_param = Vec::with_capacity(params.len());
    let mut coordinates_checked = 0;

    for (id, name, value) in params.iter() {
        let n = value.len();
        let coords: Vec<usize> = if n <= max_coords {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, max_coords).into_vec();
            c.sort_unstable();
            c
        };
        let mut worst: f64 = 0.0;
        for c in coords {
            let orig = value.values()[c];
            work.get_mut(id).values_mut()[c] = orig + h;
            let up = f(&work);
            work.get_mut(id).values_mut()[c] = orig - h;
            let down = f(&work);
            work.get_mut(id).values_mut()[c] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.get(id).map_or(0.0, |g| g.values()[c]);
            let err = (a - numeric).abs() / 1f64.max(a.abs()).max(numeric.abs());
            worst = worst.max(err);
            coordinates_checked += 1;
        }
        max_rel_error = max_rel_error.max(worst);
        per_param.push((name.to_string(), worst));
    }
    GradCheckReport {
        max_rel_error,
        per_param,
        coordinates_checked,
    }
}

//! Gradient-based one-side sampling.

use rand::seq::index;
use rand::Rng;

use super::GbdtError;

/// Rows used for one tree and the weight applied to their gradients.
/// `rows` is ascending; `multipliers[i]` belongs to `rows[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSample {
    pub rows: Vec<u32>,
    pub multipliers: Vec<f64>,
}

impl RowSample {
    pub fn all(n: usize) -> Self {
        Self { rows: (0..n as u32).collect(), multipliers: vec![1.0; n] }
    }
}

pub(crate) fn check_rates(a: f64, b: f64) -> Result<(), GbdtError> {
    // a = 1 keeps every row, so the sampled share is irrelevant
    let in_range = (0.0..=1.0).contains(&a) && b > 0.0 && b <= 1.0;
    if in_range && (a == 1.0 || a + b <= 1.0 + 1e-12) {
        Ok(())
    } else {
        Err(GbdtError::BadRates { top_rate: a, other_rate: b })
    }
}

/// `ceil(x)` that ignores float noise such as `0.2 * 100 = 20.000000000000004`.
fn ceil_count(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// Keeps the `ceil(a n)` rows with the largest `|g|` (ties: lower row id
/// first) and samples `ceil(b n)` of the remaining rows uniformly without
/// replacement, weighting those by `(1 - a) / b`.
pub fn goss_sample(abs_grad: &[f64], a: f64, b: f64, rng: &mut impl Rng) -> Result<RowSample, GbdtError> {
    check_rates(a, b)?;
    let n = abs_grad.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&x, &y| abs_grad[y as usize].total_cmp(&abs_grad[x as usize]).then(x.cmp(&y)));

    let top = ceil_count(a * n as f64).min(n);
    let rest = &order[top..];
    let take = ceil_count(b * n as f64).min(rest.len());
    let weight = (1.0 - a) / b;

    let mut picked: Vec<(u32, f64)> = order[..top].iter().map(|&r| (r, 1.0)).collect();
    if take > 0 {
        picked.extend(index::sample(rng, rest.len(), take).into_iter().map(|i| (rest[i], weight)));
    }
    picked.sort_unstable_by_key(|p| p.0);
    Ok(RowSample {
        rows: picked.iter().map(|p| p.0).collect(),
        multipliers: picked.iter().map(|p| p.1).collect(),
    })
}

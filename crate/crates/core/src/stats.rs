//! Paired comparison statistics for the experiment tables.

use statrs::distribution::{ContinuousCDF, Normal};

/// Largest sample size handled by the exact null distribution; larger samples
/// use the normal approximation with tie and continuity corrections.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("paired samples have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
}

/// Two-sided Wilcoxon signed-rank test for paired samples.
///
/// Zero differences are dropped; tied absolute differences share their mean
/// rank. Up to [`EXACT_LIMIT`] non-zero pairs the p-value comes from full
/// enumeration of the null distribution (via a subset-sum count over doubled
/// ranks), beyond that from the normal approximation. Returns 1.0 when every
/// pair is tied.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }

    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = mean_ranks_ascending(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let p = if n <= EXACT_LIMIT {
        exact_two_sided(&ranks, w_plus)
    } else {
        normal_two_sided(&abs, &ranks, w_plus)
    };
    Ok(p.min(1.0))
}

/// Ascending ranks (1-based) with ties replaced by their mean rank.
fn mean_ranks_ascending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based positions i+1 ..= j+1 share their mean.
        let mean = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

/// Exact two-sided p-value: counts sign assignments by subset-sum over the
/// doubled ranks (doubling makes half-ranks from ties integral).
fn exact_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &d in &doubled {
        for s in (d..=total).rev() {
            counts[s] += counts[s - d];
        }
    }
    let observed = (2.0 * w_plus).round() as usize;
    let all: f64 = (1u64 << ranks.len()) as f64;
    let le: u64 = counts[..=observed].iter().sum();
    let ge: u64 = counts[observed..].iter().sum();
    2.0 * (le.min(ge) as f64 / all)
}

fn normal_two_sided(abs: &[f64], ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    // Tie correction: subtract (t^3 - t)/48 per group of equal |d|.
    let mut sorted = abs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += (t * t * t - t) / 48.0;
        i = j + 1;
    }
    let variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    2.0 * (1.0 - normal.cdf(z))
}

/// Descending ranks (1 = largest) with ties replaced by their mean rank.
pub fn ranks_descending(values: &[f64]) -> Vec<f64> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    mean_ranks_ascending(&negated)
}

/// Average per-variant rank across instances. `per_instance[i]` holds one
/// summary value per variant for instance `i`; every row ranks its variants
/// (1 = best, descending by value) and the ranks are averaged column-wise.
pub fn mean_ranks(per_instance: &[Vec<f64>]) -> Result<Vec<f64>, StatsError> {
    let Some(first) = per_instance.first() else {
        return Ok(Vec::new());
    };
    let width = first.len();
    let mut sums = vec![0.0; width];
    for row in per_instance {
        if row.len() != width {
            return Err(StatsError::LengthMismatch {
                left: width,
                right: row.len(),
            });
        }
        for (s, r) in sums.iter_mut().zip(ranks_descending(row)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / per_instance.len() as f64).collect())
}

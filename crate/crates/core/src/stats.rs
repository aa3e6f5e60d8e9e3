//! Small statistics kit for the Monte Carlo checks: Wilson intervals for
//! probabilities, normal intervals for means, type-7 quantiles, total
//! variation against a discrete reference law, least-squares slopes, and a
//! percentile bootstrap for quantile differences.

use std::collections::BTreeMap;

use rand::Rng;

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson_interval needs at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Sample mean with a z-interval. Returns (mean, lo, hi).
pub fn mean_interval(xs: &[f64], z: f64) -> (f64, f64, f64) {
    assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, mean, mean);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let half = z * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

/// Type-7 quantile of a sorted sample (the numpy/R default).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Total variation distance between an empirical law given by `counts`
/// (value -> occurrences, `n` total) and a reference pmf on integers
/// `k >= k_min`. The reference is scanned past the largest observed value
/// until its remaining tail falls below 1e-12; that residual tail counts
/// fully toward the distance.
pub fn total_variation<F>(counts: &BTreeMap<u64, u64>, n: u64, k_min: u64, pmf: F) -> f64
where
    F: Fn(u64) -> f64,
{
    assert!(n > 0);
    let max_obs = counts.keys().next_back().copied().unwrap_or(k_min);
    let mut acc = 0.0;
    let mut oracle_mass = 0.0;
    let mut k = k_min;
    loop {
        let p = pmf(k);
        oracle_mass += p;
        let emp = counts.get(&k).copied().unwrap_or(0) as f64 / n as f64;
        acc += (emp - p).abs();
        if k >= max_obs && 1.0 - oracle_mass < 1e-12 {
            break;
        }
        k += 1;
        if k > max_obs.max(k_min) + 10_000_000 {
            break;
        }
    }
    // Any reference mass never reached contributes in full.
    0.5 * (acc + (1.0 - oracle_mass).max(0.0))
}

/// Least-squares slope of y against x.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    assert!(sxx > 0.0, "slope undefined: x values are constant");
    sxy / sxx
}

/// Quantile difference Q_level(upper) - Q_level(lower) with a percentile
/// bootstrap interval.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct QuantileDiff {
    pub level: f64,
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Percentile bootstrap (99%) for the difference of one quantile between two
/// independent samples.
pub fn bootstrap_quantile_diff<R: Rng + ?Sized>(
    lower: &[f64],
    upper: &[f64],
    level: f64,
    resamples: usize,
    rng: &mut R,
) -> QuantileDiff {
    assert!(!lower.is_empty() && !upper.is_empty());
    let mut lo_sorted = lower.to_vec();
    let mut up_sorted = upper.to_vec();
    lo_sorted.sort_by(f64::total_cmp);
    up_sorted.sort_by(f64::total_cmp);
    let delta = quantile_sorted(&up_sorted, level) - quantile_sorted(&lo_sorted, level);

    let mut deltas = Vec::with_capacity(resamples);
    let mut lo_buf = vec![0.0; lower.len()];
    let mut up_buf = vec![0.0; upper.len()];
    for _ in 0..resamples {
        for slot in lo_buf.iter_mut() {
            *slot = lower[rng.random_range(0..lower.len())];
        }
        for slot in up_buf.iter_mut() {
            *slot = upper[rng.random_range(0..upper.len())];
        }
        lo_buf.sort_by(f64::total_cmp);
        up_buf.sort_by(f64::total_cmp);
        deltas.push(quantile_sorted(&up_buf, level) - quantile_sorted(&lo_buf, level));
    }
    deltas.sort_by(f64::total_cmp);
    QuantileDiff {
        level,
        delta,
        ci_low: quantile_sorted(&deltas, 0.005),
        ci_high: quantile_sorted(&deltas, 0.995),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_known_value() {
        // 50/100 at z = 1.96: classic textbook interval (0.4038, 0.5962).
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!((lo - 0.4038).abs() < 5e-4, "lo {lo}");
        assert!((hi - 0.5962).abs() < 5e-4, "hi {hi}");
    }

    #[test]
    fn quantile_type7() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert!((quantile_sorted(&xs, 0.5) - 2.5).abs() < 1e-12);
        assert!((quantile_sorted(&xs, 0.25) - 1.75).abs() < 1e-12);
    }

    #[test]
    fn total_variation_of_exact_law_is_zero() {
        // Geometric(1/2) empirical counts proportional to the pmf itself.
        let mut counts = BTreeMap::new();
        let n = 1u64 << 20;
        for k in 1..=20u64 {
            counts.insert(k, n >> k);
        }
        let total: u64 = counts.values().sum();
        let tv = total_variation(&counts, total, 1, |k| 0.5f64.powi(k as i32));
        // The empirical law is truncated at 20, so tv equals the tail beyond.
        assert!(tv < 1e-6, "tv {tv}");
    }

    #[test]
    fn slope_of_exact_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((ls_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_diff_brackets_shift() {
        let mut rng = crate::rng::seeded_rng(3);
        let lower: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        let upper: Vec<f64> = lower.iter().map(|x| x + 1.0).collect();
        let d = bootstrap_quantile_diff(&lower, &upper, 0.5, 400, &mut rng);
        assert!(d.delta > 0.9 && d.delta < 1.1);
        assert!(d.ci_low > 0.8 && d.ci_high < 1.2);
    }
}

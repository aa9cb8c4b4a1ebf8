use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mean, StatsError};

pub const BOOTSTRAP_RESAMPLES: usize = 3000;

pub fn mean_difference(a: &[f64], b: &[f64]) -> f64 {
    mean(a) - mean(b)
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample_value<F>(stat: &F, a: &[f64], b: &[f64], seed: u64, r: usize, ra: &mut Vec<f64>, rb: &mut Vec<f64>) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    // One stream per resample: results do not depend on how work is split.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    ra.clear();
    rb.clear();
    ra.extend((0..a.len()).map(|_| a[rng.random_range(0..a.len())]));
    rb.extend((0..b.len()).map(|_| b[rng.random_range(0..b.len())]));
    stat(ra, rb)
}

/// Statistic over `resamples` independent two-sample resamples, in
/// resample order. `threads > 1` splits the work without changing output.
pub fn bootstrap_distribution<F>(stat: &F, a: &[f64], b: &[f64], resamples: usize, seed: u64, threads: usize) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    let run = |range: std::ops::Range<usize>| {
        let mut ra = Vec::with_capacity(a.len());
        let mut rb = Vec::with_capacity(b.len());
        range
            .map(|r| resample_value(stat, a, b, seed, r, &mut ra, &mut rb))
            .collect::<Vec<_>>()
    };
    let threads = threads.clamp(1, resamples.max(1));
    if threads == 1 {
        return run(0..resamples);
    }
    let chunk = resamples.div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let range = (t * chunk).min(resamples)..((t + 1) * chunk).min(resamples);
                s.spawn(move || run(range))
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("bootstrap worker")).collect()
    })
}

/// Percentile bootstrap interval for a two-sample statistic. Resamples whose
/// statistic is not finite (e.g. a zero-variance resample for d) are dropped.
pub fn bootstrap_ci<F>(stat: F, a: &[f64], b: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64), StatsError>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    bootstrap_ci_threads(stat, a, b, resamples, level, seed, 1)
}

pub fn bootstrap_ci_threads<F>(
    stat: F,
    a: &[f64],
    b: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
    threads: usize,
) -> Result<(f64, f64), StatsError>
where
    F: Fn(&[f64], &[f64]) -> f64 + Sync,
{
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if resamples < 100 {
        return Err(StatsError::InvalidArgument(format!("need at least 100 resamples, got {resamples}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidArgument(format!("confidence level {level} outside (0, 1)")));
    }
    let mut values: Vec<f64> = bootstrap_distribution(&stat, a, b, resamples, seed, threads)
        .into_iter()
        .filter(|v| v.is_finite())
        .collect();
    if values.is_empty() {
        return Err(StatsError::DegenerateSample("no resample produced a finite statistic".into()));
    }
    values.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    Ok((percentile(&values, alpha / 2.0), percentile(&values, 1.0 - alpha / 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_thread_independent() {
        let a = [1.0, 4.0, 2.5, 3.3, 5.1, 0.2];
        let b = [2.0, 2.2, 1.9, 0.5];
        let x = bootstrap_ci(mean_difference, &a, &b, 500, 0.95, 9).unwrap();
        let y = bootstrap_ci(mean_difference, &a, &b, 500, 0.95, 9).unwrap();
        let z = bootstrap_ci_threads(mean_difference, &a, &b, 500, 0.95, 9, 4).unwrap();
        assert_eq!(x, y);
        assert_eq!(x, z);
        assert!(x.0 <= x.1);
        assert_ne!(x, bootstrap_ci(mean_difference, &a, &b, 500, 0.95, 10).unwrap());
    }

    #[test]
    fn constant_sample() {
        let (lo, hi) = bootstrap_ci(|a, _| mean(a), &[4.0; 5], &[1.0], 200, 0.95, 1).unwrap();
        assert_eq!((lo, hi), (4.0, 4.0));
    }

    #[test]
    fn preconditions() {
        assert_eq!(bootstrap_ci(mean_difference, &[], &[1.0], 200, 0.95, 1), Err(StatsError::EmptyInput));
        assert!(bootstrap_ci(mean_difference, &[1.0], &[1.0], 50, 0.95, 1).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!((percentile(&v, 0.5) - 2.5).abs() < 1e-15);
    }
}

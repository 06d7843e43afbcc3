//! Aggregate statistics over per-run scores.

use rand::Rng;

use crate::error::{Error, Result};

fn nonempty(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        Err(Error::Empty)
    } else {
        Ok(())
    }
}

/// Interquartile mean: drops `⌊n/4⌋` scores from each end of the sorted list.
pub fn iqm(scores: &[f64]) -> Result<f64> {
    nonempty(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = sorted.len() / 4;
    let mid = &sorted[cut..sorted.len() - cut];
    Ok(mid.iter().sum::<f64>() / mid.len() as f64)
}

/// Mean shortfall below `target`.
pub fn optimality_gap(scores: &[f64], target: f64) -> Result<f64> {
    nonempty(scores)?;
    Ok(scores.iter().map(|&s| (target - s).max(0.0)).sum::<f64>() / scores.len() as f64)
}

/// Share of pairs where `x` beats `y`, ties counting one half.
pub fn prob_improvement(x: &[f64], y: &[f64]) -> Result<f64> {
    nonempty(x)?;
    nonempty(y)?;
    // count in half-units so the two directions sum to exactly one
    let mut halves = 0u64;
    for a in x {
        for b in y {
            halves += match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(halves as f64 / (2 * x.len() * y.len()) as f64)
}

/// Percentile bootstrap interval of `stat` at the given confidence level.
pub fn bootstrap_ci<R: Rng + ?Sized>(
    stat: impl Fn(&[f64]) -> Result<f64>,
    scores: &[f64],
    n_resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    nonempty(scores)?;
    if n_resamples < 100 {
        return Err(Error::Config("n_resamples must be >= 100".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config("confidence must lie in (0, 1)".into()));
    }
    let n = scores.len();
    let mut buf = vec![0.0; n];
    let mut stats = Vec::with_capacity(n_resamples);
    for _ in 0..n_resamples {
        for b in buf.iter_mut() {
            *b = scores[rng.random_range(0..n)];
        }
        stats.push(stat(&buf)?);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    Ok((percentile(&stats, alpha), percentile(&stats, 1.0 - alpha)))
}

/// Linear-interpolated percentile of sorted data, `q ∈ [0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iqm_cases() {
        let s: Vec<f64> = (1..=8).map(f64::from).collect();
        assert_eq!(iqm(&s).unwrap(), 4.5);
        assert_eq!(iqm(&[3.0; 5]).unwrap(), 3.0);
        assert_eq!(iqm(&[7.0]).unwrap(), 7.0);
        assert_eq!(iqm(&[]), Err(Error::Empty));
        // 5 scores: one dropped per side
        assert_eq!(iqm(&[100.0, 1.0, 2.0, 3.0, -100.0]).unwrap(), 2.0);
    }

    #[test]
    fn gap_cases() {
        assert_eq!(optimality_gap(&[0.5, 1.5], 1.0).unwrap(), 0.25);
        assert_eq!(optimality_gap(&[1.0, 2.0], 1.0).unwrap(), 0.0);
        assert_eq!(optimality_gap(&[0.0], 1.0).unwrap(), 1.0);
    }

    #[test]
    fn improvement_cases() {
        assert_eq!(prob_improvement(&[1.0, 2.0], &[0.0, 1.0]).unwrap(), 0.875);
        assert_eq!(prob_improvement(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert_eq!(prob_improvement(&[5.0, 6.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert!(prob_improvement(&[], &[1.0]).is_err());
    }

    #[test]
    fn bootstrap_cases() {
        let s: Vec<f64> = (1..=8).map(f64::from).collect();
        let ci = |seed| bootstrap_ci(iqm, &s, 1000, 0.95, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (lo, hi) = ci(1);
        assert!(lo <= 4.5 && 4.5 <= hi, "({lo}, {hi})");
        assert_eq!(ci(1), ci(1));
        let c = bootstrap_ci(iqm, &[2.0; 6], 200, 0.9, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(c, (2.0, 2.0));
        assert!(bootstrap_ci(iqm, &s, 10, 0.9, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}

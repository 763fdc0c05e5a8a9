//! 256-bin histograms and Otsu threshold selection.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HistogramError {
    #[error("cannot build a histogram from an empty sequence")]
    EmptyInput,
}

/// Relative tolerance under which two between-class variances count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Counts of 8-bit levels. Always holds at least one sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram256 {
    counts: [u64; 256],
    total: u64,
}

impl Histogram256 {
    pub fn from_counts(counts: [u64; 256]) -> Result<Self, HistogramError> {
        let total = counts.iter().sum();
        if total == 0 {
            return Err(HistogramError::EmptyInput);
        }
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[u64; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Between-class variance of the split "≤ k" / "> k", in probability units.
    /// Zero when either class is empty.
    pub fn between_class_variance(&self, k: u8) -> f64 {
        let (mut n0, mut s0) = (0u64, 0u64);
        let (mut n1, mut s1) = (0u64, 0u64);
        for (level, &c) in self.counts.iter().enumerate() {
            if level <= k as usize {
                n0 += c;
                s0 += c * level as u64;
            } else {
                n1 += c;
                s1 += c * level as u64;
            }
        }
        variance_from_moments(n0, s0, n1, s1, self.total)
    }
}

fn variance_from_moments(n0: u64, s0: u64, n1: u64, s1: u64, total: u64) -> f64 {
    if n0 == 0 || n1 == 0 {
        return 0.0;
    }
    let total = total as f64;
    let w0 = n0 as f64 / total;
    let w1 = n1 as f64 / total;
    let mu0 = s0 as f64 / n0 as f64;
    let mu1 = s1 as f64 / n1 as f64;
    w0 * w1 * (mu0 - mu1) * (mu0 - mu1)
}

pub fn build_histogram(levels: &[u8]) -> Result<Histogram256, HistogramError> {
    let mut counts = [0u64; 256];
    for &v in levels {
        counts[v as usize] += 1;
    }
    Histogram256::from_counts(counts)
}

/// Otsu's threshold: the smallest `k` maximizing the between-class variance,
/// with class 0 holding levels `≤ k`.
///
/// With fewer than two populated bins the lowest populated bin is returned.
pub fn otsu_threshold(h: &Histogram256) -> u8 {
    let populated = h.counts.iter().filter(|&&c| c > 0).count();
    let lowest = h.counts.iter().position(|&c| c > 0).unwrap_or(0) as u8;
    if populated < 2 {
        return lowest;
    }

    let total_sum: u64 = h.counts.iter().enumerate().map(|(l, &c)| c * l as u64).sum();
    let mut variances = [0f64; 256];
    let (mut n0, mut s0) = (0u64, 0u64);
    for (k, &c) in h.counts.iter().enumerate() {
        n0 += c;
        s0 += c * k as u64;
        variances[k] = variance_from_moments(n0, s0, h.total - n0, total_sum - s0, h.total);
    }

    let max = variances.iter().copied().fold(0.0, f64::max);
    let floor = max - max * TIE_TOLERANCE;
    variances.iter().position(|&v| v >= floor).map_or(lowest, |k| k as u8)
}

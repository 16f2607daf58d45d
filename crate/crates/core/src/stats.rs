//! Summary statistics of SIF samples.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    /// `median − p25`.
    pub minus: f64,
    /// `p75 − median`.
    pub plus: f64,
}

/// Percentile by linear interpolation between order statistics at rank
/// `(n − 1) p`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (sorted.len() - 1) as f64 * p;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn summarize(samples: &[f64]) -> Option<Summary> {
    if samples.len() < 2 || samples.iter().any(|v| v.is_nan()) {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = percentile(&sorted, 0.5);
    Some(Summary { mean, std, median, minus: median - percentile(&sorted, 0.25), plus: percentile(&sorted, 0.75) - median })
}

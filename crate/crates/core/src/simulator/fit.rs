//! Exponential rate fits and empirical survival tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RateFit;

/// Least-squares fit of `log(value) = intercept - rate * t` over the points
/// with `t` in `window` and `value > floor`.
///
/// The fit is rejected as [`Error::BelowNoiseFloor`] unless the rate exceeds
/// twice its standard error.
pub fn fit_rate(times: &[f64], values: &[f64], window: (f64, f64), floor: f64) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| t >= window.0 && t <= window.1 && v > floor.max(0.0) && v.is_finite())
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::WindowTooSparse {
            t_min: window.0,
            t_max: window.1,
            n,
        });
    }
    let nf = n as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if sxx == 0.0 {
        return Err(Error::WindowTooSparse {
            t_min: window.0,
            t_max: window.1,
            n: 1,
        });
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if n > 2 { (rss / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let rate = -slope;
    if !(rate > 0.0) || rate <= 2.0 * stderr {
        return Err(Error::BelowNoiseFloor { slope });
    }
    Ok(RateFit {
        rate,
        intercept,
        window,
        stderr,
        n_points: n,
    })
}

/// Empirical survival `P(T > t)` on a grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub thresholds: Vec<f64>,
    pub survival: Vec<f64>,
    /// Number of samples behind each entry.
    pub n: usize,
}

impl TailTable {
    /// Builds the table from raw samples; `thresholds` must be increasing.
    pub fn from_samples(samples: &[f64], thresholds: &[f64]) -> Result<Self> {
        if thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("thresholds must be strictly increasing".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let survival = thresholds
            .iter()
            .map(|&t| {
                let at_or_below = sorted.partition_point(|&s| s <= t);
                (n - at_or_below) as f64 / n as f64
            })
            .collect();
        Ok(Self {
            thresholds: thresholds.to_vec(),
            survival,
            n,
        })
    }

    /// Binomial standard error of entry `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        let p = self.survival[i];
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    /// Number of samples above threshold `i`.
    pub fn count(&self, i: usize) -> usize {
        (self.survival[i] * self.n as f64).round() as usize
    }

    /// Window from the first threshold where survival is at most `start_below`
    /// to the last threshold with at least `min_count` surviving samples.
    pub fn auto_window(&self, start_below: f64, min_count: usize) -> Option<(f64, f64)> {
        let first = self.survival.iter().position(|&p| p <= start_below)?;
        let last = (0..self.thresholds.len()).rev().find(|&i| self.count(i) >= min_count)?;
        (last > first).then(|| (self.thresholds[first], self.thresholds[last]))
    }

    /// Exponential rate fitted on `window`, ignoring empty entries.
    pub fn fit(&self, window: (f64, f64)) -> Result<RateFit> {
        fit_rate(&self.thresholds, &self.survival, window, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn exact_exponential() {
        let t: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| (-3.0 * t).exp()).collect();
        let f = fit_rate(&t, &v, (1.0, 10.0), 0.0).unwrap();
        assert!((f.rate - 3.0).abs() < 1e-12);
        assert_eq!(f.n_points, 10);
    }

    #[test]
    fn noisy_exponential() {
        let mut rng = RngStream::new(42, 0);
        let t: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|t| (-2.0 * t).exp() * (1.0 + 0.05 * rng.normal()))
            .collect();
        let f = fit_rate(&t, &v, (0.0, 4.0), 0.0).unwrap();
        assert!((f.rate - 2.0).abs() < 0.2, "{}", f.rate);
    }

    #[test]
    fn constant_is_below_noise_floor() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let v = [0.1; 4];
        assert!(matches!(
            fit_rate(&t, &v, (0.0, 5.0), 0.0),
            Err(Error::BelowNoiseFloor { .. })
        ));
    }

    #[test]
    fn sparse_window() {
        let t = [1.0, 2.0, 3.0];
        let v = [0.5, 0.2, 0.1];
        assert!(matches!(
            fit_rate(&t, &v, (1.5, 3.0), 0.0),
            Err(Error::WindowTooSparse { n: 2, .. })
        ));
        assert!(matches!(
            fit_rate(&t, &v, (0.0, 3.0), 0.3),
            Err(Error::WindowTooSparse { n: 1, .. })
        ));
    }

    #[test]
    fn tail_table_counts() {
        let s = [0.1, 0.2, 0.2, 0.5, 1.0];
        let tt = TailTable::from_samples(&s, &[0.0, 0.2, 0.6]).unwrap();
        assert_eq!(tt.survival, vec![1.0, 0.4, 0.2]);
        assert_eq!(tt.count(1), 2);
        assert!(TailTable::from_samples(&s, &[0.2, 0.1]).is_err());
    }

    proptest! {
        #[test]
        fn survival_is_monotone(samples in proptest::collection::vec(0.0f64..5.0, 1..200)) {
            let grid: Vec<f64> = (0..50).map(|k| 0.1 * k as f64).collect();
            let tt = TailTable::from_samples(&samples, &grid).unwrap();
            for w in tt.survival.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            prop_assert!(tt.survival.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}

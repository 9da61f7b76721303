//! Ensembles of independent paths binned on a fixed partition, and the
//! total-variation distance between two such ensembles.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::InvariantDensity;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::ProcessSpec;
use crate::rng::{stream_of, RngStream};

use super::{grid_steps, restart, SimOptions, Stepper};

/// Paths are processed in chunks of this size; counts are integers, so the
/// merge order cannot change the result.
const CHUNK: usize = 256;

/// Monte Carlo budget of one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub bins: usize,
    pub dt: f64,
    pub seed: u64,
}

impl EnsembleConfig {
    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidArgument("n_paths must be positive".into()));
        }
        if self.bins < 32 {
            return Err(Error::InvalidArgument(format!(
                "need at least 32 bins, got {}",
                self.bins
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::NonpositiveDt(self.dt));
        }
        Ok(())
    }
}

/// Law of `X_t` over an ensemble, as bin masses on an equal-width partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSnapshot {
    pub t: f64,
    pub histogram: Vec<f64>,
    pub n_paths: usize,
}

/// What the ensemble started at `x` is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvTarget {
    /// A second ensemble started at this point.
    Point(f64),
    /// Independent draws from the invariant law.
    Invariant,
}

/// Empirical total-variation distance over time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TVCurve {
    pub times: Vec<f64>,
    pub tv: Vec<f64>,
    /// Expected TV between two independent ensembles of the same law.
    pub noise_floor: Vec<f64>,
    pub start_x: f64,
    pub target: TvTarget,
    pub n_paths: usize,
    pub bins: usize,
}

impl TVCurve {
    /// Rate fitted over `window`, using only points at least twice the noise floor.
    pub fn fit(&self, window: (f64, f64)) -> Result<crate::model::RateFit> {
        let t: Vec<f64> = self.times.clone();
        let v: Vec<f64> = self
            .tv
            .iter()
            .zip(&self.noise_floor)
            .map(|(&tv, &fl)| if tv > 2.0 * fl { tv } else { 0.0 })
            .collect();
        super::fit_rate(&t, &v, window, 0.0)
    }
}

#[inline]
fn bin_of(x: f64, a: f64, width: f64, bins: usize) -> usize {
    (((x - a) / width) as usize).min(bins - 1)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Bin counts (row per time) of `n_paths` paths from `x`, stream ids tagged by `tag`.
fn ensemble_counts(spec: &ProcessSpec, x: f64, times: &[f64], ens: &EnsembleConfig, tag: u32) -> Result<Vec<Vec<u64>>> {
    let stepper = Stepper::new(spec, ens.dt, SimOptions::default())?;
    spec.interval.check_inside(x)?;
    let a = spec.interval.a;
    let width = spec.length() / ens.bins as f64;
    let marks: Vec<usize> = times.iter().map(|&t| grid_steps(t, ens.dt)).collect();
    let n_chunks = ens.n_paths.div_ceil(CHUNK);
    let zero = || vec![vec![0u64; ens.bins]; times.len()];
    let merged = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut counts = zero();
            for i in c * CHUNK..((c + 1) * CHUNK).min(ens.n_paths) {
                let mut rng = RngStream::new(ens.seed, stream_of(tag, i as u64));
                let mut pos = x;
                let mut done = 0usize;
                for (row, &mark) in marks.iter().enumerate() {
                    while done < mark {
                        let (next, exit) = stepper.step(pos, &mut rng);
                        pos = if exit.is_some() { restart(spec, &mut rng) } else { next };
                        done += 1;
                    }
                    counts[row][bin_of(pos, a, width, ens.bins)] += 1;
                }
            }
            counts
        })
        .reduce(zero, |mut acc, part| {
            for (r, p) in acc.iter_mut().zip(part) {
                for (u, v) in r.iter_mut().zip(p) {
                    *u += v;
                }
            }
            acc
        });
    Ok(merged)
}

fn to_snapshots(times: &[f64], counts: Vec<Vec<u64>>, n: usize) -> Vec<EnsembleSnapshot> {
    times
        .iter()
        .zip(counts)
        .map(|(&t, row)| EnsembleSnapshot {
            t,
            histogram: row.into_iter().map(|c| c as f64 / n as f64).collect(),
            n_paths: n,
        })
        .collect()
}

/// Histograms of `X_t` at each of `times` for paths started at `x`.
pub fn ensemble_snapshots(
    spec: &ProcessSpec,
    x: f64,
    times: &[f64],
    ens: &EnsembleConfig,
) -> Result<Vec<EnsembleSnapshot>> {
    ens.check()?;
    check_times(times)?;
    let counts = ensemble_counts(spec, x, times, ens, 0)?;
    Ok(to_snapshots(times, counts, ens.n_paths))
}

/// Half the L1 distance between two histograms.
pub fn histogram_tv(p: &[f64], q: &[f64]) -> f64 {
    (0.5 * p.iter().zip(q).map(|(u, v)| (u - v).abs()).sum::<f64>()).clamp(0.0, 1.0)
}

/// Expected TV between two independent `n`-sample histograms of the law `p`:
/// `sum_i sqrt(p_i / (pi n))` to leading order.
pub fn tv_noise_floor(p: &[f64], n: usize) -> f64 {
    p.iter().map(|&pi| (pi / (PI * n as f64)).sqrt()).sum()
}

/// TV between the ensemble from `x` and `target` at each of `times`.
pub fn ensemble_tv(
    spec: &ProcessSpec,
    x: f64,
    target: TvTarget,
    times: &[f64],
    ens: &EnsembleConfig,
) -> Result<TVCurve> {
    ens.check()?;
    check_times(times)?;
    let first = to_snapshots(times, ensemble_counts(spec, x, times, ens, 0)?, ens.n_paths);
    let second = match target {
        TvTarget::Point(y) => to_snapshots(times, ensemble_counts(spec, y, times, ens, 1)?, ens.n_paths),
        TvTarget::Invariant => invariant_snapshots(spec, times, ens)?,
    };
    let mut tv = Vec::with_capacity(times.len());
    let mut noise_floor = Vec::with_capacity(times.len());
    for (p, q) in first.iter().zip(&second) {
        tv.push(histogram_tv(&p.histogram, &q.histogram));
        let pooled: Vec<f64> = p
            .histogram
            .iter()
            .zip(&q.histogram)
            .map(|(u, v)| 0.5 * (u + v))
            .collect();
        noise_floor.push(tv_noise_floor(&pooled, ens.n_paths));
    }
    Ok(TVCurve {
        times: times.to_vec(),
        tv,
        noise_floor,
        start_x: x,
        target,
        n_paths: ens.n_paths,
        bins: ens.bins,
    })
}

/// Fresh multinomial draws from the invariant bin masses at every time.
fn invariant_snapshots(spec: &ProcessSpec, times: &[f64], ens: &EnsembleConfig) -> Result<Vec<EnsembleSnapshot>> {
    let cfg = SolverConfig::default();
    let density = InvariantDensity::new(spec, &cfg);
    let a = spec.interval.a;
    let width = spec.length() / ens.bins as f64;
    let mut cum = Vec::with_capacity(ens.bins);
    let mut acc = 0.0;
    for k in 0..ens.bins {
        acc += density.mass(a + k as f64 * width, a + (k + 1) as f64 * width, &cfg);
        cum.push(acc);
    }
    let total = acc;
    Ok(times
        .iter()
        .enumerate()
        .map(|(row, &t)| {
            let mut rng = RngStream::new(ens.seed, stream_of(2, row as u64));
            let mut counts = vec![0u64; ens.bins];
            for _ in 0..ens.n_paths {
                let u = rng.uniform() * total;
                let k = cum.partition_point(|&c| c <= u).min(ens.bins - 1);
                counts[k] += 1;
            }
            EnsembleSnapshot {
                t,
                histogram: counts.into_iter().map(|c| c as f64 / ens.n_paths as f64).collect(),
                n_paths: ens.n_paths,
            }
        })
        .collect())
}

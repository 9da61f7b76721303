//! Monte Carlo for the jump-boundary process: bridge-corrected Gaussian steps,
//! paths with restarts, exit times, ensembles and decay-rate fits.

mod ensemble;
mod fit;
mod lemma;

pub use ensemble::{
    ensemble_snapshots, ensemble_tv, histogram_tv, tv_noise_floor, EnsembleConfig, EnsembleSnapshot, TVCurve, TvTarget,
};
pub use fit::{fit_rate, TailTable};
pub use lemma::{verify_pathwise_lemma, verify_pathwise_lemma_with, LemmaCheck};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{Boundary, PathRealization, ProcessSpec};
use crate::rng::RngStream;

/// Bridge crossing probabilities below `exp(-BRIDGE_CUTOFF)` are treated as zero
/// and consume no uniform draw.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Switches for diagnostics. Production code uses [`SimOptions::default`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Apply the Brownian-bridge exit test inside each step.
    pub bridge_correction: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            bridge_correction: true,
        }
    }
}

/// Probability that a Brownian bridge from `d1` to `d2` (both distances to the
/// same barrier, positive) with variance `var` touches the barrier.
#[inline]
pub fn bridge_cross_probability(d1: f64, d2: f64, var: f64) -> f64 {
    if d1 <= 0.0 || d2 <= 0.0 {
        return 1.0;
    }
    (-2.0 * d1 * d2 / var).exp()
}

/// Bridge test against one barrier: `true` if the bridge touched it.
#[inline]
pub(crate) fn bridge_hit(d1: f64, d2: f64, two_over_var: f64, rng: &mut RngStream) -> bool {
    let e = d1 * d2 * two_over_var;
    e < BRIDGE_CUTOFF && rng.uniform() < (-e).exp()
}

/// Precomputed single-step kernel for one `(spec, dt)` pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stepper {
    pub a: f64,
    pub b: f64,
    drift: f64,
    sd: f64,
    two_over_var: f64,
    bridge: bool,
}

impl Stepper {
    pub fn new(spec: &ProcessSpec, dt: f64, opts: SimOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonpositiveDt(dt));
        }
        let var = spec.sigma * spec.sigma * dt;
        Ok(Self {
            a: spec.interval.a,
            b: spec.interval.b,
            drift: spec.mu * dt,
            sd: var.sqrt(),
            two_over_var: 2.0 / var,
            bridge: opts.bridge_correction,
        })
    }

    /// Moves `x` by the Gaussian increment `z`; returns the new position and
    /// the exit side if the step left the interval.
    #[inline]
    pub fn advance(&self, x: f64, z: f64, rng: &mut RngStream) -> (f64, Option<Boundary>) {
        let next = x + self.drift + self.sd * z;
        if next >= self.b {
            return (next, Some(Boundary::Right));
        }
        if next <= self.a {
            return (next, Some(Boundary::Left));
        }
        if self.bridge {
            if bridge_hit(self.b - x, self.b - next, self.two_over_var, rng) {
                return (next, Some(Boundary::Right));
            }
            if bridge_hit(x - self.a, next - self.a, self.two_over_var, rng) {
                return (next, Some(Boundary::Left));
            }
        }
        (next, None)
    }

    #[inline]
    pub fn step(&self, x: f64, rng: &mut RngStream) -> (f64, Option<Boundary>) {
        let z = rng.normal();
        self.advance(x, z, rng)
    }
}

/// Restart location drawn from `nu`; single atoms consume no randomness.
#[inline]
pub(crate) fn restart(spec: &ProcessSpec, rng: &mut RngStream) -> f64 {
    match spec.nu.atoms() {
        [only] => only.location,
        _ => spec.nu.sample_with(rng.uniform()),
    }
}

/// One step of size `dt` from `x`. On exit the returned position is the raw
/// (pre-restart) endpoint of the step.
pub fn step_with_exit(x: f64, dt: f64, spec: &ProcessSpec, rng: &mut RngStream) -> Result<(f64, Option<Boundary>)> {
    step_with_exit_opts(x, dt, spec, rng, SimOptions::default())
}

pub fn step_with_exit_opts(
    x: f64,
    dt: f64,
    spec: &ProcessSpec,
    rng: &mut RngStream,
    opts: SimOptions,
) -> Result<(f64, Option<Boundary>)> {
    let stepper = Stepper::new(spec, dt, opts)?;
    spec.interval.check_inside(x)?;
    Ok(stepper.step(x, rng))
}

/// Path of the jump-boundary process on the grid `k dt`, `k = 0..=ceil(horizon/dt)`.
/// A step that exits records its end time as a jump time and the restart point
/// as the position.
pub fn simulate_path(
    spec: &ProcessSpec,
    x0: f64,
    horizon: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<PathRealization> {
    let stepper = Stepper::new(spec, dt, SimOptions::default())?;
    spec.interval.check_inside(x0)?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be finite and >= 0, got {horizon}"
        )));
    }
    let steps = grid_steps(horizon, dt);
    let mut path = PathRealization {
        times: Vec::with_capacity(steps + 1),
        positions: Vec::with_capacity(steps + 1),
        ..Default::default()
    };
    let mut x = x0;
    path.times.push(0.0);
    path.positions.push(x);
    for k in 1..=steps {
        let t = k as f64 * dt;
        let (next, exit) = stepper.step(x, rng);
        x = match exit {
            None => next,
            Some(side) => {
                let r = restart(spec, rng);
                path.jump_times.push(t);
                path.restart_positions.push(r);
                path.exited_at.push(side);
                r
            }
        };
        path.times.push(t);
        path.positions.push(x);
    }
    Ok(path)
}

/// Number of `dt` steps that reach `t` (rounded to the nearest step).
#[inline]
pub(crate) fn grid_steps(t: f64, dt: f64) -> usize {
    (t / dt - 1e-9).ceil().max(0.0) as usize
}

/// First exit time from the interval (attributed to the end of the exiting step).
pub fn sample_exit_time(spec: &ProcessSpec, x0: f64, dt: f64, rng: &mut RngStream) -> Result<(f64, Boundary)> {
    sample_exit_time_with(spec, x0, dt, rng, SimOptions::default(), &SolverConfig::default())
}

pub fn sample_exit_time_with(
    spec: &ProcessSpec,
    x0: f64,
    dt: f64,
    rng: &mut RngStream,
    opts: SimOptions,
    cfg: &SolverConfig,
) -> Result<(f64, Boundary)> {
    let stepper = Stepper::new(spec, dt, opts)?;
    spec.interval.check_inside(x0)?;
    let mut x = x0;
    let mut k: u64 = 0;
    while k < cfg.max_exit_steps {
        k += 1;
        let (next, exit) = stepper.step(x, rng);
        if let Some(side) = exit {
            return Ok((k as f64 * dt, side));
        }
        x = next;
    }
    Err(Error::HorizonExceeded(cfg.max_exit_steps))
}

/// `n_paths` exit times from `x0`, path `i` on stream `(seed, i)`.
pub fn exit_time_samples(
    spec: &ProcessSpec,
    x0: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    opts: SimOptions,
) -> Result<Vec<(f64, Boundary)>> {
    use rayon::prelude::*;
    let cfg = SolverConfig::default();
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            sample_exit_time_with(spec, x0, dt, &mut rng, opts, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::mean_exit_time;

    #[test]
    fn rejects_bad_dt() {
        let s = ProcessSpec::unit(0.0);
        let mut r = RngStream::new(0, 0);
        assert!(matches!(
            step_with_exit(0.5, 0.0, &s, &mut r),
            Err(Error::NonpositiveDt(_))
        ));
        assert!(matches!(
            step_with_exit(0.5, -1.0, &s, &mut r),
            Err(Error::NonpositiveDt(_))
        ));
    }

    #[test]
    fn bridge_probability_example() {
        let p = bridge_cross_probability(0.001, 0.0005, 1e-4);
        assert!((p - (-0.01f64).exp()).abs() < 1e-15);
        assert!((p - 0.990).abs() < 1e-3);
    }

    #[test]
    fn bridge_probability_matches_fine_bridge() {
        // fine-grid bridge from 0.999 to 0.9995 under barrier 1 over dt = 1e-4
        let (x, y, dt) = (0.999, 0.9995, 1e-4);
        let m = 2000;
        let n = 4000;
        let h = dt / m as f64;
        let mut rng = RngStream::new(5, 0);
        let mut hits = 0;
        for _ in 0..n {
            let mut w = vec![0.0; m + 1];
            for k in 1..=m {
                w[k] = w[k - 1] + h.sqrt() * rng.normal();
            }
            let touched = (0..=m).any(|k| {
                let s = k as f64 / m as f64;
                x + (y - x) * s + w[k] - s * w[m] >= 1.0
            });
            hits += touched as usize;
        }
        let p_hat = hits as f64 / n as f64;
        let p = bridge_cross_probability(1.0 - x, 1.0 - y, dt);
        // a discrete grid misses some touches, so it sits slightly below p
        assert!(p_hat <= p + 0.01 && p_hat > p - 0.05, "{p_hat} vs {p}");
    }

    #[test]
    fn exit_from_midpoint_is_rare_for_small_dt() {
        let s = ProcessSpec::unit(0.0);
        let mut r = RngStream::new(1, 0);
        for _ in 0..10_000 {
            assert!(step_with_exit(0.5, 1e-6, &s, &mut r).unwrap().1.is_none());
        }
    }

    #[test]
    fn step_is_reproducible() {
        let s = ProcessSpec::unit(3.0);
        let a = step_with_exit(0.97, 1e-3, &s, &mut RngStream::new(9, 2)).unwrap();
        let b = step_with_exit(0.97, 1e-3, &s, &mut RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn restarts_land_on_the_atom() {
        let s = ProcessSpec::unit(50.0);
        let p = simulate_path(&s, 0.5, 1.0, 1e-4, &mut RngStream::new(3, 0)).unwrap();
        assert!(!p.jump_times.is_empty());
        assert!(p.exited_at.iter().all(|&b| b == Boundary::Right));
        for &t in &p.jump_times {
            let k = (t / 1e-4).round() as usize;
            assert_eq!(p.positions[k], 0.5);
        }
        assert_eq!(p.times.len(), 10_001);
    }

    #[test]
    fn drift_free_mean_exit_time() {
        let s = ProcessSpec::unit(0.0);
        let n = 20_000;
        let taus = exit_time_samples(&s, 0.5, 1e-4, n, 17, SimOptions::default()).unwrap();
        let m: f64 = taus.iter().map(|t| t.0).sum::<f64>() / n as f64;
        let v: f64 = taus.iter().map(|t| (t.0 - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (v / n as f64).sqrt();
        let exact = mean_exit_time(&s, 0.5, &SolverConfig::default()).unwrap();
        assert!((exact - 0.25).abs() < 1e-12);
        // recording exits at step end adds O(dt) bias
        assert!((m - exact).abs() < 3.0 * se + 1e-4, "{m} vs {exact} (se {se})");
    }

    #[test]
    fn drift_free_exit_sides_balance() {
        let s = ProcessSpec::unit(0.0);
        let n = 20_000;
        let taus = exit_time_samples(&s, 0.5, 1e-4, n, 23, SimOptions::default()).unwrap();
        let right = taus.iter().filter(|t| t.1 == Boundary::Right).count() as f64;
        let se = (n as f64 * 0.25).sqrt();
        assert!((right - n as f64 / 2.0).abs() < 3.0 * se);
    }

    #[test]
    fn bridge_correction_is_needed() {
        let s = ProcessSpec::unit(0.0);
        let n = 20_000;
        let mean = |opts| {
            let t = exit_time_samples(&s, 0.5, 1e-3, n, 29, opts).unwrap();
            t.iter().map(|t| t.0).sum::<f64>() / n as f64
        };
        let with = mean(SimOptions::default());
        let without = mean(SimOptions {
            bridge_correction: false,
        });
        assert!(without > 1.05 * 0.25, "{without}");
        assert!((with - 0.25).abs() < 0.01, "{with}");
    }

    #[test]
    fn jump_count_matches_green_oracle() {
        let s = ProcessSpec::unit(2.0);
        let cfg = SolverConfig::default();
        let horizon = 2.0;
        let n = 4_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let p = simulate_path(&s, 0.5, horizon, 1e-4, &mut RngStream::new(31, i)).unwrap();
                p.jump_times.len() as f64
            })
            .collect();
        let m = counts.iter().sum::<f64>() / n as f64;
        let v = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (v / n as f64).sqrt();
        let e_tau = mean_exit_time(&s, 0.5, &cfg).unwrap();
        // E tau^2 = 2 int g(x, y) E_y tau dy; renewal mean h/m + m2/(2 m^2) - 1
        let m2 = 2.0
            * crate::quadrature::integrate(
                |y| crate::analytic::green_function(&s, 0.5, y).unwrap() * mean_exit_time(&s, y, &cfg).unwrap(),
                0.0,
                1.0,
                &[0.5],
                1e-8,
                0.0,
                1000,
            )
            .value;
        let expected = horizon / e_tau + m2 / (2.0 * e_tau * e_tau) - 1.0;
        assert!((m - expected).abs() < 3.0 * se + 0.02, "{m} vs {expected} (se {se})");
    }
}

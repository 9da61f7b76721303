//! Pathwise check that a driving Brownian path confined to a small window
//! sends the process from `x1` into `A` and keeps it from `x3` out of `A`.
//!
//! With `h = b - x0`: `x1 = x0 + h/4`, `x3 = x0 + 3h/4`, `A = [x0, x0 + h/2)`,
//! `t_n = n h / mu` and the window `J = (-h/(4 sigma), h/(4 sigma))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::ProcessSpec;
use crate::rng::RngStream;

use super::{bridge_hit, grid_steps};

const BATCH: usize = 4096;

/// Outcome of [`verify_pathwise_lemma`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub fraction_x_in_a: f64,
    pub fraction_y_in_a: f64,
    pub accepted: usize,
    pub attempts: usize,
    pub t_n: f64,
}

impl LemmaCheck {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.attempts as f64
    }
}

/// `Some((x1 in A, x3 in A))` if the driving path stayed in `J` up to `t_n`.
fn attempt(spec: &ProcessSpec, steps: usize, dt: f64, rng: &mut RngStream) -> Option<(bool, bool)> {
    let (a, b) = (spec.interval.a, spec.interval.b);
    let x0 = spec.x0();
    let h = b - x0;
    let half_j = h / (4.0 * spec.sigma);
    let sq = dt.sqrt();
    let two_over_dt = 2.0 / dt;
    let two_over_var = two_over_dt / (spec.sigma * spec.sigma);
    let drift = spec.mu * dt;

    let wrap = |x: f64, next: f64, rng: &mut RngStream| -> f64 {
        if next >= b || bridge_hit(b - x, b - next, two_over_var, rng) {
            next - (b - x0)
        } else if next <= a || bridge_hit(x - a, next - a, two_over_var, rng) {
            next + (x0 - a)
        } else {
            next
        }
    };

    let mut w = 0.0;
    let mut x = x0 + 0.25 * h;
    let mut y = x0 + 0.75 * h;
    for _ in 0..steps {
        let dw = sq * rng.normal();
        let w_next = w + dw;
        if w_next.abs() >= half_j
            || bridge_hit(half_j - w, half_j - w_next, two_over_dt, rng)
            || bridge_hit(w + half_j, w_next + half_j, two_over_dt, rng)
        {
            return None;
        }
        w = w_next;
        let inc = drift + spec.sigma * dw;
        x = wrap(x, x + inc, rng);
        y = wrap(y, y + inc, rng);
    }
    let in_a = |z: f64| z >= x0 && z < x0 + 0.5 * h;
    Some((in_a(x), in_a(y)))
}

/// Fractions of window-confined paths with `X_{t_n} in A` from `x1` and from `x3`.
///
/// Attempts run on streams `0, 1, 2, ...` of `seed`; the first `n_paths`
/// accepted attempts in stream order are used, so the result does not depend
/// on the thread count.
pub fn verify_pathwise_lemma(spec: &ProcessSpec, n: u32, n_paths: usize, dt: f64, seed: u64) -> Result<LemmaCheck> {
    verify_pathwise_lemma_with(spec, n, n_paths, dt, seed, &SolverConfig::default())
}

pub fn verify_pathwise_lemma_with(
    spec: &ProcessSpec,
    n: u32,
    n_paths: usize,
    dt: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<LemmaCheck> {
    if !(spec.mu > 0.0) {
        return Err(Error::RequiresPositiveDrift(spec.mu));
    }
    spec.require_centered_delta()?;
    if n == 0 || n_paths == 0 {
        return Err(Error::InvalidArgument("n and n_paths must be positive".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonpositiveDt(dt));
    }
    let t_n = (spec.interval.b - spec.x0()) * n as f64 / spec.mu;
    let steps = grid_steps(t_n, dt);
    let max_attempts = ((n_paths as f64 / cfg.rejection_floor).ceil() as usize).max(BATCH);

    let mut attempts = 0usize;
    let mut accepted = 0usize;
    let (mut hits_x, mut hits_y) = (0usize, 0usize);
    while accepted < n_paths {
        if attempts >= max_attempts {
            return Err(Error::RejectionBudgetExceeded {
                rate: accepted as f64 / attempts as f64,
                floor: cfg.rejection_floor,
            });
        }
        let batch: Vec<Option<(bool, bool)>> = (attempts..attempts + BATCH)
            .into_par_iter()
            .map(|i| attempt(spec, steps, dt, &mut RngStream::new(seed, i as u64)))
            .collect();
        for r in batch {
            attempts += 1;
            if let Some((hx, hy)) = r {
                accepted += 1;
                hits_x += hx as usize;
                hits_y += hy as usize;
                if accepted == n_paths {
                    break;
                }
            }
        }
    }
    Ok(LemmaCheck {
        fraction_x_in_a: hits_x as f64 / accepted as f64,
        fraction_y_in_a: hits_y as f64 / accepted as f64,
        accepted,
        attempts,
        t_n,
    })
}

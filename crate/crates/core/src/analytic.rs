//! Closed-form quantities for drifted Brownian motion on an interval: the
//! Dirichlet Green's function, the invariant law of the jump-boundary process
//! and its large-drift limit, the killed spectrum, and the explicit rate bounds
//! used by the coupling arguments.

use std::f64::consts::PI;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{Interval, JumpDistribution, ProcessSpec};
use crate::quadrature;

/// Green's function of the killed generator, normalized as an occupation
/// density: `E_x[ time spent in dy before exit ] = g(x, y) dy`, so that
/// `-(sigma^2/2) g'' - mu g' = delta_x` in `y`.
pub fn green_function(spec: &ProcessSpec, x: f64, y: f64) -> Result<f64> {
    green_function_with(spec, x, y, &SolverConfig::default())
}

/// [`green_function`] with an explicit drift-switch threshold.
///
/// For `|mu| <= mu_switch_factor * sigma^2 / L` the drift-free tent
/// `2 (min - a)(b - max) / (sigma^2 L)` is returned; its relative deviation
/// from the drifted value is bounded by `2 |mu| L / sigma^2`.
pub fn green_function_with(spec: &ProcessSpec, x: f64, y: f64, cfg: &SolverConfig) -> Result<f64> {
    let iv = spec.interval;
    iv.check_inside(x)?;
    iv.check_inside(y)?;
    Ok(green_unchecked(iv, spec.sigma, spec.mu, x, y, cfg.mu_switch_factor))
}

pub(crate) fn green_unchecked(iv: Interval, sigma: f64, mu: f64, x: f64, y: f64, switch: f64) -> f64 {
    let len = iv.length();
    let s2 = sigma * sigma;
    if mu.abs() <= switch * s2 / len {
        let lo = x.min(y) - iv.a;
        let hi = iv.b - x.max(y);
        return (2.0 * lo * hi / (s2 * len)).max(0.0);
    }
    if mu < 0.0 {
        return green_unchecked(iv, sigma, -mu, iv.reflect(x), iv.reflect(y), switch);
    }
    // every exponent below is -2 gamma * (nonnegative length)
    let two_gamma = 2.0 * mu / s2;
    let one_minus_exp = |len: f64| -(-two_gamma * len.max(0.0)).exp_m1();
    let denom = one_minus_exp(len);
    let g = if x <= y {
        one_minus_exp(x - iv.a) * one_minus_exp(iv.b - y) / denom
    } else {
        one_minus_exp(y - iv.a) * (-two_gamma * (x - y)).exp() * one_minus_exp(iv.b - x) / denom
    };
    (g / mu).max(0.0)
}

/// `E_x[tau]` as the integral of the Green's function over `y`.
pub fn mean_exit_time(spec: &ProcessSpec, x: f64, cfg: &SolverConfig) -> Result<f64> {
    let iv = spec.interval;
    iv.check_inside(x)?;
    let q = quadrature::integrate(
        |y| {
            if iv.contains(y) {
                green_unchecked(iv, spec.sigma, spec.mu, x, y, cfg.mu_switch_factor)
            } else {
                0.0
            }
        },
        iv.a,
        iv.b,
        &[x],
        cfg.quad_rel_tol,
        cfg.quad_abs_tol,
        cfg.quad_max_panels,
    );
    Ok(q.value)
}

/// Invariant density of the jump-boundary process with its normalizer
/// precomputed.
#[derive(Debug, Clone)]
pub struct InvariantDensity {
    spec: ProcessSpec,
    switch: f64,
    normalizer: f64,
    normalizer_error: f64,
}

impl InvariantDensity {
    pub fn new(spec: &ProcessSpec, cfg: &SolverConfig) -> Self {
        let iv = spec.interval;
        let switch = cfg.mu_switch_factor;
        let breaks: Vec<f64> = spec.nu.atoms().iter().map(|a| a.location).collect();
        let numer = |y: f64| -> f64 {
            if !iv.contains(y) {
                return 0.0;
            }
            spec.nu
                .atoms()
                .iter()
                .map(|at| at.weight * green_unchecked(iv, spec.sigma, spec.mu, at.location, y, switch))
                .sum()
        };
        let q = quadrature::integrate(
            numer,
            iv.a,
            iv.b,
            &breaks,
            cfg.quad_rel_tol,
            cfg.quad_abs_tol,
            cfg.quad_max_panels,
        );
        Self {
            spec: spec.clone(),
            switch,
            normalizer: q.value,
            normalizer_error: q.abs_error,
        }
    }

    /// `sum_i w_i E_{x_i}[tau]`: the mean time between jumps in stationarity.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn normalizer_error(&self) -> f64 {
        self.normalizer_error
    }

    pub fn eval(&self, y: f64) -> Result<f64> {
        let iv = self.spec.interval;
        iv.check_inside(y)?;
        let numer: f64 = self
            .spec
            .nu
            .atoms()
            .iter()
            .map(|at| at.weight * green_unchecked(iv, self.spec.sigma, self.spec.mu, at.location, y, self.switch))
            .sum();
        Ok(numer / self.normalizer)
    }

    /// Probability mass of `[lo, hi]` (clipped to the interval).
    pub fn mass(&self, lo: f64, hi: f64, cfg: &SolverConfig) -> f64 {
        let iv = self.spec.interval;
        let lo = lo.max(iv.a);
        let hi = hi.min(iv.b);
        if hi <= lo {
            return 0.0;
        }
        let breaks: Vec<f64> = self.spec.nu.atoms().iter().map(|a| a.location).collect();
        quadrature::integrate(
            |y| self.eval(y).unwrap_or(0.0),
            lo,
            hi,
            &breaks,
            cfg.quad_rel_tol,
            cfg.quad_abs_tol,
            cfg.quad_max_panels,
        )
        .value
    }
}

/// Density of the invariant law at `y`.
pub fn invariant_density(spec: &ProcessSpec, y: f64) -> Result<f64> {
    spec.interval.check_inside(y)?;
    InvariantDensity::new(spec, &SolverConfig::default()).eval(y)
}

/// Large-drift limit of the invariant density: `nu((a, y]) / int_a^b nu((a, z]) dz`.
pub fn invariant_density_limit(nu: &JumpDistribution, interval: &Interval, y: f64) -> Result<f64> {
    interval.check_inside(y)?;
    let z: f64 = nu.atoms().iter().map(|at| at.weight * (interval.b - at.location)).sum();
    Ok(nu.cdf(y) / z)
}

/// Bottom of the Dirichlet spectrum of `-L` on the interval (or on `interval_override`).
pub fn dirichlet_bottom(spec: &ProcessSpec, interval_override: Option<Interval>) -> f64 {
    let len = interval_override.unwrap_or(spec.interval).length();
    dirichlet_eigenvalue(spec.sigma, spec.mu, len, 1)
}

/// `k`-th Dirichlet eigenvalue (`k >= 1`) of the killed drifted generator on an interval of length `len`.
pub fn dirichlet_eigenvalue(sigma: f64, mu: f64, len: f64, k: usize) -> f64 {
    let k = k as f64;
    sigma * sigma * k * k * PI * PI / (2.0 * len * len) + mu * mu / (2.0 * sigma * sigma)
}

/// Eigenvalues and start-point weights of the killed process, so that
/// `P_x(tau > t) = sum_k weights[k] * exp(-eigenvalues[k] t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpectrum {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Eigenexpansion of `P_x(tau > t)` truncated to `n_terms`.
///
/// Eigenfunctions are `exp(-gamma s) sin(k pi s / L)` with `s = x - a` and
/// `gamma = mu / sigma^2`, orthonormal (after scaling) in `L^2(exp(2 gamma s) ds)`.
pub fn dirichlet_spectrum(spec: &ProcessSpec, x: f64, n_terms: usize) -> Result<DirichletSpectrum> {
    let iv = spec.interval;
    iv.check_inside(x)?;
    let len = iv.length();
    let gamma = spec.mu / (spec.sigma * spec.sigma);
    let s = x - iv.a;
    let mut eigenvalues = Vec::with_capacity(n_terms);
    let mut weights = Vec::with_capacity(n_terms);
    for k in 1..=n_terms {
        let omega = k as f64 * PI / len;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        // e^{-gamma s} (2/L) int_0^L e^{gamma u} sin(omega u) du, kept as two
        // exponentials so that neither overflows on its own
        let amp = 2.0 / len * omega / (gamma * gamma + omega * omega) * (omega * s).sin();
        let w = amp * ((-gamma * s).exp() - sign * (gamma * (len - s)).exp());
        eigenvalues.push(dirichlet_eigenvalue(spec.sigma, spec.mu, len, k));
        weights.push(w);
    }
    Ok(DirichletSpectrum { eigenvalues, weights })
}

/// Killed survival probability with its truncation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalEval {
    pub value: f64,
    /// Upper bound on the absolute contribution of the omitted terms.
    pub tail_bound: f64,
    /// Set when `tail_bound` exceeds the configured warning level.
    pub truncation_warning: bool,
}

/// `P_x(tau_(a,b) > t)` for the drifted Brownian motion killed on exit.
pub fn killed_survival(spec: &ProcessSpec, x: f64, t: f64, n_terms: usize) -> Result<SurvivalEval> {
    killed_survival_with(spec, x, t, n_terms, &SolverConfig::default())
}

pub fn killed_survival_with(
    spec: &ProcessSpec,
    x: f64,
    t: f64,
    n_terms: usize,
    cfg: &SolverConfig,
) -> Result<SurvivalEval> {
    let iv = spec.interval;
    iv.check_inside(x)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    if t == 0.0 {
        return Ok(SurvivalEval {
            value: 1.0,
            tail_bound: 0.0,
            truncation_warning: false,
        });
    }
    let len = iv.length();
    let s2 = spec.sigma * spec.sigma;
    let gamma = spec.mu / s2;
    let s = x - iv.a;
    let lambda_shift = spec.mu * spec.mu / (2.0 * s2);
    let alpha = s2 * PI * PI * t / (2.0 * len * len);

    let mut value = 0.0;
    for k in 1..=n_terms {
        let kf = k as f64;
        let omega = kf * PI / len;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let amp = 2.0 / len * omega / (gamma * gamma + omega * omega) * (omega * s).sin();
        let decay = -alpha * kf * kf - lambda_shift * t;
        let e1 = (decay - gamma * s).exp();
        let e2 = (decay + gamma * (len - s)).exp();
        value += amp * (e1 - sign * e2);
    }

    let n1 = (n_terms + 1) as f64;
    let log_c = (-gamma * s).max(gamma * (len - s)) + std::f64::consts::LN_2;
    let geometric = 1.0 - (-alpha * (2.0 * n1 + 1.0)).exp();
    let tail_bound = 2.0 / (n1 * PI) * (log_c - lambda_shift * t - alpha * n1 * n1).exp() / geometric;
    Ok(SurvivalEval {
        value: value.clamp(0.0, 1.0),
        tail_bound,
        truncation_warning: !(tail_bound <= cfg.survival_tail_warn),
    })
}

/// Upper bound on the total-variation distance between the laws started from
/// `x` and `x + L/2`, via the exit time from `(a, x0)` of the drifted motion.
pub fn fast_coupling_bound(spec: &ProcessSpec, t: f64) -> Result<f64> {
    if !(spec.mu > 0.0) {
        return Err(Error::RequiresPositiveDrift(spec.mu));
    }
    spec.require_centered_delta()?;
    let s2 = spec.sigma * spec.sigma;
    let half = 0.5 * spec.length();
    let big_lambda = spec.mu * spec.mu / (2.0 * s2);
    Ok((half * spec.mu / s2 - big_lambda * t).exp())
}

/// Plateau value `8 sigma^2 pi^2 / L^2` of the spectral gap for large drift.
pub fn theoretical_gap(spec: &ProcessSpec) -> Result<f64> {
    spec.require_centered_delta()?;
    Ok(plateau_gap(spec.sigma, spec.length()))
}

pub(crate) fn plateau_gap(sigma: f64, len: f64) -> f64 {
    8.0 * sigma * sigma * PI * PI / (len * len)
}

/// Drift above which the gap is conjectured to sit on its plateau:
/// `sqrt(3) * 2 sigma^2 pi / L`.
pub fn conjectured_threshold(spec: &ProcessSpec) -> Result<f64> {
    spec.require_centered_delta()?;
    Ok(3f64.sqrt() * 2.0 * spec.sigma * spec.sigma * PI / spec.length())
}

/// Largest rate certified by the staged coupling's tail bound:
/// `min(2 sigma^2 pi^2 / L^2 + mu^2 / (2 sigma^2), 8 sigma^2 pi^2 / L^2)`.
pub fn coupling_tail_bound_rate(spec: &ProcessSpec) -> Result<f64> {
    spec.require_centered_delta()?;
    let s2 = spec.sigma * spec.sigma;
    let len = spec.length();
    let first = 2.0 * s2 * PI * PI / (len * len) + spec.mu * spec.mu / (2.0 * s2);
    Ok(first.min(plateau_gap(spec.sigma, len)))
}

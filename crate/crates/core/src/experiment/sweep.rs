//! Drift sweeps of the spectral gap and the quantities it is compared with.

use serde::{Deserialize, Serialize};

use crate::analytic::{
    conjectured_threshold, dirichlet_bottom, invariant_density_limit, theoretical_gap, InvariantDensity,
};
use crate::config::SolverConfig;
use crate::eigensolver::{gap_at, gap_curve_with};
use crate::error::{Error, Result};
use crate::model::ProcessSpec;

/// One drift value of a gap sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub gap_numeric: f64,
    pub gap_is_real: bool,
    pub dirichlet_bottom: f64,
    /// `8 sigma^2 pi^2 / L^2`; absent unless `nu` is the midpoint atom.
    pub theoretical_gap: Option<f64>,
    pub conjectured_threshold: Option<f64>,
    pub coupling_rate: Option<f64>,
    pub tv_rate: Option<f64>,
}

/// Eigensolver gap and closed-form comparators along `mu_grid`.
pub fn gap_sweep(spec_base: &ProcessSpec, mu_grid: &[f64], cfg: &SolverConfig) -> Result<Vec<SweepRow>> {
    let curve = gap_curve_with(spec_base, mu_grid, cfg)?;
    let theory = theoretical_gap(spec_base).ok();
    let threshold = conjectured_threshold(spec_base).ok();
    Ok(curve
        .into_iter()
        .map(|p| SweepRow {
            mu: p.mu,
            gap_numeric: p.gap,
            gap_is_real: p.gap_is_real,
            dirichlet_bottom: dirichlet_bottom(&spec_base.with_mu(p.mu), None),
            theoretical_gap: theory,
            conjectured_threshold: threshold,
            coupling_rate: None,
            tv_rate: None,
        })
        .collect())
}

/// Smallest drift found on the plateau, with the width of the final bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub mu: f64,
    pub bracket_width: f64,
}

/// Bisects on `[0, 4 mu_c]` for the smallest drift with
/// `|gap - 8 sigma^2 pi^2 / L^2| < tol * 8 sigma^2 pi^2 / L^2`.
pub fn threshold_locate(spec_base: &ProcessSpec, tol: f64) -> Result<ThresholdEstimate> {
    threshold_locate_with(spec_base, tol, &SolverConfig::default())
}

pub fn threshold_locate_with(spec_base: &ProcessSpec, tol: f64, cfg: &SolverConfig) -> Result<ThresholdEstimate> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    let target = theoretical_gap(spec_base)?;
    let mu_c = conjectured_threshold(spec_base)?;
    let on = |mu: f64| -> Result<bool> {
        let g = gap_at(spec_base, mu, cfg).map_err(|e| Error::AtDrift {
            mu,
            source: Box::new(e),
        })?;
        Ok((g.gap - target).abs() < tol * target)
    };
    let (mut lo, mut hi) = (0.0, 4.0 * mu_c);
    if !on(hi)? {
        return Err(Error::NoPlateauFound { mu_hi: hi });
    }
    if on(lo)? {
        return Ok(ThresholdEstimate {
            mu: 0.0,
            bracket_width: 0.0,
        });
    }
    while hi - lo > 1e-5 * mu_c {
        let mid = 0.5 * (lo + hi);
        if on(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ThresholdEstimate {
        mu: hi,
        bracket_width: hi - lo,
    })
}

/// Gap against the Dirichlet bottom `lambda_0` at one drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corollary3Row {
    pub mu: f64,
    pub gap: f64,
    pub lambda0: f64,
    pub gap_below_lambda0: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corollary3Report {
    pub rows: Vec<Corollary3Row>,
    /// Smallest grid drift with `gap < lambda_0`.
    pub first_below: Option<f64>,
}

pub fn report_corollary3(spec_base: &ProcessSpec, mu_grid: &[f64], cfg: &SolverConfig) -> Result<Corollary3Report> {
    let curve = gap_curve_with(spec_base, mu_grid, cfg)?;
    Ok(corollary3_from(spec_base, curve.iter().map(|p| (p.mu, p.gap))))
}

pub(crate) fn corollary3_from(spec_base: &ProcessSpec, gaps: impl Iterator<Item = (f64, f64)>) -> Corollary3Report {
    let rows: Vec<Corollary3Row> = gaps
        .map(|(mu, gap)| {
            let lambda0 = dirichlet_bottom(&spec_base.with_mu(mu), None);
            Corollary3Row {
                mu,
                gap,
                lambda0,
                gap_below_lambda0: gap < lambda0,
            }
        })
        .collect();
    let first_below = rows
        .iter()
        .filter(|r| r.gap_below_lambda0)
        .map(|r| r.mu)
        .fold(None, |m: Option<f64>, mu| Some(m.map_or(mu, |m| m.min(mu))));
    Corollary3Report { rows, first_below }
}

/// Invariant density on a uniform grid against its large-drift limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantProfile {
    pub mu: f64,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
    pub limit: Vec<f64>,
    /// Points within the exclusion band of an atom or an endpoint.
    pub excluded: Vec<bool>,
    /// Largest `|density - limit|` over the points not excluded.
    pub sup_distance: f64,
}

/// Cell midpoints `a + (k + 1/2) L / n`; points within `band * L` of an atom
/// or an endpoint are left out of the sup distance.
pub fn invariant_profile(spec: &ProcessSpec, n: usize, band: f64, cfg: &SolverConfig) -> Result<InvariantProfile> {
    if n == 0 {
        return Err(Error::InvalidArgument("grid must have at least one point".into()));
    }
    let (a, b) = (spec.interval.a, spec.interval.b);
    let len = spec.length();
    let dens = InvariantDensity::new(spec, cfg);
    let y: Vec<f64> = (0..n).map(|k| a + (k as f64 + 0.5) * len / n as f64).collect();
    let density = y.iter().map(|&y| dens.eval(y)).collect::<Result<Vec<_>>>()?;
    let limit = y
        .iter()
        .map(|&y| invariant_density_limit(&spec.nu, &spec.interval, y))
        .collect::<Result<Vec<_>>>()?;
    let w = band * len;
    let excluded: Vec<bool> = y
        .iter()
        .map(|&y| y - a < w || b - y < w || spec.nu.atoms().iter().any(|at| (y - at.location).abs() < w))
        .collect();
    let sup_distance = (0..n)
        .filter(|&k| !excluded[k])
        .map(|k| (density[k] - limit[k]).abs())
        .fold(0.0, f64::max);
    Ok(InvariantProfile {
        mu: spec.mu,
        y,
        density,
        limit,
        excluded,
        sup_distance,
    })
}

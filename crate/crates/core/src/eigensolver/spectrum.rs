//! Eigenvalue search by recursive box subdivision and root polishing.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{dirichlet_bottom, plateau_gap};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{ComplexEigenvalue, ProcessSpec};

use super::contour::{count_with_dilation, try_count, ComplexBox};
use super::determinant::CharDeterminant;

/// Split fractions tried in turn; none is 1/2, so symmetric boxes are never cut
/// along the real axis.
const SPLITS: [f64; 5] = [0.4637, 0.5381, 0.4173, 0.5822, 0.3719];

/// Boxes smaller than this, relative to `1 + |center|`, are treated as holding
/// one multiple root.
const CLUSTER_REL: f64 = 1e-7;

/// A cluster that no split can separate is accepted as one multiple root below
/// this relative size.
const CLUSTER_FALLBACK_REL: f64 = 1e-3;

/// Eigenvalues found inside one search box.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<ComplexEigenvalue>,
    pub search_box: ComplexBox,
    pub gap: f64,
    pub gap_is_real: bool,
}

impl SpectrumReport {
    /// Eigenvalues whose real part equals the gap within `imag_tol`.
    pub fn leading(&self, tol: f64) -> Vec<ComplexEigenvalue> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|e| e.value.norm() > tol && (e.value.re - self.gap).abs() <= tol)
            .collect()
    }
}

/// One point of a gap-versus-drift curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub mu: f64,
    pub gap: f64,
    pub gap_is_real: bool,
}

struct Search<'a> {
    det: &'a CharDeterminant,
    cfg: &'a SolverConfig,
    min_side: f64,
    found: Vec<ComplexEigenvalue>,
}

impl Search<'_> {
    fn descend(&mut self, bx: ComplexBox, n: u32) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        if n == 1 {
            if let Some(root) = self.polish_single(&bx) {
                self.found.push(root);
                return Ok(());
            }
        }
        let side = bx.width().max(bx.height());
        if side < self.min_side.max(CLUSTER_REL * (1.0 + bx.center().norm())) {
            let root = self.polish_multiple(&bx, n);
            self.found.push(root);
            return Ok(());
        }
        for &f in &SPLITS {
            let (lo, hi) = bx.split(f);
            let (Some(n1), Some(n2)) = (try_count(self.det, &lo, self.cfg), try_count(self.det, &hi, self.cfg)) else {
                continue;
            };
            if n1 + n2 != n {
                continue;
            }
            self.descend(lo, n1)?;
            return self.descend(hi, n2);
        }
        if n > 1 && side < CLUSTER_FALLBACK_REL * (1.0 + bx.center().norm()) {
            let root = self.polish_multiple(&bx, n);
            self.found.push(root);
            return Ok(());
        }
        Err(Error::ContourThroughZero {
            dilations: SPLITS.len(),
        })
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        let h = 1e-6 * (1.0 + z.norm());
        (self.det.eval(z + h) - self.det.eval(z - h)) / (2.0 * h)
    }

    fn newton(&self, start: Complex64, multiplicity: f64) -> Option<Complex64> {
        let mut z = start;
        for _ in 0..self.cfg.newton_max_iter {
            let v = self.det.eval(z);
            if v.norm() == 0.0 {
                return Some(z);
            }
            let d = self.derivative(z);
            if !(d.norm() > 0.0) {
                return None;
            }
            let step = multiplicity * v / d;
            if !(step.re.is_finite() && step.im.is_finite()) {
                return None;
            }
            z -= step;
            if step.norm() <= 1e-14 * (1.0 + z.norm()) {
                return Some(z);
            }
        }
        (self.det.eval(z).norm() < self.cfg.polish_tol).then_some(z)
    }

    fn muller(&self, bx: &ComplexBox) -> Option<Complex64> {
        let c = bx.center();
        let w = Complex64::new(0.25 * bx.width(), 0.0);
        let mut x = [c - w, c + Complex64::new(0.0, 0.25 * bx.height()), c];
        let mut f = x.map(|z| self.det.eval(z));
        for _ in 0..self.cfg.muller_max_iter {
            let h1 = x[1] - x[0];
            let h2 = x[2] - x[1];
            let d1 = (f[1] - f[0]) / h1;
            let d2 = (f[2] - f[1]) / h2;
            let a = (d2 - d1) / (h2 + h1);
            let b = a * h2 + d2;
            let disc = (b * b - 4.0 * f[2] * a).sqrt();
            let den = if (b + disc).norm() > (b - disc).norm() {
                b + disc
            } else {
                b - disc
            };
            if den.norm() == 0.0 {
                return None;
            }
            let dx = -2.0 * f[2] / den;
            let next = x[2] + dx;
            if !(next.re.is_finite() && next.im.is_finite()) {
                return None;
            }
            x = [x[1], x[2], next];
            f = [f[1], f[2], self.det.eval(next)];
            if dx.norm() <= 1e-14 * (1.0 + next.norm()) {
                return Some(next);
            }
        }
        (f[2].norm() < self.cfg.polish_tol).then_some(x[2])
    }

    fn accept(&self, bx: &ComplexBox, z: Complex64, multiplicity: u32) -> Option<ComplexEigenvalue> {
        let slack = bx.dilate(1e-6);
        slack.contains(z).then(|| ComplexEigenvalue {
            value: z,
            multiplicity,
            residual: self.det.eval(z).norm(),
        })
    }

    fn polish_single(&self, bx: &ComplexBox) -> Option<ComplexEigenvalue> {
        self.newton(bx.center(), 1.0)
            .and_then(|z| self.accept(bx, z, 1))
            .or_else(|| self.muller(bx).and_then(|z| self.accept(bx, z, 1)))
    }

    fn polish_multiple(&self, bx: &ComplexBox, n: u32) -> ComplexEigenvalue {
        let c = bx.center();
        let z = self
            .newton(c, n as f64)
            .filter(|z| bx.dilate(1.0).contains(*z) && self.det.eval(*z).norm() < self.det.eval(c).norm())
            .unwrap_or(c);
        ComplexEigenvalue {
            value: z,
            multiplicity: n,
            residual: self.det.eval(z).norm(),
        }
    }
}

fn dedup(mut roots: Vec<ComplexEigenvalue>, tol: f64) -> Vec<ComplexEigenvalue> {
    roots.sort_by(|p, q| {
        p.value
            .re
            .total_cmp(&q.value.re)
            .then(p.value.im.total_cmp(&q.value.im))
    });
    let mut out: Vec<ComplexEigenvalue> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(prev) = out.iter_mut().find(|p| (p.value - r.value).norm() <= tol) {
            prev.multiplicity += r.multiplicity;
            if r.residual < prev.residual {
                prev.value = r.value;
                prev.residual = r.residual;
            }
        } else {
            out.push(r);
        }
    }
    out
}

/// Zeros of the characteristic determinant in `[-m, re_max] x [-im_max, im_max]`
/// with `m = cfg.left_margin_fraction * re_max`.
pub fn find_spectrum(spec: &ProcessSpec, re_max: f64, im_max: f64) -> Result<SpectrumReport> {
    find_spectrum_with(spec, re_max, im_max, &SolverConfig::default())
}

pub fn find_spectrum_with(spec: &ProcessSpec, re_max: f64, im_max: f64, cfg: &SolverConfig) -> Result<SpectrumReport> {
    if !(re_max > 0.0 && re_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("re_max must be positive, got {re_max}")));
    }
    if !(im_max > 0.0 && im_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("im_max must be positive, got {im_max}")));
    }
    let det = CharDeterminant::new(spec);
    let requested = ComplexBox::new(-cfg.left_margin_fraction * re_max, re_max, -im_max, im_max)?;
    let (n, search_box) = count_with_dilation(&det, &requested, cfg)?;
    let mut search = Search {
        det: &det,
        cfg,
        min_side: cfg.min_box_fraction * search_box.width().max(search_box.height()),
        found: Vec::new(),
    };
    search.descend(search_box, n)?;
    let eigenvalues = dedup(search.found, cfg.dedup_tol);

    let zero_tol = cfg.dedup_tol * (1.0 + re_max);
    let gap = eigenvalues
        .iter()
        .filter(|e| e.value.norm() > zero_tol)
        .map(|e| e.value.re)
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::BoxTooSmall { re_max });
    }
    let imag_tol = cfg.imag_tol_factor * (1.0 + gap);
    let gap_is_real = eigenvalues
        .iter()
        .any(|e| e.value.norm() > zero_tol && (e.value.re - gap).abs() <= imag_tol && e.value.im.abs() < imag_tol);
    Ok(SpectrumReport {
        eigenvalues,
        search_box,
        gap,
        gap_is_real,
    })
}

/// Search extent used by [`gap_curve`]: `re_max = 2 max(lambda_0, 8 sigma^2 pi^2 / L^2)`.
pub fn auto_re_max(spec: &ProcessSpec) -> f64 {
    2.0 * dirichlet_bottom(spec, None).max(plateau_gap(spec.sigma, spec.length()))
}

/// Spectral gap along `mu_grid`, evaluated in parallel and returned in grid order.
pub fn gap_curve(spec_base: &ProcessSpec, mu_grid: &[f64]) -> Result<Vec<GapPoint>> {
    gap_curve_with(spec_base, mu_grid, &SolverConfig::default())
}

pub fn gap_curve_with(spec_base: &ProcessSpec, mu_grid: &[f64], cfg: &SolverConfig) -> Result<Vec<GapPoint>> {
    if mu_grid.is_empty() {
        return Err(Error::InvalidArgument("mu grid is empty".into()));
    }
    mu_grid
        .par_iter()
        .map(|&mu| {
            gap_at(spec_base, mu, cfg).map_err(|e| Error::AtDrift {
                mu,
                source: Box::new(e),
            })
        })
        .collect()
}

pub(crate) fn gap_at(spec_base: &ProcessSpec, mu: f64, cfg: &SolverConfig) -> Result<GapPoint> {
    if !mu.is_finite() {
        return Err(Error::InvalidDrift(mu));
    }
    let spec = spec_base.with_mu(mu);
    let re_max = auto_re_max(&spec);
    let r = find_spectrum_with(&spec, re_max, cfg.im_aspect * re_max, cfg)?;
    Ok(GapPoint {
        mu,
        gap: r.gap,
        gap_is_real: r.gap_is_real,
    })
}

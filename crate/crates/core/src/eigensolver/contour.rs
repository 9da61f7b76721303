//! Zero counting by the argument principle on axis-aligned rectangles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::ProcessSpec;

use super::determinant::CharDeterminant;

/// Closed rectangle `[re_lo, re_hi] x [im_lo, im_hi]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexBox {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl ComplexBox {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self> {
        let ok = re_lo.is_finite()
            && re_hi.is_finite()
            && im_lo.is_finite()
            && im_hi.is_finite()
            && re_lo < re_hi
            && im_lo < im_hi;
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "degenerate box [{re_lo}, {re_hi}] x [{im_lo}, {im_hi}]"
            )));
        }
        Ok(Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        })
    }

    pub fn width(&self) -> f64 {
        self.re_hi - self.re_lo
    }

    pub fn height(&self) -> f64 {
        self.im_hi - self.im_lo
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    /// Box grown about its center so each side is `1 + rel` times longer.
    pub fn dilate(&self, rel: f64) -> Self {
        let dw = 0.5 * rel * self.width();
        let dh = 0.5 * rel * self.height();
        Self {
            re_lo: self.re_lo - dw,
            re_hi: self.re_hi + dw,
            im_lo: self.im_lo - dh,
            im_hi: self.im_hi + dh,
        }
    }

    /// Splits the longer side at fraction `f` of its length.
    pub fn split(&self, f: f64) -> (Self, Self) {
        if self.width() >= self.height() {
            let cut = self.re_lo + f * self.width();
            (Self { re_hi: cut, ..*self }, Self { re_lo: cut, ..*self })
        } else {
            let cut = self.im_lo + f * self.height();
            (Self { im_hi: cut, ..*self }, Self { im_lo: cut, ..*self })
        }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }
}

/// Phase change from `u` to `v`, in `(-pi, pi]`.
#[inline]
fn phase_step(u: Complex64, v: Complex64) -> f64 {
    (v * u.conj()).arg()
}

struct Walker<'a> {
    det: &'a CharDeterminant,
    max_step: f64,
    max_depth: u32,
}

impl Walker<'_> {
    fn value(&self, z: Complex64) -> Option<Complex64> {
        let v = self.det.eval(z);
        if v.re.is_finite() && v.im.is_finite() && v.norm() > 0.0 {
            Some(v)
        } else {
            None
        }
    }

    /// Accumulated phase along the segment `z0 -> z1`.
    fn segment(&self, z0: Complex64, v0: Complex64, z1: Complex64, v1: Complex64, depth: u32) -> Option<f64> {
        let whole = phase_step(v0, v1);
        let zm = 0.5 * (z0 + z1);
        let vm = self.value(zm)?;
        let left = phase_step(v0, vm);
        let right = phase_step(vm, v1);
        let consistent = (left + right - whole).abs() < 1e-9;
        if consistent && whole.abs() <= self.max_step && left.abs() <= self.max_step && right.abs() <= self.max_step {
            return Some(whole);
        }
        if depth >= self.max_depth {
            return None;
        }
        Some(self.segment(z0, v0, zm, vm, depth + 1)? + self.segment(zm, vm, z1, v1, depth + 1)?)
    }

    fn edge(&self, from: Complex64, to: Complex64, samples: usize) -> Option<f64> {
        let n = samples.max(1);
        let mut total = 0.0;
        let mut z_prev = from;
        let mut v_prev = self.value(from)?;
        for k in 1..=n {
            let z = if k == n {
                to
            } else {
                from + (to - from) * (k as f64 / n as f64)
            };
            let v = self.value(z)?;
            total += self.segment(z_prev, v_prev, z, v, 0)?;
            z_prev = z;
            v_prev = v;
        }
        Some(total)
    }
}

/// Winding number of `D` around `bx`, or `None` if the contour passes through
/// (or numerically too close to) a zero.
pub(crate) fn try_count(det: &CharDeterminant, bx: &ComplexBox, cfg: &SolverConfig) -> Option<u32> {
    let walker = Walker {
        det,
        max_step: cfg.contour_max_phase_step,
        max_depth: cfg.contour_max_depth,
    };
    let c = bx.corners();
    let mut total = 0.0;
    for i in 0..4 {
        total += walker.edge(c[i], c[(i + 1) % 4], cfg.contour_samples)?;
    }
    let turns = total / std::f64::consts::TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() > cfg.winding_tol || rounded < 0.0 {
        return None;
    }
    Some(rounded as u32)
}

/// Number of zeros of the characteristic determinant inside `bx`, counted with
/// multiplicity.
pub fn count_zeros(spec: &ProcessSpec, bx: &ComplexBox) -> Result<u32> {
    count_zeros_with(spec, bx, &SolverConfig::default())
}

pub fn count_zeros_with(spec: &ProcessSpec, bx: &ComplexBox, cfg: &SolverConfig) -> Result<u32> {
    let det = CharDeterminant::new(spec);
    count_with_dilation(&det, bx, cfg).map(|(n, _)| n)
}

/// Counts zeros, dilating the box in equal steps up to `cfg.max_dilation` when
/// the contour meets a zero. Returns the count and the box actually used.
pub(crate) fn count_with_dilation(
    det: &CharDeterminant,
    bx: &ComplexBox,
    cfg: &SolverConfig,
) -> Result<(u32, ComplexBox)> {
    if let Some(n) = try_count(det, bx, cfg) {
        return Ok((n, *bx));
    }
    let steps = cfg.max_dilations.max(1);
    for k in 1..=steps {
        let grown = bx.dilate(cfg.max_dilation * k as f64 / steps as f64);
        if let Some(n) = try_count(det, &grown, cfg) {
            return Ok((n, grown));
        }
    }
    Err(Error::ContourThroughZero { dilations: steps })
}

//! Characteristic determinant of the jump-boundary eigenproblem
//!
//! `(sigma^2/2) f'' + mu f' + lambda f = 0` on `(a, b)` with
//! `f(a) = f(b)` and `f(a) = sum_i w_i f(x_i)`.
//!
//! With `s = x - a`, `rbar = -mu/sigma^2` and
//! `delta = sqrt(mu^2 - 2 sigma^2 lambda) / sigma^2`, the solutions
//!
//! ```text
//! f1(s) = e^{rbar s} s sinhc(delta s)                      f1(0) = 0, f1'(0) = 1
//! f2(s) = e^{rbar s} (cosh(delta s) - rbar s sinhc(delta s))  f2(0) = 1, f2'(0) = 0
//! ```
//!
//! are even in `delta` and therefore entire in `lambda`. The determinant of the
//! two boundary functionals against `(f1, f2)` equals
//! `det[c(r1), c(r2)] / (r1 - r2)` for the exponential basis `e^{r_i s}`, and
//! reduces to the `{e^{rs}, s e^{rs}}` basis at the double root
//! `lambda = mu^2 / (2 sigma^2)` without any branch switch.

use num_complex::Complex64;

use crate::model::ProcessSpec;

/// `|delta s|` below which `sinhc` and `cosh` are evaluated from their series.
const SERIES_RADIUS: f64 = 0.5;

/// Determinant value with its removed overflow scale: the mathematical
/// determinant is `value * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledDet {
    pub value: Complex64,
    pub log_scale: f64,
}

impl ScaledDet {
    /// The unscaled determinant (may overflow for large `|lambda|`).
    pub fn unscaled(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }
}

/// Evaluator for the characteristic determinant of one spec.
#[derive(Debug, Clone)]
pub struct CharDeterminant {
    spec: ProcessSpec,
    /// `(x_i - a, w_i)` for every atom.
    offsets: Vec<(f64, f64)>,
}

impl CharDeterminant {
    /// Human-readable description of the normalization applied by [`CharDeterminant::eval`].
    pub const SCALING: &'static str = "both solution columns multiplied by exp(-M), \
        M = max(0, (Re r_max) * (b - a)) with r_max the larger-real-part root of \
        (sigma^2/2) r^2 + mu r + lambda = 0; zeros and arguments are unchanged";

    pub fn new(spec: &ProcessSpec) -> Self {
        let a = spec.interval.a;
        let offsets = spec.nu.atoms().iter().map(|at| (at.location - a, at.weight)).collect();
        Self {
            spec: spec.clone(),
            offsets,
        }
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    /// Normalized determinant `D(lambda)`.
    #[inline]
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        self.eval_scaled(lambda).value
    }

    pub fn eval_scaled(&self, lambda: Complex64) -> ScaledDet {
        let s2 = self.spec.sigma * self.spec.sigma;
        let mu = self.spec.mu;
        let len = self.spec.length();
        let rbar = -mu / s2;
        let delta = (Complex64::new(mu * mu, 0.0) - 2.0 * s2 * lambda).sqrt() / s2;
        let m = ((rbar + delta.re.abs()) * len).max(0.0);

        let basis = |s: f64| solution_pair(rbar, delta, s, m);
        let unit = (-m).exp();
        let (f1_len, f2_len) = basis(len);
        let mut f1_nu = Complex64::new(0.0, 0.0);
        let mut f2_nu = Complex64::new(0.0, 0.0);
        for &(s, w) in &self.offsets {
            let (p, q) = basis(s);
            f1_nu += w * p;
            f2_nu += w * q;
        }
        // rows: f(a) - f(b), f(a) - sum w f(x_i); columns: f1, f2
        let m11 = -f1_len;
        let m12 = unit - f2_len;
        let m21 = -f1_nu;
        let m22 = unit - f2_nu;
        ScaledDet {
            value: m11 * m22 - m12 * m21,
            log_scale: 2.0 * m,
        }
    }
}

/// `(f1(s), f2(s)) * exp(-m)`.
fn solution_pair(rbar: f64, delta: Complex64, s: f64, m: f64) -> (Complex64, Complex64) {
    let z = delta * s;
    if z.norm() < SERIES_RADIUS {
        let e = (rbar * s - m).exp();
        let (ch, shc) = cosh_sinhc_series(z);
        (e * s * shc, e * (ch - rbar * s * shc))
    } else {
        let ep = (rbar * s - m + z).exp();
        let em = (rbar * s - m - z).exp();
        let sh_over_delta = (ep - em) * 0.5 / delta;
        let ch = (ep + em) * 0.5;
        (sh_over_delta, ch - rbar * sh_over_delta)
    }
}

/// `(cosh z, sinh(z)/z)` for small `|z|`.
fn cosh_sinhc_series(z: Complex64) -> (Complex64, Complex64) {
    let z2 = z * z;
    let mut ch = Complex64::new(1.0, 0.0);
    let mut shc = Complex64::new(1.0, 0.0);
    let mut term_c = Complex64::new(1.0, 0.0);
    let mut term_s = Complex64::new(1.0, 0.0);
    for k in 1..12 {
        let kf = k as f64;
        term_c = term_c * z2 / ((2.0 * kf - 1.0) * (2.0 * kf));
        term_s = term_s * z2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        ch += term_c;
        shc += term_s;
    }
    (ch, shc)
}

/// Normalized characteristic determinant at `lambda`.
pub fn characteristic_det(spec: &ProcessSpec, lambda: Complex64) -> Complex64 {
    CharDeterminant::new(spec).eval(lambda)
}

//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use jumpdiff::analytic::{green_function, killed_survival};
use jumpdiff::eigensolver::CharDeterminant;
use jumpdiff::rng::RngStream;
use jumpdiff::simulator::{exit_time_samples, SimOptions};
use jumpdiff::ProcessSpec;
use num_complex::Complex64;

/// RK4 for `(sigma^2/2) f'' + mu f' + lambda f = 0`, state `(f, f')`.
pub fn rk4(sigma: f64, mu: f64, lambda: f64, state: (f64, f64), len: f64, steps: usize) -> (f64, f64) {
    if len <= 0.0 {
        return state;
    }
    let k = 2.0 / (sigma * sigma);
    let rhs = |(f, g): (f64, f64)| (g, -k * (mu * g + lambda * f));
    let h = len / steps as f64;
    let (mut f, mut g) = state;
    for _ in 0..steps {
        let k1 = rhs((f, g));
        let k2 = rhs((f + 0.5 * h * k1.0, g + 0.5 * h * k1.1));
        let k3 = rhs((f + 0.5 * h * k2.0, g + 0.5 * h * k2.1));
        let k4 = rhs((f + h * k3.0, g + h * k3.1));
        f += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        g += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (f, g)
}

/// Values at the atoms and at `b` of the solution started from `init` at `a`.
pub fn shoot(a: f64, b: f64, sigma: f64, mu: f64, lambda: f64, atoms: &[(f64, f64)], init: (f64, f64)) -> (f64, f64) {
    let mut pts: Vec<(f64, f64)> = atoms.to_vec();
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let per_unit = 40_000.0 / (b - a);
    let mut x = a;
    let mut state = init;
    let mut at_nu = 0.0;
    for &(loc, w) in &pts {
        state = rk4(
            sigma,
            mu,
            lambda,
            state,
            loc - x,
            ((loc - x) * per_unit).ceil() as usize,
        );
        x = loc;
        at_nu += w * state.0;
    }
    state = rk4(sigma, mu, lambda, state, b - x, ((b - x) * per_unit).ceil() as usize);
    (state.0, at_nu)
}

/// Same boundary determinant as the library: rows `f(a) - f(b)` and
/// `f(a) - sum w f(x_i)`, columns the solutions with `(f, f')(a) = (0, 1)` and `(1, 0)`.
pub fn shooting_det(a: f64, b: f64, sigma: f64, mu: f64, lambda: f64, atoms: &[(f64, f64)]) -> f64 {
    let (u_b, u_nu) = shoot(a, b, sigma, mu, lambda, atoms, (0.0, 1.0));
    let (v_b, v_nu) = shoot(a, b, sigma, mu, lambda, atoms, (1.0, 0.0));
    (-u_b) * (1.0 - v_nu) - (1.0 - v_b) * (-u_nu)
}

/// Composite five-point Gauss-Legendre rule.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683,
        0.538_469_310_105_683,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
        0.236_926_885_056_189,
    ];
    let h = (hi - lo) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let c = lo + (p as f64 + 0.5) * h;
        for k in 0..5 {
            sum += W[k] * f(c + 0.5 * h * X[k]);
        }
    }
    0.5 * h * sum
}

/// Occupation density from the scale function `S` and speed density `m`:
/// `g(x, y) = (S(x ^ y) - S(a)) (S(b) - S(x v y)) / (S(b) - S(a)) * m(y)`.
pub fn green_oracle(a: f64, b: f64, sigma: f64, mu: f64, x: f64, y: f64) -> f64 {
    let k = 2.0 * mu / (sigma * sigma);
    let ds = |z: f64| (-k * (z - a)).exp();
    let scale = |from: f64, to: f64| gauss_legendre(ds, from, to, 400);
    let (lo, hi) = (x.min(y), x.max(y));
    scale(a, lo) * scale(hi, b) / scale(a, b) * 2.0 / (sigma * sigma * ds(y))
}

/// 20 random specs and real `lambda`: same sign and `1e-6` relative agreement.
pub fn determinant_vs_shooting() -> Result<String, String> {
    let mut rng = RngStream::new(2024, 0);
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let a = -1.0 + 2.0 * rng.uniform();
        let len = 0.5 + 1.5 * rng.uniform();
        let b = a + len;
        let sigma = 0.5 + 1.5 * rng.uniform();
        let mu = -8.0 + 16.0 * rng.uniform();
        let n_atoms = 1 + (rng.uniform() * 3.0) as usize;
        let raw: Vec<(f64, f64)> = (0..n_atoms)
            .map(|_| (a + len * (0.05 + 0.9 * rng.uniform()), 0.2 + rng.uniform()))
            .collect();
        let total: f64 = raw.iter().map(|p| p.1).sum();
        let atoms: Vec<(f64, f64)> = raw.iter().map(|&(x, w)| (x, w / total)).collect();
        let lambda = -5.0 + 65.0 * rng.uniform();
        let spec = ProcessSpec::new(a, b, sigma, mu, &atoms).map_err(|e| e.to_string())?;

        let lib = CharDeterminant::new(&spec)
            .eval_scaled(Complex64::new(lambda, 0.0))
            .unscaled();
        let canonical: Vec<(f64, f64)> = spec.nu.atoms().iter().map(|at| (at.location, at.weight)).collect();
        let oracle = shooting_det(a, b, sigma, mu, lambda, &canonical);
        let rel = (lib.re - oracle).abs() / oracle.abs();
        if !(rel < 1e-6 && lib.re.signum() == oracle.signum() && lib.im.abs() <= 1e-9 * lib.re.abs()) {
            return Err(format!(
                "case {case}: {spec:?} lambda {lambda}: {lib} vs {oracle} (rel {rel:e})"
            ));
        }
        worst = worst.max(rel);
    }
    Ok(format!("20 cases, worst relative difference {worst:.2e}"))
}

/// 30 random specs and point pairs at `1e-8` relative.
pub fn green_vs_quadrature() -> Result<String, String> {
    let mut rng = RngStream::new(7, 1);
    let mut worst: f64 = 0.0;
    for _ in 0..30 {
        let a = -1.0 + 2.0 * rng.uniform();
        let len = 0.5 + 1.5 * rng.uniform();
        let b = a + len;
        let sigma = 0.5 + 1.5 * rng.uniform();
        let mu = (0.1 + 7.9 * rng.uniform()) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        let spec = ProcessSpec::new(a, b, sigma, mu, &[(a + 0.5 * len, 1.0)]).map_err(|e| e.to_string())?;
        let x = a + len * (0.02 + 0.96 * rng.uniform());
        let y = a + len * (0.02 + 0.96 * rng.uniform());
        let lib = green_function(&spec, x, y).map_err(|e| e.to_string())?;
        let oracle = green_oracle(a, b, sigma, mu, x, y);
        let rel = (lib - oracle).abs() / oracle;
        if !(rel < 1e-8) {
            return Err(format!("{spec:?} x {x} y {y}: {lib} vs {oracle} (rel {rel:e})"));
        }
        worst = worst.max(rel);
    }
    Ok(format!("30 cases, worst relative difference {worst:.2e}"))
}

/// Eigenexpansion survival against simulated exit times within 3 standard errors.
pub fn survival_vs_monte_carlo() -> Result<String, String> {
    let cases = [
        (ProcessSpec::unit(3.0), 0.3),
        (
            ProcessSpec::new(-1.0, 1.0, 1.5, -2.0, &[(0.0, 1.0)]).map_err(|e| e.to_string())?,
            0.4,
        ),
    ];
    let n = 20_000;
    let mut worst: f64 = 0.0;
    for (k, (spec, x)) in cases.iter().enumerate() {
        let samples =
            exit_time_samples(spec, *x, 1e-4, n, 100 + k as u64, SimOptions::default()).map_err(|e| e.to_string())?;
        for t in [0.02, 0.05, 0.1, 0.2] {
            let exact = killed_survival(spec, *x, t, 200).map_err(|e| e.to_string())?.value;
            let p = samples.iter().filter(|s| s.0 > t).count() as f64 / n as f64;
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            let z = (p - exact).abs() / se;
            if !(z <= 3.0) {
                return Err(format!("{spec:?} t {t}: mc {p} exact {exact} se {se}"));
            }
            worst = worst.max(z);
        }
    }
    Ok(format!("8 points, worst deviation {worst:.2} SE"))
}

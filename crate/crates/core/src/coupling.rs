//! Couplings of two copies of the jump-boundary process: the mirror coupling
//! used for exit-time dominance, and the three-stage coalescing coupling whose
//! coupling-time tail bounds the spectral gap from below.
//!
//! Stage I runs `X` with `+B` and `Y` with `-B` until they meet, `X` hits `a`,
//! or `Y` hits `b`. Stage II keeps the opposite signs, restarting exited copies
//! at `x0`, until `|X - Y|` reaches `0` or `L/2`. Stage III moves both with `+B`
//! at fixed distance `L/2` until the lower copy leaves `(a, x0)`, at which point
//! both sit at `x0`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::killed_survival;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::model::{Interval, ProcessSpec, RateFit};
use crate::rng::{stream_of, RngStream};
use crate::simulator::{bridge_cross_probability, grid_steps, restart, SimOptions, Stepper};

pub use crate::simulator::TailTable;

/// Window policy for coupling-tail fits: start at the first grid point with
/// survival at most this value.
pub const TAIL_START_BELOW: f64 = 0.3;
/// Window policy for coupling-tail fits: end at the last grid point with at
/// least this many surviving pairs.
pub const TAIL_MIN_COUNT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
    III,
}

/// Stopping times of one run of the staged coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub tau_i: f64,
    pub tau_ii: f64,
    pub tau_coup: f64,
    pub coalesced_in_stage: Stage,
    pub start_x: f64,
    pub start_y: f64,
}

/// State after one step of the staged coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    /// Stage in which the step was taken.
    pub stage: Stage,
    /// Driving increment `sigma (B_{t} - B_{t-dt})`.
    pub dw: f64,
    /// Whether either copy restarted during the step.
    pub jumped: bool,
}

#[inline]
fn hit(d1: f64, d2: f64, var: f64, rng: &mut RngStream) -> bool {
    if d1 <= 0.0 || d2 <= 0.0 {
        return true;
    }
    let p = bridge_cross_probability(d1, d2, var);
    p > 1e-17 && rng.uniform() < p
}

/// Whether a copy moving from `x` to `next` left `(a, b)` during the step.
#[inline]
fn exited(x: f64, next: f64, a: f64, b: f64, var: f64, rng: &mut RngStream) -> bool {
    hit(b - x, b - next, var, rng) || hit(x - a, next - a, var, rng)
}

struct Engine<'a> {
    spec: &'a ProcessSpec,
    dt: f64,
    a: f64,
    b: f64,
    x0: f64,
    half: f64,
    drift: f64,
    sd: f64,
    var: f64,
    tol: f64,
}

enum Phase {
    Running(Stage),
    Coupled,
}

struct State {
    x: f64,
    y: f64,
    steps: u64,
    phase: Phase,
    tau_i: Option<f64>,
    tau_ii: Option<f64>,
    tau_coup: Option<f64>,
    stage_done: Stage,
}

impl<'a> Engine<'a> {
    fn new(spec: &'a ProcessSpec, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NonpositiveDt(dt));
        }
        let var = spec.sigma * spec.sigma * dt;
        Ok(Self {
            spec,
            dt,
            a: spec.interval.a,
            b: spec.interval.b,
            x0: spec.x0(),
            half: 0.5 * spec.length(),
            drift: spec.mu * dt,
            sd: var.sqrt(),
            var,
            tol: 0.5 * var.sqrt(),
        })
    }

    fn start(&self, x: f64, y: f64) -> State {
        let mut s = State {
            x,
            y,
            steps: 0,
            phase: Phase::Running(Stage::I),
            tau_i: None,
            tau_ii: None,
            tau_coup: None,
            stage_done: Stage::I,
        };
        if x == y {
            self.coalesce(&mut s, x, Stage::I);
        }
        s
    }

    fn now(&self, s: &State) -> f64 {
        s.steps as f64 * self.dt
    }

    fn coalesce(&self, s: &mut State, at: f64, stage: Stage) {
        let t = self.now(s);
        s.x = at;
        s.y = at;
        s.tau_i.get_or_insert(t);
        s.tau_ii.get_or_insert(t);
        s.tau_coup = Some(t);
        s.stage_done = stage;
        s.phase = Phase::Coupled;
    }

    fn enter_stage_ii(&self, s: &mut State) {
        s.tau_i = Some(self.now(s));
        s.phase = Phase::Running(Stage::II);
        let d = (s.y - s.x).abs();
        if d <= self.tol {
            self.coalesce(s, 0.5 * (s.x + s.y), Stage::II);
        } else if d >= self.half {
            self.enter_stage_iii(s);
        }
    }

    /// Places the pair at distance exactly `L/2` about its midpoint.
    fn enter_stage_iii(&self, s: &mut State) {
        let quarter = 0.5 * self.half;
        let m = (0.5 * (s.x + s.y)).clamp(self.a + quarter, self.b - quarter);
        if s.x < s.y {
            s.x = m - quarter;
            s.y = m + quarter;
        } else {
            s.x = m + quarter;
            s.y = m - quarter;
        }
        s.tau_ii = Some(self.now(s));
        s.phase = Phase::Running(Stage::III);
    }

    /// Advances the pair by one step; returns the trace point of the step.
    fn advance(&self, s: &mut State, rng: &mut RngStream, stepper: &Stepper) -> TracePoint {
        let dw = self.sd * rng.normal();
        s.steps += 1;
        let t = self.now(s);
        let (a, b, var) = (self.a, self.b, self.var);
        let stage = match s.phase {
            Phase::Coupled => {
                let (next, exit) = stepper.advance(s.x, dw / self.sd, rng);
                let z = if exit.is_some() { restart(self.spec, rng) } else { next };
                s.x = z;
                s.y = z;
                return TracePoint {
                    t,
                    x: z,
                    y: z,
                    stage: s.stage_done,
                    dw,
                    jumped: exit.is_some(),
                };
            }
            Phase::Running(st) => st,
        };
        let mut jumped = false;
        match stage {
            Stage::I => {
                let (x, y) = (s.x, s.y);
                let xn = x + self.drift + dw;
                let yn = y + self.drift - dw;
                let mid = 0.5 * (xn + yn);
                let met = yn - xn <= self.tol || hit(y - x, yn - xn, 4.0 * var, rng);
                if met && mid > a && mid < b {
                    self.coalesce(s, mid, Stage::I);
                } else {
                    let xe = exited(x, xn, a, b, var, rng);
                    let ye = exited(y, yn, a, b, var, rng);
                    s.x = if xe { self.x0 } else { xn };
                    s.y = if ye { self.x0 } else { yn };
                    if xe && ye {
                        jumped = true;
                        s.tau_i = Some(t);
                        self.coalesce(s, self.x0, Stage::I);
                    } else if xe || ye {
                        jumped = true;
                        self.enter_stage_ii(s);
                    }
                }
            }
            Stage::II => {
                let (x, y) = (s.x, s.y);
                let mut xn = x + self.drift + dw;
                let mut yn = y + self.drift - dw;
                if exited(x, xn, a, b, var, rng) {
                    xn = self.x0;
                    jumped = true;
                }
                if exited(y, yn, a, b, var, rng) {
                    yn = self.x0;
                    jumped = true;
                }
                let (d, dn) = (y - x, yn - xn);
                let zero = if jumped {
                    dn.abs() <= self.tol
                } else {
                    d.signum() != dn.signum() || dn.abs() <= self.tol || hit(d.abs(), dn.abs(), 4.0 * var, rng)
                };
                s.x = xn;
                s.y = yn;
                if zero {
                    s.tau_ii = Some(t);
                    self.coalesce(s, 0.5 * (xn + yn), Stage::II);
                } else {
                    let far = dn.abs() >= self.half
                        || (!jumped && hit(self.half - d.abs(), self.half - dn.abs(), 4.0 * var, rng));
                    if far {
                        self.enter_stage_iii(s);
                    }
                }
            }
            Stage::III => {
                let (x, y) = (s.x, s.y);
                let lo = x.min(y);
                let lo_next = lo + self.drift + dw;
                s.x = x + self.drift + dw;
                s.y = y + self.drift + dw;
                if exited(lo, lo_next, a, self.x0, var, rng) {
                    jumped = true;
                    self.coalesce(s, self.x0, Stage::III);
                }
            }
        }
        TracePoint {
            t,
            x: s.x,
            y: s.y,
            stage,
            dw,
            jumped,
        }
    }

    fn record(&self, s: &State, x: f64, y: f64) -> CouplingRecord {
        let tau_coup = s.tau_coup.unwrap_or(f64::INFINITY);
        CouplingRecord {
            tau_i: s.tau_i.unwrap_or(tau_coup),
            tau_ii: s.tau_ii.unwrap_or(tau_coup),
            tau_coup,
            coalesced_in_stage: s.stage_done,
            start_x: x,
            start_y: y,
        }
    }
}

fn check_pair(spec: &ProcessSpec, x: f64, y: f64) -> Result<()> {
    spec.require_centered_delta()?;
    if !(spec.mu >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "staged coupling needs mu >= 0 (got {}); reflect the spec first",
            spec.mu
        )));
    }
    spec.interval.check_inside(x)?;
    spec.interval.check_inside(y)?;
    if x > y {
        return Err(Error::InvalidArgument(format!("need x <= y, got x = {x}, y = {y}")));
    }
    Ok(())
}

/// One run of the staged coupling from `(x, y)` with `x <= y`.
pub fn staged_coupling(spec: &ProcessSpec, x: f64, y: f64, dt: f64, rng: &mut RngStream) -> Result<CouplingRecord> {
    staged_coupling_traced(spec, x, y, dt, rng, None)
}

/// [`staged_coupling`] that also appends every step to `trace` when given.
pub fn staged_coupling_traced(
    spec: &ProcessSpec,
    x: f64,
    y: f64,
    dt: f64,
    rng: &mut RngStream,
    mut trace: Option<&mut Vec<TracePoint>>,
) -> Result<CouplingRecord> {
    check_pair(spec, x, y)?;
    let engine = Engine::new(spec, dt)?;
    let stepper = Stepper::new(spec, dt, SimOptions::default())?;
    let budget = SolverConfig::default().stage_budget;
    let mut s = engine.start(x, y);
    while s.tau_coup.is_none() {
        if s.steps >= budget {
            return Err(Error::StageBudgetExceeded(budget));
        }
        let p = engine.advance(&mut s, rng, &stepper);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(p);
        }
    }
    Ok(engine.record(&s, x, y))
}

/// Positions `(X_t, Y_t)` of the coupled pair at `t`; after coalescence the
/// pair moves as a single jump-boundary path.
pub fn coupled_positions_at(
    spec: &ProcessSpec,
    x: f64,
    y: f64,
    t: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    check_pair(spec, x, y)?;
    let engine = Engine::new(spec, dt)?;
    let stepper = Stepper::new(spec, dt, SimOptions::default())?;
    let mut s = engine.start(x, y);
    for _ in 0..grid_steps(t, dt) {
        engine.advance(&mut s, rng, &stepper);
    }
    Ok((s.x, s.y))
}

/// Empirical coupling-time tail with its fitted exponential rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingTail {
    pub table: TailTable,
    pub fit: RateFit,
    /// Stage in which each pair coalesced, as counts `[I, II, III]`.
    pub stage_counts: [usize; 3],
}

/// Survival of `tau_coup` over `t_grid` from `n_paths` independent pairs, and
/// its rate over the window chosen by [`TAIL_START_BELOW`] and [`TAIL_MIN_COUNT`].
pub fn coupling_tail(
    spec: &ProcessSpec,
    x: f64,
    y: f64,
    n_paths: usize,
    dt: f64,
    t_grid: &[f64],
    seed: u64,
) -> Result<CouplingTail> {
    let records = coupling_records(spec, x, y, n_paths, dt, seed)?;
    let taus: Vec<f64> = records.iter().map(|r| r.tau_coup).collect();
    let table = TailTable::from_samples(&taus, t_grid)?;
    let window = table
        .auto_window(TAIL_START_BELOW, TAIL_MIN_COUNT)
        .ok_or(Error::WindowTooSparse {
            t_min: t_grid.first().copied().unwrap_or(f64::NAN),
            t_max: t_grid.last().copied().unwrap_or(f64::NAN),
            n: 0,
        })?;
    let fit = table.fit(window)?;
    let mut stage_counts = [0usize; 3];
    for r in &records {
        stage_counts[r.coalesced_in_stage as usize] += 1;
    }
    Ok(CouplingTail {
        table,
        fit,
        stage_counts,
    })
}

/// `n_paths` coupling records; pair `i` runs on stream `i` of ensemble tag 3.
pub fn coupling_records(
    spec: &ProcessSpec,
    x: f64,
    y: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<CouplingRecord>> {
    check_pair(spec, x, y)?;
    (0..n_paths)
        .into_par_iter()
        .map(|i| staged_coupling(spec, x, y, dt, &mut RngStream::new(seed, stream_of(3, i as u64))))
        .collect()
}

/// One row of the mirror-coupling dominance table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub t: f64,
    /// `P(tau_y > t)`.
    pub survival_y: f64,
    /// `P(tau_{x0} > t)`.
    pub survival_center: f64,
    /// `sqrt(se_y^2 + se_center^2)` from the binomial errors.
    pub se: f64,
}

/// Exit-time survivals of standard Brownian motion from `y` and from the
/// midpoint, under the mirror coupling (center with `+B`, `y` with `-B`,
/// glued once they meet).
pub fn mirror_exit_dominance(
    interval: Interval,
    y: f64,
    t_grid: &[f64],
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<DominanceRow>> {
    interval.check_inside(y)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonpositiveDt(dt));
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be positive".into()));
    }
    let pairs: Vec<(f64, f64)> = (0..n_paths)
        .into_par_iter()
        .map(|i| mirror_pair(interval, y, dt, &mut RngStream::new(seed, stream_of(4, i as u64))))
        .collect();
    let ty: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tc: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let sy = TailTable::from_samples(&ty, t_grid)?;
    let sc = TailTable::from_samples(&tc, t_grid)?;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| DominanceRow {
            t,
            survival_y: sy.survival[i],
            survival_center: sc.survival[i],
            se: (sy.stderr(i).powi(2) + sc.stderr(i).powi(2)).sqrt(),
        })
        .collect())
}

/// `(tau_y, tau_center)` for one mirror-coupled pair.
fn mirror_pair(iv: Interval, y: f64, dt: f64, rng: &mut RngStream) -> (f64, f64) {
    let (a, b) = (iv.a, iv.b);
    let sd = dt.sqrt();
    let mut u = y; // driven by -B
    let mut c = iv.midpoint(); // driven by +B
    let mut tau_u = None;
    let mut tau_c = None;
    let mut met = u == c;
    let mut k: u64 = 0;
    while tau_u.is_none() || tau_c.is_none() {
        k += 1;
        let t = k as f64 * dt;
        let dw = sd * rng.normal();
        if met {
            let next = c + dw;
            if exited(c, next, a, b, dt, rng) {
                return (t, t);
            }
            c = next;
            u = next;
            continue;
        }
        let un = u - dw;
        let cn = c + dw;
        if tau_u.is_none() && tau_c.is_none() {
            let (d, dn) = (u - c, un - cn);
            let cross = d.signum() != dn.signum() || hit(d.abs(), dn.abs(), 4.0 * dt, rng);
            let mid = 0.5 * (un + cn);
            if cross && mid > a && mid < b {
                met = true;
                u = mid;
                c = mid;
                continue;
            }
        }
        if tau_u.is_none() && exited(u, un, a, b, dt, rng) {
            tau_u = Some(t);
        }
        if tau_c.is_none() && exited(c, cn, a, b, dt, rng) {
            tau_c = Some(t);
        }
        u = un;
        c = cn;
    }
    (tau_u.unwrap_or(f64::INFINITY), tau_c.unwrap_or(f64::INFINITY))
}

/// Exit-time law of standard Brownian motion from the center of `(-w, w)`.
#[derive(Debug, Clone, Copy)]
struct CenteredExit {
    w: f64,
}

impl CenteredExit {
    fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let c = PI * PI * t / (8.0 * self.w * self.w);
        let mut sum = 0.0;
        for n in 0..10_000 {
            let k = (2 * n + 1) as f64;
            let term = 4.0 / (k * PI) * (-c * k * k).exp();
            sum += if n % 2 == 0 { term } else { -term };
            if term < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum.clamp(0.0, 1.0)
    }

    fn density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let w = self.w;
        let mut sum = 0.0;
        if t < w * w {
            for k in 0..20 {
                let m = (2 * k + 1) as f64 * w;
                let term = 2.0 * m / (2.0 * PI * t * t * t).sqrt() * (-m * m / (2.0 * t)).exp();
                sum += if k % 2 == 0 { term } else { -term };
            }
        } else {
            let c = PI * PI * t / (8.0 * w * w);
            for n in 0..200 {
                let k = (2 * n + 1) as f64;
                let term = PI / (2.0 * w * w) * k * (-c * k * k).exp();
                sum += if n % 2 == 0 { term } else { -term };
                if term < 1e-18 * sum.abs().max(1e-300) {
                    break;
                }
            }
        }
        sum.max(0.0)
    }
}

/// One row of the convolution-bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionRow {
    pub t: f64,
    /// `int_0^t sup_z P_z(tau > t - s) P(tau_J in ds)` from the exact law of `tau_J`.
    pub lhs: f64,
    /// `P(tau_J > t)`, exact.
    pub rhs: f64,
    pub ratio: f64,
    /// The left side with `tau_J` replaced by simulated samples.
    pub lhs_mc: f64,
    /// Fraction of simulated `tau_J` samples above `t`.
    pub rhs_mc: f64,
}

/// Convolution-bound table with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    pub rows: Vec<ConvolutionRow>,
    pub max_ratio: f64,
    /// `max_ratio < 1` over the grid.
    pub holds: bool,
}

/// Number of start points in the sup over `(a, x0)`.
const SUP_GRID: usize = 101;
/// Points per unit time of the tabulated fast-exit survival.
const SURVIVAL_TABLE: usize = 4000;

/// `u -> sup_z P_z(tau_(a,x0) > u)`, tabulated and interpolated in `log`.
struct FastExitSup {
    du: f64,
    log_values: Vec<f64>,
}

impl FastExitSup {
    fn new(spec: &ProcessSpec, u_max: f64) -> Result<Self> {
        let half = ProcessSpec::new(
            spec.interval.a,
            spec.x0(),
            spec.sigma,
            spec.mu,
            &[(0.5 * (spec.interval.a + spec.x0()), 1.0)],
        )?;
        let len = half.length();
        let n = ((u_max * SURVIVAL_TABLE as f64).ceil() as usize).max(16);
        let du = u_max / n as f64;
        let alpha_unit = spec.sigma * spec.sigma * PI * PI / (2.0 * len * len);
        let log_values = (0..=n)
            .into_par_iter()
            .map(|k| {
                let u = k as f64 * du;
                if u == 0.0 {
                    return Ok(0.0);
                }
                let terms = ((40.0 / (alpha_unit * u)).sqrt().ceil() as usize + 2).clamp(64, 4096);
                let mut best: f64 = 0.0;
                for j in 1..SUP_GRID {
                    let z = half.interval.a + len * j as f64 / SUP_GRID as f64;
                    best = best.max(killed_survival(&half, z, u, terms)?.value);
                }
                Ok(best.max(f64::MIN_POSITIVE).ln())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { du, log_values })
    }

    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        let pos = u / self.du;
        let k = (pos.floor() as usize).min(self.log_values.len() - 2);
        let f = pos - k as f64;
        ((1.0 - f) * self.log_values[k] + f * self.log_values[k + 1]).exp()
    }
}

/// Compares `int_0^t sup_z P_z(tau > t - s) P(tau_J in ds)` with `P(tau_J > t)`,
/// where `tau` is the exit time of `sigma B + mu t` from `(a, x0)` and `tau_J`
/// the exit time of `B` from `(-w, w)`.
///
/// Both sides are computed from the exact law of `tau_J`; the same quantities
/// estimated from `n_paths` simulated `tau_J` samples are reported alongside.
pub fn convolution_bound_check(
    spec: &ProcessSpec,
    j_halfwidth: f64,
    t_grid: &[f64],
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<ConvolutionCheck> {
    if !(spec.mu > 0.0) {
        return Err(Error::RequiresPositiveDrift(spec.mu));
    }
    spec.require_centered_delta()?;
    if !(j_halfwidth > 0.0 && j_halfwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "J half-width must be positive, got {j_halfwidth}"
        )));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("t grid must be nonempty and positive".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::NonpositiveDt(dt));
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let fast = FastExitSup::new(spec, t_max)?;
    let law = CenteredExit { w: j_halfwidth };

    let j_spec = ProcessSpec::new(-j_halfwidth, j_halfwidth, 1.0, 0.0, &[(0.0, 1.0)])?;
    let j_stepper = Stepper::new(&j_spec, dt, SimOptions::default())?;
    let cap = grid_steps(t_max, dt) as u64 + 1;
    let samples: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, stream_of(5, i as u64));
            let mut b = 0.0;
            for k in 1..=cap {
                let (next, exit) = j_stepper.step(b, &mut rng);
                if exit.is_some() {
                    return k as f64 * dt;
                }
                b = next;
            }
            f64::INFINITY
        })
        .collect();

    let cfg = SolverConfig::default();
    let rows: Vec<ConvolutionRow> = t_grid
        .iter()
        .map(|&t| {
            let lhs = crate::quadrature::integrate(
                |s| fast.eval(t - s) * law.density(s),
                0.0,
                t,
                &[],
                1e-8,
                0.0,
                cfg.quad_max_panels,
            )
            .value;
            let rhs = law.survival(t);
            let (lhs_mc, rhs_mc) = if n_paths > 0 {
                let n = n_paths as f64;
                let l = samples
                    .iter()
                    .filter(|&&s| s <= t)
                    .map(|&s| fast.eval(t - s))
                    .sum::<f64>()
                    / n;
                let r = samples.iter().filter(|&&s| s > t).count() as f64 / n;
                (l, r)
            } else {
                (f64::NAN, f64::NAN)
            };
            ConvolutionRow {
                t,
                lhs,
                rhs,
                ratio: lhs / rhs,
                lhs_mc,
                rhs_mc,
            }
        })
        .collect();
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(ConvolutionCheck {
        holds: max_ratio < 1.0,
        rows,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_starts_are_coupled_at_once() {
        let r = staged_coupling(&ProcessSpec::unit(5.0), 0.3, 0.3, 1e-4, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(r.coalesced_in_stage, Stage::I);
        assert_eq!(r.tau_coup, 0.0);
    }

    #[test]
    fn stage_order_and_stage_one_bound() {
        let spec = ProcessSpec::unit(20.0);
        let dt = 1e-4;
        for i in 0..2000 {
            let r = staged_coupling(&spec, 0.2, 0.7, dt, &mut RngStream::new(1, i)).unwrap();
            assert!(r.tau_i <= r.tau_ii && r.tau_ii <= r.tau_coup, "{r:?}");
            assert!(r.tau_i <= 1.0 / 20.0 * (1.0 + 1e-6), "{r:?}");
        }
    }

    #[test]
    fn stage_three_keeps_half_length_apart() {
        let spec = ProcessSpec::unit(20.0);
        let mut seen = 0;
        for i in 0..200 {
            let mut tr = Vec::new();
            let r = staged_coupling_traced(&spec, 0.1, 0.8, 1e-4, &mut RngStream::new(2, i), Some(&mut tr)).unwrap();
            if r.coalesced_in_stage != Stage::III {
                continue;
            }
            for p in tr.iter().filter(|p| p.stage == Stage::III && !p.jumped) {
                assert!(((p.x - p.y).abs() - 0.5).abs() < 1e-12, "{p:?}");
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn stage_two_distance_moves_with_twice_the_noise() {
        let spec = ProcessSpec::unit(20.0);
        let mut seen = 0;
        for i in 0..200 {
            let mut tr = Vec::new();
            staged_coupling_traced(&spec, 0.1, 0.8, 1e-4, &mut RngStream::new(3, i), Some(&mut tr)).unwrap();
            for w in tr.windows(2) {
                let (p, q) = (w[0], w[1]);
                if p.stage == Stage::II && q.stage == Stage::II && !q.jumped {
                    // the step that ends stage II repositions the pair
                    if ((q.x - q.y).abs() - 0.5).abs() < 1e-12 || q.x == q.y {
                        continue;
                    }
                    let change = (q.y - q.x) - (p.y - p.x);
                    assert!((change + 2.0 * q.dw).abs() < 1e-12, "{p:?} {q:?}");
                    seen += 1;
                }
            }
        }
        assert!(seen > 100);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut r = RngStream::new(0, 0);
        assert!(staged_coupling(&ProcessSpec::unit(1.0), 0.7, 0.2, 1e-3, &mut r).is_err());
        let off = ProcessSpec::new(0.0, 1.0, 1.0, 1.0, &[(0.3, 1.0)]).unwrap();
        assert!(matches!(
            staged_coupling(&off, 0.2, 0.7, 1e-3, &mut r),
            Err(Error::RequiresCenteredDelta)
        ));
    }

    #[test]
    fn mirror_same_start_is_identical() {
        let rows = mirror_exit_dominance(Interval::new(0.0, 1.0).unwrap(), 0.5, &[0.05, 0.1], 2000, 1e-4, 0).unwrap();
        for r in rows {
            assert_eq!(r.survival_y, r.survival_center);
        }
    }

    #[test]
    fn mirror_near_boundary_exits_fast() {
        let rows = mirror_exit_dominance(Interval::new(0.0, 1.0).unwrap(), 0.999, &[0.05], 2000, 1e-5, 1).unwrap();
        assert!(rows[0].survival_y < 0.05, "{:?}", rows[0]);
        assert!(rows[0].survival_center > 0.8);
    }

    #[test]
    fn centered_exit_law_is_consistent() {
        let law = CenteredExit { w: 0.125 };
        for &t in &[0.005, 0.02, 0.1] {
            let q = crate::quadrature::integrate(|s| law.density(s), 0.0, t, &[law.w * law.w], 1e-10, 0.0, 1000);
            assert!((1.0 - q.value - law.survival(t)).abs() < 1e-8, "t={t}");
        }
        // both small-time and large-time forms agree at the switch
        let s = law.w * law.w;
        let lo = CenteredExit { w: law.w }.density(s * (1.0 - 1e-12));
        let hi = CenteredExit { w: law.w }.density(s * (1.0 + 1e-12));
        assert!((lo - hi).abs() < 1e-8 * hi);
    }

    #[test]
    fn convolution_ratio_improves_with_drift() {
        let grid = [0.1, 0.2, 0.5, 1.0];
        let at = |mu: f64| convolution_bound_check(&ProcessSpec::unit(mu), 0.125, &grid, 2000, 1e-4, 0).unwrap();
        let hi = at(80.0);
        let mid = at(40.0);
        let lo = at(10.0);
        assert!(hi.holds, "{hi:?}");
        assert!(!mid.holds);
        assert!(hi.max_ratio < mid.max_ratio && mid.max_ratio < lo.max_ratio);
        for r in &hi.rows {
            assert!(r.lhs >= 0.0 && r.rhs > 0.0);
        }
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use jumpdiff::analytic::{conjectured_threshold, dirichlet_bottom};
use jumpdiff::coupling::{coupling_tail, mirror_exit_dominance};
use jumpdiff::eigensolver::gap_curve;
use jumpdiff::experiment::{
    invariant_profile, report_corollary3, run, threshold_locate, ExperimentConfig, ExperimentKind, INVARIANT_BAND,
    INVARIANT_GRID,
};
use jumpdiff::simulator::{ensemble_tv, exit_time_samples, EnsembleConfig, SimOptions, TailTable, TvTarget};
use jumpdiff::{Interval, ProcessSpec, SolverConfig};

mod common;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let el = start.elapsed();
    ensure(el < budget, || format!("took {el:.1?}, budget {budget:?}"))
}

fn s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn eigensolver_plateau() -> Outcome {
    let t0 = Instant::now();
    let target = 8.0 * PI * PI;
    let curve = gap_curve(&ProcessSpec::unit(0.0), &[16.0, 20.0, 30.0, 40.0]).map_err(s)?;
    let mut worst: f64 = 0.0;
    for p in &curve {
        ensure((p.gap - target).abs() < 1e-3 && !p.gap_is_real, || format!("{p:?}"))?;
        worst = worst.max((p.gap - target).abs());
    }
    within(t0, Duration::from_secs(30))?;
    Ok(format!("mu 16/20/30/40 complex, max |gap - 8 pi^2| {worst:.1e}"))
}

fn drift_free_anchor() -> Outcome {
    let t0 = Instant::now();
    let p = gap_curve(&ProcessSpec::unit(0.0), &[0.0]).map_err(s)?[0];
    let err = (p.gap - 2.0 * PI * PI).abs();
    ensure(err < 1e-6 && p.gap_is_real, || format!("{p:?}"))?;
    within(t0, Duration::from_secs(5))?;
    Ok(format!("gap {} real, error {err:.1e}", p.gap))
}

fn threshold_conjecture() -> Outcome {
    let t0 = Instant::now();
    let spec = ProcessSpec::unit(0.0);
    let est = threshold_locate(&spec, 1e-4).map_err(s)?;
    let mu_c = conjectured_threshold(&spec).map_err(s)?;
    let rel = (est.mu - mu_c).abs() / mu_c;
    ensure(rel < 0.05, || format!("located {} vs {mu_c}", est.mu))?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!(
        "located mu* = {:.6} (bracket {:.1e}), relative distance {rel:.2e} to 2 sqrt(3) pi; conjecture-consistent",
        est.mu, est.bracket_width
    ))
}

fn corollary3_inversion() -> Outcome {
    let r = report_corollary3(&ProcessSpec::unit(0.0), &[0.0, 20.0], &SolverConfig::default()).map_err(s)?;
    let (r0, r20) = (r.rows[0], r.rows[1]);
    ensure(r20.lambda0 == dirichlet_bottom(&ProcessSpec::unit(20.0), None), || {
        "lambda0".into()
    })?;
    ensure((r20.lambda0 - (PI * PI / 2.0 + 200.0)).abs() < 1e-9, || {
        format!("{r20:?}")
    })?;
    ensure(r20.gap < r20.lambda0 && r20.gap_below_lambda0, || format!("{r20:?}"))?;
    ensure(r0.gap > r0.lambda0 && !r0.gap_below_lambda0, || format!("{r0:?}"))?;
    Ok(format!(
        "mu 20: {:.4} < {:.4}; mu 0: {:.4} > {:.4}",
        r20.gap, r20.lambda0, r0.gap, r0.lambda0
    ))
}

fn invariant_limit() -> Outcome {
    let t0 = Instant::now();
    let mut d = Vec::new();
    for mu in [5.0, 20.0, 60.0] {
        let p = invariant_profile(
            &ProcessSpec::unit(mu),
            INVARIANT_GRID,
            INVARIANT_BAND,
            &SolverConfig::default(),
        )
        .map_err(s)?;
        d.push(p.sup_distance);
    }
    ensure(d[0] > d[1] && d[1] > d[2] && d[2] < 0.05, || format!("{d:?}"))?;
    within(t0, Duration::from_secs(10))?;
    Ok(format!("sup distances {:.4} > {:.4} > {:.4}", d[0], d[1], d[2]))
}

fn exit_tail_rate() -> Outcome {
    let t0 = Instant::now();
    let spec = ProcessSpec::unit(1.0);
    let target = PI * PI / 2.0 + 0.5;
    let samples = exit_time_samples(&spec, 0.5, 1e-4, 100_000, 11, SimOptions::default()).map_err(s)?;
    let taus: Vec<f64> = samples.iter().map(|p| p.0).collect();
    let grid: Vec<f64> = (1..=300).map(|k| k as f64 / 100.0).collect();
    let table = TailTable::from_samples(&taus, &grid).map_err(s)?;
    let window = table.auto_window(0.3, 100).ok_or("no fit window")?;
    let fit = table.fit(window).map_err(s)?;
    let rel = (fit.rate - target).abs() / target;
    ensure(rel < 0.1, || format!("rate {} vs {target}", fit.rate))?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!(
        "rate {:.4} +- {:.4} on [{}, {}] vs {target:.4} ({:.1}% off)",
        fit.rate,
        fit.stderr,
        window.0,
        window.1,
        100.0 * rel
    ))
}

fn coupling_tail_rates() -> Outcome {
    let grid: Vec<f64> = (1..=100).map(|k| k as f64 / 100.0).collect();
    let plateau = 8.0 * PI * PI;
    let t0 = Instant::now();
    let hi = coupling_tail(&ProcessSpec::unit(20.0), 0.25, 0.75, 100_000, 1e-4, &grid, 21).map_err(s)?;
    within(t0, Duration::from_secs(300))?;
    ensure((0.8 * plateau..=1.2 * plateau).contains(&hi.fit.rate), || {
        format!("mu 20 rate {}", hi.fit.rate)
    })?;
    let t1 = Instant::now();
    let lo = coupling_tail(&ProcessSpec::unit(0.0), 0.25, 0.75, 100_000, 1e-4, &grid, 22).map_err(s)?;
    within(t1, Duration::from_secs(300))?;
    ensure(lo.fit.rate >= 0.8 * 2.0 * PI * PI, || {
        format!("mu 0 rate {}", lo.fit.rate)
    })?;
    Ok(format!(
        "mu 20: {:.3} ({:.3} x 8 pi^2); mu 0: {:.3} ({:.3} x 2 pi^2)",
        hi.fit.rate,
        hi.fit.rate / plateau,
        lo.fit.rate,
        lo.fit.rate / (2.0 * PI * PI)
    ))
}

fn coupling_inequality() -> Outcome {
    let mut notes = Vec::new();
    let grids: [(f64, Vec<f64>); 2] = [
        (0.0, (1..=15).map(|k| k as f64 / 100.0).collect()),
        (20.0, (1..=8).map(|k| k as f64 / 200.0).collect()),
    ];
    for (mu, grid) in grids {
        let spec = ProcessSpec::unit(mu);
        let ens = EnsembleConfig {
            n_paths: 100_000,
            bins: 64,
            dt: 1e-4,
            seed: 31,
        };
        let tv = ensemble_tv(&spec, 0.25, TvTarget::Point(0.75), &grid, &ens).map_err(s)?;
        let tail = coupling_tail(&spec, 0.25, 0.75, 100_000, 1e-4, &grid, 32).map_err(s)?;
        let mut slack = f64::INFINITY;
        for k in 0..grid.len() {
            let bound = tail.table.survival[k] + 3.0 * tail.table.stderr(k);
            ensure(tv.tv[k] <= bound, || {
                format!(
                    "mu {mu} t {}: TV {} > {} + 3 SE",
                    grid[k], tv.tv[k], tail.table.survival[k]
                )
            })?;
            slack = slack.min(bound - tv.tv[k]);
        }
        notes.push(format!("mu {mu}: {} points, min slack {slack:.4}", grid.len()));
    }
    Ok(notes.join("; "))
}

fn pathwise_lemma() -> Outcome {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    for n in [1, 2] {
        let c = jumpdiff::simulator::verify_pathwise_lemma(&ProcessSpec::unit(20.0), n, 10_000, 1e-4, 41 + n as u64)
            .map_err(s)?;
        ensure(c.fraction_x_in_a >= 0.99 && c.fraction_y_in_a <= 0.01, || {
            format!("{c:?}")
        })?;
        notes.push(format!(
            "n {n}: {:.4} / {:.4} over {} paths",
            c.fraction_x_in_a, c.fraction_y_in_a, c.accepted
        ));
    }
    within(t0, Duration::from_secs(180))?;
    Ok(notes.join("; "))
}

fn mirror_dominance() -> Outcome {
    let iv = Interval::new(0.0, 1.0).map_err(s)?;
    let mut worst = f64::NEG_INFINITY;
    for (k, y) in [0.7, 0.9].into_iter().enumerate() {
        let rows = mirror_exit_dominance(iv, y, &[0.05, 0.1, 0.2], 100_000, 1e-4, 51 + k as u64).map_err(s)?;
        for r in rows {
            ensure(r.survival_y <= r.survival_center + 3.0 * r.se, || {
                format!("y {y}: {r:?}")
            })?;
            worst = worst.max(r.survival_y - r.survival_center);
        }
    }
    Ok(format!("6 points, max P(tau_y > t) - P(tau_x0 > t) = {worst:.4}"))
}

fn oracle_suite() -> Outcome {
    let t0 = Instant::now();
    let det = common::determinant_vs_shooting()?;
    let green = common::green_vs_quadrature()?;
    let surv = common::survival_vs_monte_carlo()?;
    within(t0, Duration::from_secs(120))?;
    Ok(format!("determinant: {det}; green: {green}; survival: {surv}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(s)?;
    let mut notes = Vec::new();
    for kind in [
        ExperimentKind::CouplingTail,
        ExperimentKind::TvDecay,
        ExperimentKind::Lemma6Check,
    ] {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.n_paths = 4000;
        cfg.seed = 5;
        cfg.output.dir = dir.path().to_path_buf();
        let mut outputs = Vec::new();
        for threads in [1, 4, 1] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(s)?;
            let out = pool.install(|| run(&cfg)).map_err(s)?;
            let bytes: Vec<Vec<u8>> = out
                .files
                .iter()
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .map(std::fs::read)
                .collect::<Result<_, _>>()
                .map_err(s)?;
            outputs.push(bytes);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || {
            format!("{} differs", kind.name())
        })?;
        notes.push(kind.name());
    }
    Ok(format!("byte-identical CSVs on 1 and 4 threads: {}", notes.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("eigensolver plateau", eigensolver_plateau),
        ("drift-free anchor", drift_free_anchor),
        ("threshold conjecture check", threshold_conjecture),
        ("gap below Dirichlet bottom", corollary3_inversion),
        ("invariant density limit", invariant_limit),
        ("exit-time tail rate", exit_tail_rate),
        ("coupling tail rate", coupling_tail_rates),
        ("coupling inequality", coupling_inequality),
        ("pathwise window lemma", pathwise_lemma),
        ("mirror exit dominance", mirror_dominance),
        ("oracle equivalence", oracle_suite),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let t0 = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|m| m.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let el = t0.elapsed();
        match r {
            Ok(msg) => println!("criterion {:>2} PASS {name} [{el:.1?}]: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} [{el:.1?}]: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}

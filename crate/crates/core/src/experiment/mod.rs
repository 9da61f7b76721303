//! Experiments driven by a JSON configuration, written as CSV tables and SVG
//! plots.

pub mod svg;
mod sweep;
pub mod table;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytic::{conjectured_threshold, theoretical_gap};
use crate::config::SolverConfig;
use crate::coupling::{convolution_bound_check, coupling_tail};
use crate::eigensolver::{auto_re_max, find_spectrum_with};
use crate::error::{Error, Result};
use crate::model::ProcessSpec;
use crate::simulator::{ensemble_tv, verify_pathwise_lemma_with, EnsembleConfig, TvTarget};

use svg::{Plot, Series, Style};
use table::Table;

pub use sweep::{
    gap_sweep, invariant_profile, report_corollary3, threshold_locate, threshold_locate_with, Corollary3Report,
    Corollary3Row, InvariantProfile, SweepRow, ThresholdEstimate,
};

/// Points of the invariant-density grid.
pub const INVARIANT_GRID: usize = 256;
/// Half-width, relative to `L`, of the band around atoms and endpoints left
/// out of the invariant sup distance.
pub const INVARIANT_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GapSweep,
    Spectrum,
    Invariant,
    TvDecay,
    CouplingTail,
    #[value(name = "lemma6-check")]
    #[serde(rename = "lemma6-check")]
    Lemma6Check,
    ConvolutionCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GapSweep => "gap-sweep",
            Self::Spectrum => "spectrum",
            Self::Invariant => "invariant",
            Self::TvDecay => "tv-decay",
            Self::CouplingTail => "coupling-tail",
            Self::Lemma6Check => "lemma6-check",
            Self::ConvolutionCheck => "convolution-check",
        }
    }

    fn default_mu_grid(self) -> Vec<f64> {
        match self {
            Self::GapSweep => (0..=20).map(|k| 2.0 * k as f64).collect(),
            Self::Invariant => vec![5.0, 20.0, 60.0],
            Self::ConvolutionCheck => vec![10.0, 20.0, 40.0, 80.0],
            _ => vec![20.0],
        }
    }

    fn default_t_grid(self) -> Vec<f64> {
        match self {
            Self::TvDecay => (1..=40).map(|k| k as f64 / 200.0).collect(),
            Self::ConvolutionCheck => vec![0.1, 0.2, 0.5, 1.0],
            _ => (1..=100).map(|k| k as f64 / 100.0).collect(),
        }
    }
}

/// Where artifacts go: `<dir>/<stem>.csv` and `<dir>/<stem>.svg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Defaults to the experiment name.
    pub stem: Option<String>,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            stem: None,
            svg: true,
        }
    }
}

/// Experiment description as read from JSON. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "unit_spec")]
    pub spec: ProcessSpec,
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    #[serde(default)]
    pub mu_grid: Option<Vec<f64>>,
    /// Time step; defaults to `1e-4 (L / sigma)^2`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Start of the ensemble or the lower copy; defaults to `a + L/4`.
    #[serde(default)]
    pub start_x: Option<f64>,
    /// Start of the upper copy; defaults to `a + 3L/4`. For tv-decay the
    /// ensemble is compared with the invariant law unless this is set.
    #[serde(default)]
    pub start_y: Option<f64>,
    /// Relative plateau tolerance for gap-sweep.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Also run the bisection for the plateau threshold in gap-sweep.
    #[serde(default)]
    pub locate_threshold: bool,
    /// Fill the coupling and TV rate columns of gap-sweep by simulation.
    #[serde(default)]
    pub monte_carlo: bool,
    #[serde(default)]
    pub fit_window: Option<(f64, f64)>,
    #[serde(default)]
    pub re_max: Option<f64>,
    #[serde(default = "default_lemma_n")]
    pub lemma_n: Vec<u32>,
    /// Half-width of the driving window; defaults to `L / (8 sigma)`.
    #[serde(default)]
    pub j_halfwidth: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

fn unit_spec() -> ProcessSpec {
    ProcessSpec::unit(0.0)
}
fn default_n_paths() -> usize {
    100_000
}
fn default_bins() -> usize {
    64
}
fn default_tol() -> f64 {
    1e-3
}
fn default_lemma_n() -> Vec<u32> {
    vec![1, 2]
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": kind })).expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment
            .ok_or_else(|| Error::Config("no experiment named in the configuration".into()))
    }

    /// Fills every defaulted knob and checks the result.
    pub fn resolved(&self) -> Result<Self> {
        let kind = self.kind()?;
        let mut c = self.clone();
        let a = c.spec.interval.a;
        let len = c.spec.length();
        c.mu_grid.get_or_insert_with(|| kind.default_mu_grid());
        c.t_grid.get_or_insert_with(|| kind.default_t_grid());
        c.start_x.get_or_insert(a + 0.25 * len);
        if kind != ExperimentKind::TvDecay {
            c.start_y.get_or_insert(a + 0.75 * len);
        }
        c.j_halfwidth.get_or_insert(len / (8.0 * c.spec.sigma));
        c.dt.get_or_insert(1e-4 * (len / c.spec.sigma).powi(2));
        c.output.stem.get_or_insert_with(|| kind.name().to_string());
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let increasing = |v: &[f64]| v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1]);
        let mu = self.mu_grid.as_deref().unwrap_or(&[]);
        if mu.is_empty() || !increasing(mu) {
            return bad("mu_grid must be nonempty, finite and strictly increasing".into());
        }
        let t = self.t_grid.as_deref().unwrap_or(&[]);
        if t.is_empty() || !increasing(t) || t[0] <= 0.0 {
            return bad("t_grid must be nonempty, positive and strictly increasing".into());
        }
        let dt = self.dt.unwrap_or(f64::NAN);
        if !(dt > 0.0 && dt.is_finite()) {
            return bad(format!("dt must be positive, got {dt}"));
        }
        if self.n_paths == 0 || self.bins == 0 {
            return bad("n_paths and bins must be positive".into());
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.lemma_n.is_empty() || self.lemma_n.contains(&0) {
            return bad("lemma_n must hold positive integers".into());
        }
        if let Some(w) = self.j_halfwidth {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("j_halfwidth must be positive, got {w}"));
            }
        }
        if let Some(r) = self.re_max {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("re_max must be positive, got {r}"));
            }
        }
        if let Some((lo, hi)) = self.fit_window {
            if !(lo < hi) {
                return bad("fit_window must satisfy lo < hi".into());
            }
        }
        for p in [self.start_x, self.start_y].into_iter().flatten() {
            self.spec.interval.check_inside(p)?;
        }
        if let (Some(x), Some(y)) = (self.start_x, self.start_y) {
            if x > y {
                return bad("start_x must not exceed start_y".into());
            }
        }
        Ok(())
    }

    fn mu_grid(&self) -> &[f64] {
        self.mu_grid.as_deref().expect("resolved")
    }

    fn dt(&self) -> f64 {
        self.dt.expect("resolved")
    }

    fn t_grid(&self) -> &[f64] {
        self.t_grid.as_deref().expect("resolved")
    }

    fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            n_paths: self.n_paths,
            bins: self.bins,
            dt: self.dt(),
            seed: self.seed,
        }
    }
}

/// Files written by [`run`] and the one-line summary.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// A finished experiment before it is written out.
struct Artifacts {
    tables: Vec<(String, Table)>,
    plot: Option<Plot>,
    summary: String,
}

/// Runs the configured experiment and writes its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    let cfg = config.resolved()?;
    let kind = cfg.kind()?;
    let art = match kind {
        ExperimentKind::GapSweep => run_gap_sweep(&cfg)?,
        ExperimentKind::Spectrum => run_spectrum(&cfg)?,
        ExperimentKind::Invariant => run_invariant(&cfg)?,
        ExperimentKind::TvDecay => run_tv_decay(&cfg)?,
        ExperimentKind::CouplingTail => run_coupling_tail(&cfg)?,
        ExperimentKind::Lemma6Check => run_lemma(&cfg)?,
        ExperimentKind::ConvolutionCheck => run_convolution(&cfg)?,
    };
    let comment = serde_json::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let stem = cfg.output.stem.clone().expect("resolved");
    std::fs::create_dir_all(&cfg.output.dir)?;
    let mut files = Vec::new();
    for (suffix, t) in &art.tables {
        let path = cfg.output.dir.join(format!("{stem}{suffix}.csv"));
        t.write(&path, &comment)?;
        files.push(path);
    }
    if let (true, Some(plot)) = (cfg.output.svg, &art.plot) {
        let path = cfg.output.dir.join(format!("{stem}.svg"));
        std::fs::write(&path, plot.render())?;
        files.push(path);
    }
    Ok(RunOutcome {
        summary: format!("{}: {}", kind.name(), art.summary),
        files,
    })
}

fn is_fit_failure(e: &Error) -> bool {
    matches!(e, Error::BelowNoiseFloor { .. } | Error::WindowTooSparse { .. })
}

fn fmt(v: f64) -> String {
    table::format_sig(v)
}

fn run_gap_sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let spec = &cfg.spec;
    let mut rows = gap_sweep(spec, cfg.mu_grid(), &cfg.solver)?;
    let mut fit_failures = 0;
    if cfg.monte_carlo {
        let (x, y) = (cfg.start_x.unwrap(), cfg.start_y.unwrap());
        for r in rows.iter_mut() {
            let s = spec.with_mu(r.mu);
            match coupling_tail(&s, x, y, cfg.n_paths, cfg.dt(), cfg.t_grid(), cfg.seed) {
                Ok(c) => r.coupling_rate = Some(c.fit.rate),
                Err(e) if is_fit_failure(&e) => fit_failures += 1,
                Err(e) => {
                    return Err(Error::AtDrift {
                        mu: r.mu,
                        source: Box::new(e),
                    })
                }
            }
            let tv = ensemble_tv(&s, x, TvTarget::Invariant, cfg.t_grid(), &cfg.ensemble())?;
            let window = cfg.fit_window.unwrap_or((tv.times[0], *tv.times.last().unwrap()));
            match tv.fit(window) {
                Ok(f) => r.tv_rate = Some(f.rate),
                Err(e) if is_fit_failure(&e) => fit_failures += 1,
                Err(e) => return Err(e),
            }
        }
    }

    let mut t = Table::new(&[
        "mu",
        "gap_numeric",
        "gap_is_real",
        "dirichlet_bottom",
        "theoretical_gap",
        "conjectured_threshold",
        "coupling_rate",
        "tv_rate",
    ]);
    for r in &rows {
        t.push(vec![
            r.mu.into(),
            r.gap_numeric.into(),
            r.gap_is_real.into(),
            r.dirichlet_bottom.into(),
            r.theoretical_gap.into(),
            r.conjectured_threshold.into(),
            r.coupling_rate.into(),
            r.tv_rate.into(),
        ]);
    }
    let c3 = sweep::corollary3_from(spec, rows.iter().map(|r| (r.mu, r.gap_numeric)));
    let mut t3 = Table::new(&["mu", "gap", "lambda0", "gap_below_lambda0"]);
    for r in &c3.rows {
        t3.push(vec![
            r.mu.into(),
            r.gap.into(),
            r.lambda0.into(),
            r.gap_below_lambda0.into(),
        ]);
    }

    let mut parts = Vec::new();
    if let (Ok(theory), Ok(mu_c)) = (theoretical_gap(spec), conjectured_threshold(spec)) {
        let on: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| (r.gap_numeric - theory).abs() < cfg.tol * theory)
            .collect();
        match on.first() {
            Some(first) => {
                let plateau: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.mu >= first.mu)
                    .map(|r| r.gap_numeric)
                    .collect();
                let mean = plateau.iter().sum::<f64>() / plateau.len() as f64;
                parts.push(format!(
                    "plateau mean {} over mu >= {} (8 sigma^2 pi^2 / L^2 = {})",
                    fmt(mean),
                    fmt(first.mu),
                    fmt(theory)
                ));
                parts.push(format!(
                    "conjecture check: first grid drift on the plateau {} vs 2 sqrt(3) sigma^2 pi / L = {}",
                    fmt(first.mu),
                    fmt(mu_c)
                ));
            }
            None => parts.push(format!(
                "no grid drift within tol {} of the plateau {}",
                fmt(cfg.tol),
                fmt(theory)
            )),
        }
        if cfg.locate_threshold {
            let est = threshold_locate_with(spec, cfg.tol, &cfg.solver)?;
            parts.push(format!(
                "bisection threshold {} (bracket {}, ratio to conjectured value {})",
                fmt(est.mu),
                fmt(est.bracket_width),
                fmt(est.mu / mu_c)
            ));
        }
    }
    parts.push(match c3.first_below {
        Some(mu) => format!("gap < lambda0 first at mu = {}", fmt(mu)),
        None => "gap < lambda0 nowhere on the grid".into(),
    });
    if fit_failures > 0 {
        parts.push(format!("{fit_failures} rate fits below the noise floor left empty"));
    }

    let mut series = vec![
        Series::new("gap", rows.iter().map(|r| (r.mu, r.gap_numeric)).collect(), Style::Line),
        Series::new(
            "lambda0",
            rows.iter().map(|r| (r.mu, r.dirichlet_bottom)).collect(),
            Style::Dashed,
        ),
    ];
    if let Ok(theory) = theoretical_gap(spec) {
        series.push(Series::new(
            "8 pi^2 sigma^2/L^2",
            rows.iter().map(|r| (r.mu, theory)).collect(),
            Style::Dashed,
        ));
    }
    if cfg.monte_carlo {
        series.push(Series::new(
            "coupling rate",
            rows.iter().filter_map(|r| Some((r.mu, r.coupling_rate?))).collect(),
            Style::Markers,
        ));
        series.push(Series::new(
            "TV rate",
            rows.iter().filter_map(|r| Some((r.mu, r.tv_rate?))).collect(),
            Style::Markers,
        ));
    }
    Ok(Artifacts {
        tables: vec![(String::new(), t), ("-corollary3".into(), t3)],
        plot: Some(Plot {
            title: "spectral gap against drift".into(),
            x_label: "mu".into(),
            y_label: "rate".into(),
            log_y: false,
            series,
        }),
        summary: parts.join("; "),
    })
}

fn run_spectrum(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut t = Table::new(&["mu", "re", "im", "multiplicity", "residual", "is_gap"]);
    let mut parts = Vec::new();
    let mut series = Vec::new();
    for &mu in cfg.mu_grid() {
        let s = cfg.spec.with_mu(mu);
        let re_max = cfg.re_max.unwrap_or_else(|| auto_re_max(&s));
        let r =
            find_spectrum_with(&s, re_max, cfg.solver.im_aspect * re_max, &cfg.solver).map_err(|e| Error::AtDrift {
                mu,
                source: Box::new(e),
            })?;
        let tol = cfg.solver.imag_tol_factor * (1.0 + r.gap);
        let leading = r.leading(tol);
        for e in &r.eigenvalues {
            let is_gap = leading.iter().any(|l| l.value == e.value);
            t.push(vec![
                mu.into(),
                e.value.re.into(),
                e.value.im.into(),
                e.multiplicity.into(),
                e.residual.into(),
                is_gap.into(),
            ]);
        }
        let im = leading.iter().map(|e| e.value.im.abs()).fold(0.0, f64::max);
        parts.push(format!(
            "mu {}: {} eigenvalues, gap {} ({}), leading |im| {}",
            fmt(mu),
            r.eigenvalues.len(),
            fmt(r.gap),
            if r.gap_is_real { "real" } else { "complex pair" },
            fmt(im)
        ));
        series.push(Series::new(
            format!("mu = {}", fmt(mu)),
            r.eigenvalues.iter().map(|e| (e.value.re, e.value.im)).collect(),
            Style::Markers,
        ));
    }
    Ok(Artifacts {
        tables: vec![(String::new(), t)],
        plot: Some(Plot {
            title: "eigenvalues of -L".into(),
            x_label: "Re lambda".into(),
            y_label: "Im lambda".into(),
            log_y: false,
            series,
        }),
        summary: parts.join("; "),
    })
}

fn run_invariant(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut t = Table::new(&["mu", "y", "density", "limit", "abs_diff", "excluded"]);
    let mut sup = Table::new(&["mu", "sup_distance"]);
    let mut series = Vec::new();
    let mut dists = Vec::new();
    let mut limit_points = Vec::new();
    for &mu in cfg.mu_grid() {
        let p = invariant_profile(&cfg.spec.with_mu(mu), INVARIANT_GRID, INVARIANT_BAND, &cfg.solver)?;
        for k in 0..p.y.len() {
            t.push(vec![
                mu.into(),
                p.y[k].into(),
                p.density[k].into(),
                p.limit[k].into(),
                (p.density[k] - p.limit[k]).abs().into(),
                p.excluded[k].into(),
            ]);
        }
        sup.push(vec![mu.into(), p.sup_distance.into()]);
        dists.push((mu, p.sup_distance));
        series.push(Series::new(
            format!("mu = {}", fmt(mu)),
            p.y.iter().copied().zip(p.density.iter().copied()).collect(),
            Style::Line,
        ));
        limit_points = p.y.iter().copied().zip(p.limit.iter().copied()).collect();
    }
    series.push(Series::new("limit", limit_points, Style::Dashed));
    let decreasing = dists.windows(2).all(|w| w[1].1 < w[0].1);
    let list: Vec<String> = dists
        .iter()
        .map(|(mu, d)| format!("{} at mu {}", fmt(*d), fmt(*mu)))
        .collect();
    Ok(Artifacts {
        tables: vec![(String::new(), t), ("-sup".into(), sup)],
        plot: Some(Plot {
            title: "invariant density".into(),
            x_label: "y".into(),
            y_label: "density".into(),
            log_y: false,
            series,
        }),
        summary: format!(
            "sup distance to the large-drift limit {}; decreasing in mu: {decreasing}",
            list.join(", ")
        ),
    })
}

fn run_tv_decay(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let x = cfg.start_x.unwrap();
    let target = cfg.start_y.map_or(TvTarget::Invariant, TvTarget::Point);
    let mut t = Table::new(&["mu", "t", "tv", "noise_floor"]);
    let mut parts = Vec::new();
    let mut series = Vec::new();
    for &mu in cfg.mu_grid() {
        let s = cfg.spec.with_mu(mu);
        let curve = ensemble_tv(&s, x, target, cfg.t_grid(), &cfg.ensemble())?;
        for k in 0..curve.times.len() {
            t.push(vec![
                mu.into(),
                curve.times[k].into(),
                curve.tv[k].into(),
                curve.noise_floor[k].into(),
            ]);
        }
        let window = cfg.fit_window.unwrap_or((curve.times[0], *curve.times.last().unwrap()));
        let gap = crate::eigensolver::gap_at(&cfg.spec, mu, &cfg.solver)?.gap;
        parts.push(match curve.fit(window) {
            Ok(f) => format!(
                "mu {}: rate {} +- {} vs gap {}",
                fmt(mu),
                fmt(f.rate),
                fmt(f.stderr),
                fmt(gap)
            ),
            Err(e) if is_fit_failure(&e) => format!("mu {}: no rate ({e}) vs gap {}", fmt(mu), fmt(gap)),
            Err(e) => return Err(e),
        });
        series.push(Series::new(
            format!("mu = {}", fmt(mu)),
            curve.times.iter().copied().zip(curve.tv.iter().copied()).collect(),
            Style::Line,
        ));
    }
    Ok(Artifacts {
        tables: vec![(String::new(), t)],
        plot: Some(Plot {
            title: "total variation to target".into(),
            x_label: "t".into(),
            y_label: "TV".into(),
            log_y: true,
            series,
        }),
        summary: parts.join("; "),
    })
}

fn run_coupling_tail(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let (x, y) = (cfg.start_x.unwrap(), cfg.start_y.unwrap());
    let mut t = Table::new(&["mu", "t", "survival", "stderr"]);
    let mut parts = Vec::new();
    let mut series = Vec::new();
    for &mu in cfg.mu_grid() {
        let s = cfg.spec.with_mu(mu);
        let c = coupling_tail(&s, x, y, cfg.n_paths, cfg.dt(), cfg.t_grid(), cfg.seed).map_err(|e| Error::AtDrift {
            mu,
            source: Box::new(e),
        })?;
        for k in 0..c.table.thresholds.len() {
            t.push(vec![
                mu.into(),
                c.table.thresholds[k].into(),
                c.table.survival[k].into(),
                c.table.stderr(k).into(),
            ]);
        }
        let gap = crate::eigensolver::gap_at(&cfg.spec, mu, &cfg.solver)?.gap;
        parts.push(format!(
            "mu {}: rate {} +- {} on [{}, {}] vs gap {}; coalesced in stages I/II/III {}/{}/{}",
            fmt(mu),
            fmt(c.fit.rate),
            fmt(c.fit.stderr),
            fmt(c.fit.window.0),
            fmt(c.fit.window.1),
            fmt(gap),
            c.stage_counts[0],
            c.stage_counts[1],
            c.stage_counts[2]
        ));
        series.push(Series::new(
            format!("mu = {}", fmt(mu)),
            c.table
                .thresholds
                .iter()
                .copied()
                .zip(c.table.survival.iter().copied())
                .collect(),
            Style::Line,
        ));
    }
    Ok(Artifacts {
        tables: vec![(String::new(), t)],
        plot: Some(Plot {
            title: "coupling time survival".into(),
            x_label: "t".into(),
            y_label: "P(tau_coup > t)".into(),
            log_y: true,
            series,
        }),
        summary: parts.join("; "),
    })
}

fn run_lemma(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut t = Table::new(&[
        "mu",
        "n",
        "t_n",
        "fraction_x_in_a",
        "fraction_y_in_a",
        "accepted",
        "attempts",
    ]);
    let mut parts = Vec::new();
    for &mu in cfg.mu_grid() {
        for &n in &cfg.lemma_n {
            let c = verify_pathwise_lemma_with(&cfg.spec.with_mu(mu), n, cfg.n_paths, cfg.dt(), cfg.seed, &cfg.solver)?;
            t.push(vec![
                mu.into(),
                n.into(),
                c.t_n.into(),
                c.fraction_x_in_a.into(),
                c.fraction_y_in_a.into(),
                c.accepted.into(),
                c.attempts.into(),
            ]);
            parts.push(format!(
                "mu {} n {}: {} from the lower start and {} from the upper start in A",
                fmt(mu),
                n,
                fmt(c.fraction_x_in_a),
                fmt(c.fraction_y_in_a)
            ));
        }
    }
    Ok(Artifacts {
        tables: vec![(String::new(), t)],
        plot: None,
        summary: parts.join("; "),
    })
}

fn run_convolution(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let w = cfg.j_halfwidth.unwrap();
    let mut t = Table::new(&["mu", "t", "lhs", "rhs", "ratio", "lhs_mc", "rhs_mc"]);
    let mut parts = Vec::new();
    let mut series = Vec::new();
    let mut first_holding = None;
    for &mu in cfg.mu_grid() {
        let c = convolution_bound_check(&cfg.spec.with_mu(mu), w, cfg.t_grid(), cfg.n_paths, cfg.dt(), cfg.seed)?;
        for r in &c.rows {
            t.push(vec![
                mu.into(),
                r.t.into(),
                r.lhs.into(),
                r.rhs.into(),
                r.ratio.into(),
                r.lhs_mc.into(),
                r.rhs_mc.into(),
            ]);
        }
        if c.holds && first_holding.is_none() {
            first_holding = Some(mu);
        }
        parts.push(format!("mu {}: max ratio {}", fmt(mu), fmt(c.max_ratio)));
        series.push(Series::new(
            format!("mu = {}", fmt(mu)),
            c.rows.iter().map(|r| (r.t, r.ratio)).collect(),
            Style::Line,
        ));
    }
    parts.push(match first_holding {
        Some(mu) => format!("bound holds (ratio < 1) from mu = {} on the grid", fmt(mu)),
        None => "bound holds nowhere on the grid".into(),
    });
    Ok(Artifacts {
        tables: vec![(String::new(), t)],
        plot: Some(Plot {
            title: "convolution bound ratio".into(),
            x_label: "t".into(),
            y_label: "lhs / rhs".into(),
            log_y: false,
            series,
        }),
        summary: parts.join("; "),
    })
}

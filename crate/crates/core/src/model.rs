//! Domain vocabulary: the interval, the jump distribution and the process
//! specification shared by every other module.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::SolverConfig;
use crate::error::{Error, Result};

/// Open interval `(a, b)` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval { a, b });
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    #[inline]
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Strict membership in the open interval.
    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x > self.a && x < self.b
    }

    /// Mirror image `a + b - x`.
    #[inline]
    pub fn reflect(&self, x: f64) -> f64 {
        self.a + self.b - x
    }

    pub(crate) fn check_inside(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(x))
        }
    }
}

/// One atom of the jump distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Finite atomic probability measure on `(a, b)`: the restart law after each
/// boundary hit.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDistribution {
    atoms: Vec<Atom>,
}

impl JumpDistribution {
    /// Builds an unvalidated distribution; run it through [`validate_spec`] (or
    /// [`ProcessSpec::new`]) before use.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self {
            atoms: pairs
                .iter()
                .map(|&(location, weight)| Atom { location, weight })
                .collect(),
        }
    }

    pub fn delta(x0: f64) -> Self {
        Self::from_pairs(&[(x0, 1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `nu((a, y])`.
    pub fn cdf(&self, y: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|at| at.location <= y)
            .map(|at| at.weight)
            .sum()
    }

    /// Mirror image under `x -> a + b - x`, in canonical (increasing) order.
    pub fn reflect(&self, interval: &Interval) -> Self {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|at| Atom {
                location: interval.reflect(at.location),
                weight: at.weight,
            })
            .collect();
        atoms.reverse();
        Self { atoms }
    }

    /// Draws an atom index from a uniform variate in `[0, 1)`.
    pub fn sample_with(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for at in &self.atoms {
            acc += at.weight;
            if u < acc {
                return at.location;
            }
        }
        self.atoms.last().map(|at| at.location).unwrap_or(f64::NAN)
    }
}

/// Full description of a drifted Brownian motion with jump boundary:
/// generator `(sigma^2/2) d^2/dx^2 + mu d/dx` on `(a, b)`, restarting from
/// `nu` at every boundary hit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    pub interval: Interval,
    pub sigma: f64,
    pub mu: f64,
    pub nu: JumpDistribution,
}

impl ProcessSpec {
    /// Builds and validates a spec.
    pub fn new(a: f64, b: f64, sigma: f64, mu: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        let raw = ProcessSpec {
            interval: Interval { a, b },
            sigma,
            mu,
            nu: JumpDistribution::from_pairs(atoms),
        };
        validate_spec(&raw)
    }

    /// The unit spec `(0, 1)`, `sigma = 1`, `nu = delta_{1/2}` with drift `mu`.
    pub fn unit(mu: f64) -> Self {
        Self::new(0.0, 1.0, 1.0, mu, &[(0.5, 1.0)]).expect("unit spec is valid")
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.interval.length()
    }

    /// True iff `nu` is a single atom at the midpoint of the interval.
    pub fn is_centered_delta(&self) -> bool {
        self.is_centered_delta_tol(SolverConfig::default().centered_tol)
    }

    pub fn is_centered_delta_tol(&self, tol: f64) -> bool {
        match self.nu.atoms() {
            [only] => (only.location - self.interval.midpoint()).abs() <= tol,
            _ => false,
        }
    }

    pub(crate) fn require_centered_delta(&self) -> Result<()> {
        if self.is_centered_delta() {
            Ok(())
        } else {
            Err(Error::RequiresCenteredDelta)
        }
    }

    /// Midpoint restart location `x0` (meaningful for centered specs).
    #[inline]
    pub fn x0(&self) -> f64 {
        self.interval.midpoint()
    }

    /// The spec mirrored through the interval midpoint (`mu -> -mu`).
    pub fn reflected(&self) -> Self {
        Self {
            interval: self.interval,
            sigma: self.sigma,
            mu: -self.mu,
            nu: self.nu.reflect(&self.interval),
        }
    }
}

/// Checks a spec and returns its canonical form: atoms sorted by location,
/// duplicate locations merged, weights renormalized when their sum is within
/// the renormalization tolerance of one.
pub fn validate_spec(spec: &ProcessSpec) -> Result<ProcessSpec> {
    validate_spec_with(spec, &SolverConfig::default())
}

pub fn validate_spec_with(spec: &ProcessSpec, cfg: &SolverConfig) -> Result<ProcessSpec> {
    let interval = Interval::new(spec.interval.a, spec.interval.b)?;
    if !(spec.sigma.is_finite() && spec.sigma > 0.0) {
        return Err(Error::InvalidSigma(spec.sigma));
    }
    if !spec.mu.is_finite() {
        return Err(Error::InvalidDrift(spec.mu));
    }
    if spec.nu.is_empty() {
        return Err(Error::WeightsNotNormalized { sum: 0.0 });
    }
    for at in spec.nu.atoms() {
        if !interval.contains(at.location) || !at.location.is_finite() {
            return Err(Error::AtomOutOfRange {
                location: at.location,
                weight: at.weight,
                a: interval.a,
                b: interval.b,
            });
        }
        if !(at.weight.is_finite() && at.weight > 0.0 && at.weight <= 1.0 + cfg.weight_renormalize_tol) {
            return Err(Error::WeightsNotNormalized { sum: at.weight });
        }
    }

    let mut atoms = spec.nu.atoms().to_vec();
    atoms.sort_by(|p, q| p.location.total_cmp(&q.location));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for at in atoms {
        match merged.last_mut() {
            Some(last) if last.location == at.location => last.weight += at.weight,
            _ => merged.push(at),
        }
    }

    let sum: f64 = merged.iter().map(|at| at.weight).sum();
    if (sum - 1.0).abs() > cfg.weight_renormalize_tol {
        return Err(Error::WeightsNotNormalized { sum });
    }
    if (sum - 1.0).abs() > cfg.weight_sum_tol {
        for at in &mut merged {
            at.weight /= sum;
        }
    }
    debug_assert!((merged.iter().map(|at| at.weight).sum::<f64>() - 1.0).abs() <= cfg.weight_sum_tol);

    Ok(ProcessSpec {
        interval,
        sigma: spec.sigma,
        mu: spec.mu,
        nu: JumpDistribution { atoms: merged },
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    a: f64,
    b: f64,
    sigma: f64,
    mu: f64,
    nu: Vec<(f64, f64)>,
}

impl Serialize for ProcessSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpecJson {
            a: self.interval.a,
            b: self.interval.b,
            sigma: self.sigma,
            mu: self.mu,
            nu: self.nu.atoms().iter().map(|at| (at.location, at.weight)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProcessSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SpecJson::deserialize(d)?;
        ProcessSpec::new(raw.a, raw.b, raw.sigma, raw.mu, &raw.nu).map_err(serde::de::Error::custom)
    }
}

/// Which end of the interval a path left through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Left,
    Right,
}

/// An eigenvalue of `-L` on the jump-boundary domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEigenvalue {
    pub value: Complex64,
    pub multiplicity: u32,
    /// `|D(value)|` after polishing.
    pub residual: f64,
}

/// Sampled trajectory of the jump-boundary process.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathRealization {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Boundary hitting times `T_0 < T_1 < ...`.
    pub jump_times: Vec<f64>,
    /// Restart location drawn at each jump.
    pub restart_positions: Vec<f64>,
    pub exited_at: Vec<Boundary>,
}

impl PathRealization {
    /// Holding times between consecutive jumps (the first entry is `T_0`).
    pub fn holding_times(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.jump_times
            .iter()
            .map(|&t| {
                let s = t - prev;
                prev = t;
                s
            })
            .collect()
    }
}

/// Exponential decay rate from a least-squares fit of `log(value)` against `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub stderr: f64,
    pub n_points: usize,
}

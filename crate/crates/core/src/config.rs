//! Numerical tolerances and budgets, collected in one record so that golden
//! outputs are reproducible from a single value.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    // core-model
    /// Weights must sum to one within this tolerance after canonicalization.
    pub weight_sum_tol: f64,
    /// Weight sums within this distance of one are renormalized; others are rejected.
    pub weight_renormalize_tol: f64,
    /// Tolerance for recognizing a single atom at the interval midpoint.
    pub centered_tol: f64,

    // analytic
    /// Relative tolerance of the adaptive Gauss-Kronrod quadrature.
    pub quad_rel_tol: f64,
    /// Absolute floor for the quadrature tolerance.
    pub quad_abs_tol: f64,
    /// Maximum number of panels the adaptive quadrature may create.
    pub quad_max_panels: usize,
    /// Below `mu_switch_factor * sigma^2 / L` the drift-free Green's function is used.
    pub mu_switch_factor: f64,
    /// Default number of terms in the killed-survival eigenexpansion.
    pub survival_terms: usize,
    /// Tail bound above which killed-survival raises its truncation flag.
    pub survival_tail_warn: f64,

    // eigensolver
    /// Newton polish target for |D(lambda)|.
    pub polish_tol: f64,
    /// Maximum Newton iterations before falling back to Muller's method.
    pub newton_max_iter: usize,
    /// Maximum Muller iterations.
    pub muller_max_iter: usize,
    /// Eigenvalues closer than this are merged.
    pub dedup_tol: f64,
    /// `imag_tol = imag_tol_factor * (1 + gap)` decides `gap_is_real`.
    pub imag_tol_factor: f64,
    /// Default `im_max / re_max` aspect of the search box.
    pub im_aspect: f64,
    /// The winding integral must land within this distance of an integer.
    pub winding_tol: f64,
    /// Number of contour dilations tried before giving up.
    pub max_dilations: usize,
    /// Total relative dilation allowed (spread evenly over `max_dilations`).
    pub max_dilation: f64,
    /// Initial samples per contour edge.
    pub contour_samples: usize,
    /// Phase change per contour segment that triggers refinement (radians).
    pub contour_max_phase_step: f64,
    /// Maximum bisection depth per contour segment.
    pub contour_max_depth: u32,
    /// Boxes narrower than this (relative to the search box) stop subdividing.
    pub min_box_fraction: f64,
    /// Left margin of the search box, relative to `re_max`.
    pub left_margin_fraction: f64,

    // simulator / coupling
    /// Hard cap on steps for a single exit-time sample.
    pub max_exit_steps: u64,
    /// Minimum acceptance rate of conditioned sampling.
    pub rejection_floor: f64,
    /// Hard cap on steps for a single coupling record.
    pub stage_budget: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            weight_sum_tol: 1e-12,
            weight_renormalize_tol: 1e-9,
            centered_tol: 1e-12,
            quad_rel_tol: 1e-10,
            quad_abs_tol: 1e-14,
            quad_max_panels: 10_000,
            mu_switch_factor: 1e-12,
            survival_terms: 64,
            survival_tail_warn: 1e-8,
            polish_tol: 1e-10,
            newton_max_iter: 50,
            muller_max_iter: 100,
            dedup_tol: 1e-7,
            imag_tol_factor: 1e-6,
            im_aspect: 4.0,
            winding_tol: 0.25,
            max_dilations: 8,
            max_dilation: 0.01,
            contour_samples: 64,
            contour_max_phase_step: 0.5,
            contour_max_depth: 24,
            min_box_fraction: 1e-9,
            left_margin_fraction: 0.01,
            max_exit_steps: 1_000_000_000,
            rejection_floor: 1e-6,
            stage_budget: 100_000_000,
        }
    }
}

//! Numerical evidence for relative compactness of `Pi(., U)` in L1:
//! boundedness, uniform tail decay and the translation modulus
//!
//! ```text
//! int_0^T |Pi(x+h, u) - Pi(x, u)| dx
//!     <= (T mu_high / g_low^2) h + (T / g_low^2) int_0^T |g(x+h, u) - g(x, u)| dx
//! ```
//!
//! with `Pi` and `g` extended by zero outside the grid.

use super::KernelContext;
use crate::error::{Error, Result};
use crate::model::OnionSample;

/// Relative slack on the translation bound.
pub const TRANSLATION_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CompactnessRow {
    pub sample: usize,
    pub lambda: f64,
    pub shift: f64,
    /// Horizon actually used (the last node at or below the requested one).
    pub horizon: f64,
    pub pi_norm: f64,
    pub e1_norm: f64,
    pub e2_norm: f64,
    pub bounded: bool,
    pub tail_mass: f64,
    pub envelope_tail_mass: f64,
    pub tail_dominated: bool,
    pub modulus: f64,
    pub growth_variation: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactnessReport {
    pub rows: Vec<CompactnessRow>,
}

impl CompactnessReport {
    pub fn all_bounded(&self) -> bool {
        self.rows.iter().all(|r| r.bounded)
    }

    pub fn all_tails_dominated(&self) -> bool {
        self.rows.iter().all(|r| r.tail_dominated)
    }

    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.within_bound)
    }
}

/// One row per `(sample, shift)`.
pub fn compactness_diagnostics(
    ctx: &KernelContext,
    samples: &[OnionSample],
    shifts: &[f64],
    horizon: f64,
) -> Result<CompactnessReport> {
    let grid = ctx.grid();
    if samples.is_empty() || shifts.is_empty() {
        return Err(Error::Parameter(
            "compactness diagnostics need samples and shifts".into(),
        ));
    }
    if !(horizon > 0.0 && horizon < grid.x_max()) {
        return Err(Error::Parameter(format!(
            "horizon must lie in (0, x_max), got {horizon}"
        )));
    }
    let k = grid.index_at_or_below(horizon);
    let t = grid.nodes()[k];
    for &h in shifts {
        if !(h.is_finite() && h.abs() < grid.x_max() && t + h <= grid.x_max()) {
            return Err(Error::Parameter(format!(
                "shift {h} with horizon {t} leaves the grid [0, {}]",
                grid.x_max()
            )));
        }
    }

    let b = *ctx.model().bounds();
    let e1_norm = grid.integrate(ctx.e1().values())?;
    let e2_norm = grid.integrate(ctx.e2().values())?;
    let e2_tail = grid.reverse_cumulative_trapezoid(ctx.e2().values())?[k];

    let mut rows = Vec::with_capacity(samples.len() * shifts.len());
    for (idx, s) in samples.iter().enumerate() {
        let u = s.u();
        let eval = ctx.evaluate(&u)?;
        let pi = eval.pi.values();
        let g = &eval.rates.g;
        let pi_norm = grid.integrate(pi)?;
        let tail = grid.reverse_cumulative_trapezoid(pi)?[k];
        let slack = 1e-12;

        for &h in shifts {
            let pi_shift = grid.translate(pi, h)?;
            let g_shift = grid.translate(g, h)?;
            let dpi: Vec<f64> = pi_shift
                .iter()
                .zip(pi)
                .map(|(a, b)| (a - b).abs())
                .collect();
            let dg: Vec<f64> = g_shift.iter().zip(g).map(|(a, b)| (a - b).abs()).collect();
            let modulus = grid.cumulative_trapezoid(&dpi)?[k];
            let variation = grid.cumulative_trapezoid(&dg)?[k];
            let g2 = b.g_low * b.g_low;
            let bound = t * b.mu_high / g2 * h.abs() + t / g2 * variation;
            rows.push(CompactnessRow {
                sample: idx,
                lambda: s.lambda(),
                shift: h,
                horizon: t,
                pi_norm,
                e1_norm,
                e2_norm,
                bounded: pi_norm >= e1_norm * (1.0 - slack) && pi_norm <= e2_norm * (1.0 + slack),
                tail_mass: tail,
                envelope_tail_mass: e2_tail,
                tail_dominated: tail <= e2_tail * (1.0 + slack),
                modulus,
                growth_variation: variation,
                bound,
                within_bound: modulus <= bound * (1.0 + TRANSLATION_SLACK),
            });
        }
    }
    Ok(CompactnessReport { rows })
}

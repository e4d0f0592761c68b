//! Sampled evidence for the standing hypotheses on the vital rates.
//!
//! Nothing here is a proof. Each check evaluates the rates on a finite set of
//! onion samples and reports what it saw.

use std::collections::BTreeMap;

use super::{ModelSpec, OnionSample, RateSamples, Variant};
use crate::error::{Error, Rate, Result};
use crate::grid::{DensityProfile, Grid};

/// Relative L1 size of the perturbation used for the continuity probe.
pub const CONTINUITY_PERTURBATION: f64 = 1e-6;

/// A probe response below this (relative, per unit perturbation scale) counts
/// as continuous.
const CONTINUITY_THRESHOLD: f64 = 1e-3;

/// Largest fertility at the largest sampled `lambda`, relative to the peak,
/// for the fertility limit check to pass.
pub const FERTILITY_DECAY_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsEvidence {
    pub pass: bool,
    /// Largest relative excess over the declared bounds (0 when none).
    pub worst_violation: f64,
    pub worst_rate: Option<Rate>,
    pub samples_checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityEvidence {
    pub perturbation: f64,
    /// Largest relative rate change over all samples and nodes.
    pub max_response: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEvidence {
    pub horizon: f64,
    /// Largest finite-difference `|g_x|` on `[0, horizon]` over all samples.
    pub sup_abs_gx: f64,
    /// Analytic per-node bound (hierarchical growth only), evaluated where the
    /// sup was attained.
    pub analytic_bound: Option<f64>,
    /// Whether every finite difference stayed under its per-node bound.
    pub within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FertilityLimitEvidence {
    /// Distinct `lambda` values in increasing order.
    pub lambdas: Vec<f64>,
    /// `max_x beta(x, lambda v)` over all samples with that `lambda`.
    pub max_beta: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub bounds: BoundsEvidence,
    pub continuity: ContinuityEvidence,
    pub growth_derivative: DerivativeEvidence,
    pub fertility_limit: FertilityLimitEvidence,
}

/// Check rate bounds, continuity in `u`, a growth-derivative bound on
/// `[0, horizon]`, and decay of fertility as the population grows.
pub fn validate_hypotheses(
    model: &ModelSpec,
    grid: &Grid,
    samples: &[OnionSample],
    horizon: f64,
) -> Result<HypothesisReport> {
    if samples.is_empty() {
        return Err(Error::Parameter(
            "hypothesis validation needs samples".into(),
        ));
    }
    if !(horizon > 0.0 && horizon <= grid.x_max()) {
        return Err(Error::Parameter(format!(
            "horizon must lie in (0, x_max], got {horizon}"
        )));
    }
    for s in samples {
        s.v().check_grid(grid)?;
    }

    let bounds = model.bounds();
    let mut worst_violation = 0.0f64;
    let mut worst_rate = None;
    let mut max_response = 0.0f64;
    let mut sup_gx = 0.0f64;
    let mut sup_bound: Option<f64> = None;
    let mut all_within = true;
    let mut beta_by_lambda: BTreeMap<u64, (f64, f64)> = BTreeMap::new();

    let gx_bound = hierarchical_gx_bound(model, grid, horizon);
    let last_fd = grid.index_at_or_below(horizon);

    for s in samples {
        let u = s.u();
        let rates = model.raw_rates(&u);
        for (rate, values) in [
            (Rate::Growth, &rates.g),
            (Rate::Mortality, &rates.mu),
            (Rate::Fertility, &rates.beta),
        ] {
            for v in values {
                let excess = bounds.violation(rate, *v);
                if excess > worst_violation {
                    worst_violation = excess;
                    worst_rate = Some(rate);
                }
            }
        }

        max_response = max_response.max(continuity_response(model, &u, &rates));

        let x = grid.nodes();
        for i in 0..last_fd {
            let fd = ((rates.g[i + 1] - rates.g[i]) / (x[i + 1] - x[i])).abs();
            if let Some(bound) = &gx_bound {
                if fd > bound[i] * (1.0 + 1e-9) {
                    all_within = false;
                }
            }
            if fd > sup_gx {
                sup_gx = fd;
                sup_bound = gx_bound.as_ref().map(|b| b[i]);
            }
        }

        let beta_peak = rates.beta.iter().cloned().fold(0.0, f64::max);
        let entry = beta_by_lambda
            .entry(s.lambda().to_bits())
            .or_insert((s.lambda(), 0.0));
        entry.1 = entry.1.max(beta_peak);
    }

    let (lambdas, max_beta): (Vec<f64>, Vec<f64>) = {
        let mut pairs: Vec<(f64, f64)> = beta_by_lambda.into_values().collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.into_iter().unzip()
    };

    Ok(HypothesisReport {
        bounds: BoundsEvidence {
            pass: worst_violation <= super::BOUNDS_SLACK,
            worst_violation,
            worst_rate,
            samples_checked: samples.len(),
        },
        continuity: ContinuityEvidence {
            perturbation: CONTINUITY_PERTURBATION,
            max_response,
            pass: max_response < CONTINUITY_THRESHOLD,
        },
        growth_derivative: DerivativeEvidence {
            horizon,
            sup_abs_gx: sup_gx,
            analytic_bound: sup_bound,
            within_bound: gx_bound.map(|_| all_within),
        },
        fertility_limit: FertilityLimitEvidence {
            pass: fertility_decays(&lambdas, &max_beta),
            lambdas,
            max_beta,
        },
    })
}

/// Decay evidence: the value at the largest `lambda` is small against the
/// peak, and the sequence is nonincreasing over the upper half of the sweep.
fn fertility_decays(lambdas: &[f64], max_beta: &[f64]) -> bool {
    if lambdas.len() < 2 {
        return false;
    }
    let peak = max_beta.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return true;
    }
    let last = *max_beta.last().unwrap();
    let upper = &max_beta[max_beta.len() / 2..];
    let monotone = upper.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    last <= FERTILITY_DECAY_RATIO * peak && monotone
}

/// Relative rate response to adding mass `1e-6 * max(||u||_1, 1)` shaped like `e2`.
fn continuity_response(model: &ModelSpec, u: &DensityProfile, rates: &RateSamples) -> f64 {
    let grid = u.grid();
    let b = model.bounds();
    let shape: Vec<f64> = grid.sample(|x| b.upper_envelope(x));
    let norm = grid.integrate(&shape).expect("same grid");
    let mass = CONTINUITY_PERTURBATION * u.l1_norm().max(1.0);
    let perturbed: Vec<f64> = u
        .values()
        .iter()
        .zip(&shape)
        .map(|(v, s)| v + mass / norm * s)
        .collect();
    let perturbed = DensityProfile::new(grid.clone(), perturbed).expect("nonnegative");
    let after = model.raw_rates(&perturbed);
    let rel = |a: &[f64], b: &[f64], scale: f64| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / scale)
            .fold(0.0, f64::max)
    };
    rel(&rates.g, &after.g, b.g_high)
        .max(rel(&rates.mu, &after.mu, b.mu_high))
        .max(rel(&rates.beta, &after.beta, b.beta_max))
}

/// Per-node bound on the finite-difference slope of hierarchical growth:
/// `(g_high - g_low) e2(x_i) / (e int_T^{x_max} e1)`, from
/// `sup_lambda lambda e^{-a lambda} = 1/(a e)`.
fn hierarchical_gx_bound(model: &ModelSpec, grid: &Grid, horizon: f64) -> Option<Vec<f64>> {
    if !matches!(model.variant(), Variant::Hierarchical { .. }) {
        return None;
    }
    let b = model.bounds();
    let tail = b.lower_envelope_integral(horizon, grid.x_max());
    if tail <= 0.0 {
        return None;
    }
    let spread = b.g_high - b.g_low;
    Some(grid.sample(|x| spread * b.upper_envelope(x) / (std::f64::consts::E * tail)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Scheme};
    use crate::model::standard_onion_samples;

    fn grid() -> std::sync::Arc<Grid> {
        build_grid(30.0, 3001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared()
    }

    #[test]
    fn constant_model_report() {
        let grid = grid();
        let m = ModelSpec::constant(1.0, 1.0, 0.5).unwrap();
        let samples = standard_onion_samples(m.bounds(), grid.clone(), 1);
        let r = validate_hypotheses(&m, &grid, &samples, 10.0).unwrap();
        assert!(r.bounds.pass);
        assert_eq!(r.growth_derivative.sup_abs_gx, 0.0);
        assert!(!r.fertility_limit.pass);
        assert!(r.continuity.pass);
        assert_eq!(r.continuity.max_response, 0.0);
    }

    #[test]
    fn counterexample_fertility_vanishes() {
        let grid = grid();
        let m = ModelSpec::counterexample(1.0).unwrap();
        let samples = standard_onion_samples(m.bounds(), grid.clone(), 2);
        let r = validate_hypotheses(&m, &grid, &samples, 10.0).unwrap();
        assert!(r.bounds.pass);
        assert!(r.fertility_limit.pass, "{:?}", r.fertility_limit);
        assert_eq!(r.fertility_limit.lambdas.len(), 7);
    }

    #[test]
    fn hierarchical_growth_slope_is_bounded() {
        let grid = grid();
        let m = ModelSpec::hierarchical(0.5, 1.0, 1.0, 2.0).unwrap();
        let samples = standard_onion_samples(m.bounds(), grid.clone(), 3);
        let r = validate_hypotheses(&m, &grid, &samples, 5.0).unwrap();
        assert!(r.bounds.pass);
        assert!(r.fertility_limit.pass);
        assert!(r.growth_derivative.sup_abs_gx > 0.0);
        assert_eq!(r.growth_derivative.within_bound, Some(true));
        assert!(r.growth_derivative.sup_abs_gx.is_finite());
    }

    #[test]
    fn misdeclared_bounds_fail() {
        let grid = grid();
        let good = ModelSpec::counterexample(1.0).unwrap();
        // Declared fertility bound too small for the samples' beta.
        let bounds = crate::model::RateBounds::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let bad = ModelSpec::new(
            bounds,
            crate::model::Variant::Composite {
                growth: crate::model::RateFormula::constant(1.0),
                mortality: crate::model::RateFormula::constant(1.0),
                fertility: crate::model::RateFormula {
                    down_amp: 3.0,
                    functional: crate::model::Functional::Total,
                    ..crate::model::RateFormula::constant(0.0)
                },
            },
        )
        .unwrap();
        let samples = standard_onion_samples(good.bounds(), grid.clone(), 4);
        let r = validate_hypotheses(&bad, &grid, &samples, 10.0).unwrap();
        assert!(!r.bounds.pass);
        assert_eq!(r.bounds.worst_rate, Some(Rate::Fertility));
        assert!(r.bounds.worst_violation > 1.0);
    }

    #[test]
    fn rejects_empty_samples() {
        let grid = grid();
        let m = ModelSpec::constant(1.0, 1.0, 0.5).unwrap();
        assert!(validate_hypotheses(&m, &grid, &[], 1.0).is_err());
    }
}

//! The clamped map on `[e1, e2] x [0, inf)`:
//! `(v, lambda) -> (Pi(., lambda v), max(lambda + R(lambda v) - 1, 0))`.
//!
//! Its fixed points with `lambda > 0` are equilibria. Nothing makes it a
//! contraction, so non-convergence is an ordinary outcome and comes back as
//! a trace rather than an error.

use super::{assemble, EquilibriumResult, Route, SolverConfig};
use crate::error::{Error, Result};
use crate::grid::DensityProfile;
use crate::kernel::{l1_distance, KernelContext};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapAStep {
    pub iteration: usize,
    pub lambda: f64,
    pub net_reproduction: f64,
    /// `||v_{k+1} - v_k||_1 + |lambda_{k+1} - lambda_k|`.
    pub change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    /// Converged, but to `lambda = 0`, which is the trivial state.
    TrivialFixedPoint,
}

#[derive(Debug, Clone)]
pub struct MapATrace {
    pub steps: Vec<MapAStep>,
    pub reason: StopReason,
    pub final_lambda: f64,
    pub final_v: DensityProfile,
}

#[derive(Debug, Clone)]
pub enum MapAOutcome {
    Converged(EquilibriumResult),
    NotConverged(MapATrace),
}

/// Iterate the clamped map from `(v0, lambda0)` until the step falls below
/// `picard_tol` or `map_a_max_iter` is reached.
pub fn iterate_map_a(
    ctx: &KernelContext,
    v0: &DensityProfile,
    lambda0: f64,
    cfg: &SolverConfig,
) -> Result<MapAOutcome> {
    cfg.validate()?;
    v0.check_grid(ctx.grid())?;
    if !(lambda0.is_finite() && lambda0 >= 0.0) {
        return Err(Error::Parameter(format!(
            "lambda0 must be >= 0, got {lambda0}"
        )));
    }
    let grid = ctx.grid();
    for (i, ((v, a), b)) in v0
        .values()
        .iter()
        .zip(ctx.e1().values())
        .zip(ctx.e2().values())
        .enumerate()
    {
        if *v < a * (1.0 - 1e-12) || *v > b * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "initial profile leaves [e1, e2] at node {i}"
            )));
        }
    }

    let mut v = v0.clone();
    let mut lambda = lambda0;
    let mut steps = Vec::new();
    for k in 0..cfg.map_a_max_iter {
        let eval = ctx.evaluate(&v.scaled(lambda)?)?;
        let next_lambda = (lambda + eval.net_reproduction - 1.0).max(0.0);
        let change =
            l1_distance(grid, v.values(), eval.pi.values())? + (next_lambda - lambda).abs();
        steps.push(MapAStep {
            iteration: k,
            lambda,
            net_reproduction: eval.net_reproduction,
            change,
        });
        v = eval.pi;
        lambda = next_lambda;
        if change < cfg.picard_tol {
            if lambda > 0.0 {
                return assemble(ctx, lambda, v, k + 1, 1.0, Route::MapA)
                    .map(MapAOutcome::Converged);
            }
            return Ok(MapAOutcome::NotConverged(MapATrace {
                steps,
                reason: StopReason::TrivialFixedPoint,
                final_lambda: lambda,
                final_v: v,
            }));
        }
    }
    Ok(MapAOutcome::NotConverged(MapATrace {
        steps,
        reason: StopReason::MaxIterations,
        final_lambda: lambda,
        final_v: v,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Scheme};
    use crate::model::ModelSpec;

    fn ctx(model: ModelSpec) -> KernelContext {
        let g = build_grid(40.0, 2001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared();
        KernelContext::new(model, g)
    }

    #[test]
    fn hierarchical_map_converges_to_closed_form() {
        // lambda_{k+1} - lambda* ~ (1 - lambda*/(1+lambda*)^2 ...) contracts
        // for this parameter choice.
        let c = ctx(ModelSpec::hierarchical(0.5, 1.0, 1.0, 2.0).unwrap());
        let cfg = SolverConfig::default();
        match iterate_map_a(&c, &c.midpoint(), 0.5, &cfg).unwrap() {
            MapAOutcome::Converged(eq) => {
                assert!((eq.p_star - 1.0).abs() < 1e-6, "{}", eq.p_star);
                assert_eq!(eq.route, Route::MapA);
            }
            MapAOutcome::NotConverged(t) => panic!("no convergence: {:?}", t.steps.last()),
        }
    }

    #[test]
    fn subcritical_constant_model_dies_out() {
        let c = ctx(ModelSpec::constant(1.0, 1.0, 0.5).unwrap());
        let cfg = SolverConfig::default();
        match iterate_map_a(&c, &c.e2().clone(), 3.0, &cfg).unwrap() {
            MapAOutcome::NotConverged(t) => {
                assert_eq!(t.reason, StopReason::TrivialFixedPoint);
                assert_eq!(t.final_lambda, 0.0);
            }
            MapAOutcome::Converged(_) => panic!("subcritical model has no equilibrium"),
        }
    }

    #[test]
    fn counterexample_trace_is_returned() {
        let c = ctx(ModelSpec::counterexample(1.0).unwrap());
        let cfg = SolverConfig {
            map_a_max_iter: 50,
            ..SolverConfig::default()
        };
        match iterate_map_a(&c, &c.midpoint(), 0.9, &cfg).unwrap() {
            MapAOutcome::NotConverged(t) => {
                assert_eq!(t.reason, StopReason::MaxIterations);
                assert_eq!(t.steps.len(), 50);
            }
            MapAOutcome::Converged(eq) => {
                assert!(eq.residual_l1 < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_start() {
        let c = ctx(ModelSpec::constant(1.0, 1.0, 0.5).unwrap());
        let cfg = SolverConfig::default();
        assert!(iterate_map_a(&c, &c.midpoint(), -1.0, &cfg).is_err());
        assert!(iterate_map_a(&c, &c.zero(), 1.0, &cfg).is_err());
    }
}

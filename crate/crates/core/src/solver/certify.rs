//! Existence and nonexistence certificates.
//!
//! A certificate is a verdict plus the sampled evidence behind it. The
//! threshold `rho0` and the monotonicity of `R` are only ever observed on
//! finite samples, so every verdict here is numerical evidence, not proof.

use rand::Rng;
use rayon::prelude::*;

use super::{lambda_residual, rho0_proxy, scan_lambdas, SolverConfig, DEGENERATE_FRACTION};
use crate::error::{Error, Result};
use crate::grid::DensityProfile;
use crate::kernel::KernelContext;
use crate::model::{standard_onion_samples, validate_hypotheses, OnionSampler, ProfileShape};

/// `M = rho0 / ||e1||_1 + beta_max ||e2||_1 - 1` with analytic envelope norms.
pub fn compute_m(ctx: &KernelContext, rho0: f64) -> Result<f64> {
    if !(rho0.is_finite() && rho0 > 0.0) {
        return Err(Error::Parameter(format!(
            "rho0 must be positive, got {rho0}"
        )));
    }
    let b = ctx.model().bounds();
    Ok(rho0 / b.lower_envelope_norm() + b.beta_max * b.upper_envelope_norm() - 1.0)
}

/// Number of `lambda` values in the `rho0` sweep.
const RHO0_LAMBDAS: usize = 641;
/// Random profiles added to `e1`, `e2` and their midpoint in the `rho0` sweep.
const RHO0_RANDOM_PROFILES: usize = 3;

/// Smallest sampled norm `rho` such that every sampled `u = lambda v` with
/// `||u||_1 >= rho` has `R(u) <= 1`. `None` when the largest sample still
/// has `R > 1`.
///
/// Profiles are `e1`, `e2`, their midpoint and a few random shapes; `lambda`
/// runs log-uniformly so that norms cover roughly `[1e-4, 1e4]`.
pub fn find_rho0(ctx: &KernelContext, cfg: &SolverConfig) -> Result<Option<f64>> {
    let b = *ctx.model().bounds();
    let mut sampler = OnionSampler::new(b, ctx.grid().clone(), cfg.seed);
    let mut profiles = vec![ctx.e1().clone(), ctx.e2().clone(), ctx.midpoint()];
    for i in 0..RHO0_RANDOM_PROFILES {
        let shape = if i % 2 == 0 {
            ProfileShape::Smooth
        } else {
            ProfileShape::Rough
        };
        profiles.push(sampler.profile(shape));
    }
    let lambdas = scan_lambdas(
        1e-4 / b.upper_envelope_norm(),
        1e4 / b.lower_envelope_norm(),
        RHO0_LAMBDAS,
    );
    let jobs: Vec<(usize, f64)> = (0..profiles.len())
        .flat_map(|p| lambdas.iter().map(move |&l| (p, l)))
        .collect();
    let mut samples: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|&(p, lambda)| {
            let u = profiles[p].scaled(lambda)?;
            Ok((u.l1_norm(), ctx.net_reproduction(&u)?))
        })
        .collect::<Result<_>>()?;

    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut rho0 = None;
    for (norm, r) in samples {
        if r > 1.0 {
            break;
        }
        rho0 = Some(norm);
    }
    Ok(rho0)
}

/// Sampled monotonicity condition over ordered pairs `u1 < u2`.
///
/// The strict and non-strict forms are tracked separately for each of the
/// three monotonicity properties so that both alternatives can be read off.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityEvidence {
    pub pairs: usize,
    /// `u -> mu/g` nondecreasing on every pair and node.
    pub mortality_growth_nondecreasing: bool,
    pub mortality_growth_increasing: bool,
    /// `u -> beta/mu` nonincreasing on every pair and node.
    pub fertility_mortality_nonincreasing: bool,
    pub fertility_mortality_decreasing: bool,
    /// `x -> beta/mu` nondecreasing for every sampled `u`.
    pub fertility_mortality_nondecreasing_in_x: bool,
    pub fertility_mortality_increasing_in_x: bool,
}

impl MonotonicityEvidence {
    /// `beta/mu` strictly decreasing in `u`, the other two non-strict.
    pub fn strict_fertility_alternative(&self) -> bool {
        self.fertility_mortality_decreasing
            && self.mortality_growth_nondecreasing
            && self.fertility_mortality_nondecreasing_in_x
    }

    /// `beta/mu` non-strict in `u`, the other two strictly increasing.
    pub fn strict_others_alternative(&self) -> bool {
        self.fertility_mortality_nonincreasing
            && self.mortality_growth_increasing
            && self.fertility_mortality_increasing_in_x
    }

    pub fn holds(&self) -> bool {
        self.strict_fertility_alternative() || self.strict_others_alternative()
    }
}

/// Number of ordered pairs sampled for the monotonicity condition.
pub const MONOTONICITY_PAIRS: usize = 100;
const MONOTONE_SLACK: f64 = 1e-12;

/// Sample ordered pairs: starting from zero, along rays `lambda1 v < lambda2 v`,
/// and random pointwise-dominated bumps `u1 < u1 + w`.
pub fn monotonicity_evidence(
    ctx: &KernelContext,
    cfg: &SolverConfig,
) -> Result<MonotonicityEvidence> {
    let b = *ctx.model().bounds();
    let grid = ctx.grid().clone();
    let mut sampler = OnionSampler::new(b, grid.clone(), cfg.seed ^ 0x5eed);
    let mut pairs: Vec<(DensityProfile, DensityProfile)> = Vec::with_capacity(MONOTONICITY_PAIRS);
    for k in 0..MONOTONICITY_PAIRS {
        let s = sampler.random(1e-3, 1e2);
        match k % 5 {
            0 => pairs.push((ctx.zero(), s.u())),
            1 | 2 => {
                let factor = sampler.rng().gen_range(1.5..10.0);
                pairs.push((s.u(), s.v().scaled(s.lambda() * factor)?));
            }
            _ => {
                let u1 = s.u();
                let c = sampler.rng().gen_range(0.1..1.0) * s.lambda();
                let bump: Vec<f64> = (0..grid.len())
                    .map(|_| sampler.rng().gen::<f64>())
                    .collect();
                let u2: Vec<f64> = u1
                    .values()
                    .iter()
                    .zip(ctx.e2().values())
                    .zip(bump)
                    .map(|((u, e), w)| u + c * w * e)
                    .collect();
                pairs.push((u1, DensityProfile::new(grid.clone(), u2)?));
            }
        }
    }

    let mut ev = MonotonicityEvidence {
        pairs: pairs.len(),
        mortality_growth_nondecreasing: true,
        mortality_growth_increasing: true,
        fertility_mortality_nonincreasing: true,
        fertility_mortality_decreasing: true,
        fertility_mortality_nondecreasing_in_x: true,
        fertility_mortality_increasing_in_x: true,
    };
    let model = ctx.model();
    for (u1, u2) in &pairs {
        let r1 = model.sample_rates(u1)?;
        let r2 = model.sample_rates(u2)?;
        let mg = |r: &crate::model::RateSamples| -> Vec<f64> {
            r.mu.iter().zip(&r.g).map(|(m, g)| m / g).collect()
        };
        let bm = |r: &crate::model::RateSamples| -> Vec<f64> {
            r.beta.iter().zip(&r.mu).map(|(b, m)| b / m).collect()
        };
        let (mg1, mg2, bm1, bm2) = (mg(&r1), mg(&r2), bm(&r1), bm(&r2));
        for i in 0..mg1.len() {
            if mg2[i] < mg1[i] * (1.0 - MONOTONE_SLACK) {
                ev.mortality_growth_nondecreasing = false;
            }
            if mg2[i] <= mg1[i] {
                ev.mortality_growth_increasing = false;
            }
            if bm2[i] > bm1[i] * (1.0 + MONOTONE_SLACK) {
                ev.fertility_mortality_nonincreasing = false;
            }
            if bm2[i] >= bm1[i] {
                ev.fertility_mortality_decreasing = false;
            }
        }
        for bm in [&bm1, &bm2] {
            for w in bm.windows(2) {
                if w[1] < w[0] * (1.0 - MONOTONE_SLACK) {
                    ev.fertility_mortality_nondecreasing_in_x = false;
                }
                if w[1] <= w[0] {
                    ev.fertility_mortality_increasing_in_x = false;
                }
            }
        }
    }
    Ok(ev)
}

/// `R` strictly decreasing along `lambda -> lambda v`, from `lambda = 0`,
/// for `v` in `{e1, e2, midpoint}`.
fn rays_decreasing(ctx: &KernelContext) -> Result<bool> {
    let lambdas: Vec<f64> = std::iter::once(0.0)
        .chain(scan_lambdas(1e-3, 1e3, 25))
        .collect();
    for v in [ctx.e1().clone(), ctx.e2().clone(), ctx.midpoint()] {
        let norm = v.l1_norm();
        let mut last = f64::INFINITY;
        for &l in &lambdas {
            let r = ctx.net_reproduction(&v.scaled(l / norm)?)?;
            if r >= last {
                return Ok(false);
            }
            last = r;
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateKind {
    Existence,
    Nonexistence,
    Inconclusive,
}

impl CertificateKind {
    pub fn name(self) -> &'static str {
        match self {
            CertificateKind::Existence => "existence",
            CertificateKind::Nonexistence => "nonexistence",
            CertificateKind::Inconclusive => "inconclusive",
        }
    }
}

/// Which sufficient condition backed an existence verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExistenceRoute {
    /// `R(0) > 1` and a sampled `rho0` beyond which `R <= 1`.
    Threshold,
    /// `R(0) > 1` and fertility vanishing for large populations.
    FertilityLimit,
}

impl ExistenceRoute {
    pub fn name(self) -> &'static str {
        match self {
            ExistenceRoute::Threshold => "threshold",
            ExistenceRoute::FertilityLimit => "fertility_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub route: Option<ExistenceRoute>,
    pub r0: f64,
    pub rho0_estimate: Option<f64>,
    /// `M` used `beta_max ||e2||_1` in place of a missing `rho0`.
    pub rho0_proxy_used: bool,
    pub m: f64,
    pub norm_e1: f64,
    pub norm_e2: f64,
    pub bounds_pass: bool,
    pub fertility_limit_pass: bool,
    pub monotonicity: MonotonicityEvidence,
    pub rays_decreasing: bool,
    /// `(lambda, R(lambda v_lambda))`, `None` where the inner solve failed.
    pub lambda_sweep: Vec<(f64, Option<f64>)>,
    pub degenerate_family: bool,
    /// `R(0) > 1` while `beta_max ||e2||_1 <= 1`, which cannot both hold
    /// for rates inside their declared bounds.
    pub bound_inconsistency: bool,
    pub notes: Vec<String>,
}

const SWEEP_POINTS: usize = 32;

/// Gather the evidence and decide.
///
/// Existence needs `R(0) > 1`, rates inside their bounds, and either a
/// sampled `rho0` or fertility decay. Nonexistence needs `R(0) <= 1`, one
/// alternative of the sampled monotonicity condition, and `R` strictly decreasing along
/// sampled rays. Everything else is inconclusive.
pub fn certify(ctx: &KernelContext, cfg: &SolverConfig) -> Result<Certificate> {
    cfg.validate()?;
    let b = *ctx.model().bounds();
    let grid = ctx.grid().clone();
    let mut notes = Vec::new();

    let r0 = ctx.net_reproduction(&ctx.zero())?;
    let rho0 = find_rho0(ctx, cfg)?;
    let m = compute_m(ctx, rho0.unwrap_or_else(|| rho0_proxy(ctx)))?;
    notes.push("rho0 is a sampled estimate, not a proven threshold".to_string());

    let samples = standard_onion_samples(&b, grid.clone(), cfg.seed);
    let hyp = validate_hypotheses(ctx.model(), &grid, &samples, 0.5 * grid.x_max())?;
    let monotonicity = monotonicity_evidence(ctx, cfg)?;
    let rays = rays_decreasing(ctx)?;

    let lo = cfg.root_tol.max(1e-6);
    let hi = m.max(10.0 * lo);
    let threshold = super::degenerate_threshold(ctx, cfg);
    let lambda_sweep: Vec<(f64, Option<f64>)> = scan_lambdas(lo, hi, SWEEP_POINTS)
        .into_par_iter()
        .map(|l| (l, lambda_residual(ctx, l, cfg).ok().map(|r| r + 1.0)))
        .collect();
    let flat = lambda_sweep
        .iter()
        .filter(|(_, r)| r.is_some_and(|r| (r - 1.0).abs() <= threshold))
        .count();
    let degenerate_family = flat as f64 >= DEGENERATE_FRACTION * lambda_sweep.len() as f64;
    if lambda_sweep.iter().any(|(_, r)| r.is_none()) {
        notes.push("inner iteration failed at some sweep points".to_string());
    }

    let beta_e2 = b.beta_max * b.upper_envelope_norm();
    let bound_inconsistency = r0 > 1.0 && beta_e2 <= 1.0;
    if bound_inconsistency {
        notes.push(format!(
            "R(0) = {r0} > 1 but beta_max ||e2||_1 = {beta_e2} <= 1; declared bounds are inconsistent"
        ));
    }
    if !hyp.bounds.pass {
        notes.push(format!(
            "sampled rates leave the declared bounds (worst relative excess {:e})",
            hyp.bounds.worst_violation
        ));
    }
    if degenerate_family {
        notes.push("R(lambda v_lambda) = 1 across the sweep: continuum of equilibria".to_string());
    }

    let (kind, route) = if r0 > 1.0 && hyp.bounds.pass && !bound_inconsistency {
        if rho0.is_some() {
            (CertificateKind::Existence, Some(ExistenceRoute::Threshold))
        } else if hyp.fertility_limit.pass {
            (
                CertificateKind::Existence,
                Some(ExistenceRoute::FertilityLimit),
            )
        } else {
            (CertificateKind::Inconclusive, None)
        }
    } else if r0 <= 1.0 && monotonicity.holds() && rays {
        (CertificateKind::Nonexistence, None)
    } else {
        (CertificateKind::Inconclusive, None)
    };
    if kind == CertificateKind::Inconclusive && r0 <= 1.0 {
        notes.push("R(0) <= 1 does not rule out equilibria without monotonicity".to_string());
    }

    Ok(Certificate {
        kind,
        route,
        r0,
        rho0_estimate: rho0,
        rho0_proxy_used: rho0.is_none(),
        m,
        norm_e1: b.lower_envelope_norm(),
        norm_e2: b.upper_envelope_norm(),
        bounds_pass: hyp.bounds.pass,
        fertility_limit_pass: hyp.fertility_limit.pass,
        monotonicity,
        rays_decreasing: rays,
        lambda_sweep,
        degenerate_family,
        bound_inconsistency,
        notes,
    })
}

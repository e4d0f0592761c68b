//! Equilibria of `u = G(u) Pi(., u)` through the split system
//!
//! ```text
//! v = Pi(., lambda v),    R(lambda v) = 1,    u* = lambda* v*.
//! ```
//!
//! The primary route is nested: Picard iteration in `v` for fixed `lambda`,
//! then sign scanning and bisection of `lambda -> R(lambda v_lambda) - 1`.
//! The clamped map `(v, lambda) -> (Pi(., lambda v), max(lambda + R - 1, 0))`
//! is available as a second route in [`map_a`].

mod certify;
pub mod map_a;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::DensityProfile;
use crate::kernel::{l1_distance, KernelContext};

pub use certify::{
    certify, compute_m, find_rho0, monotonicity_evidence, Certificate, CertificateKind,
    ExistenceRoute, MonotonicityEvidence,
};
pub use map_a::{iterate_map_a, MapAOutcome, MapAStep, MapATrace, StopReason};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// L1 tolerance of the inner fixed point `v = Pi(., lambda v)`.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Initial relaxation in `(0, 1]`; lowered to 0.5 then 0.25 when the
    /// inner residual grows three iterations in a row.
    pub picard_damping: f64,
    /// Scan range; `None` selects `[root_tol, M]`.
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub scan_points: usize,
    /// Bisection tolerance on `lambda` and on `|R - 1|`.
    pub root_tol: f64,
    pub map_a_max_iter: usize,
    /// Seed for randomly sampled profiles in certificates.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            picard_tol: 1e-9,
            picard_max_iter: 500,
            picard_damping: 1.0,
            lambda_min: None,
            lambda_max: None,
            scan_points: 256,
            root_tol: 1e-10,
            map_a_max_iter: 2000,
            seed: 20_240_917,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("picard_tol", self.picard_tol)?;
        positive("root_tol", self.root_tol)?;
        if !(self.picard_damping > 0.0 && self.picard_damping <= 1.0) {
            return Err(Error::Parameter(format!(
                "picard_damping must lie in (0, 1], got {}",
                self.picard_damping
            )));
        }
        if self.picard_max_iter == 0 || self.map_a_max_iter == 0 {
            return Err(Error::Parameter("iteration limits must be positive".into()));
        }
        if self.scan_points < 2 {
            return Err(Error::Parameter(format!(
                "scan_points must be at least 2, got {}",
                self.scan_points
            )));
        }
        if let Some(lo) = self.lambda_min {
            if !(lo.is_finite() && lo >= 0.0) {
                return Err(Error::Parameter(format!(
                    "lambda_min must be >= 0, got {lo}"
                )));
            }
        }
        if let Some(hi) = self.lambda_max {
            if !(hi.is_finite() && hi > self.lambda_min.unwrap_or(0.0)) {
                return Err(Error::Parameter(format!(
                    "lambda_max must exceed lambda_min, got {hi}"
                )));
            }
        }
        Ok(())
    }

    /// Inner tolerance used while refining roots, tight enough that inner
    /// error does not blur the sign of `R - 1` at the `root_tol` scale.
    fn refine_tol(&self) -> f64 {
        self.picard_tol.min(0.1 * self.root_tol)
    }
}

/// Converged inner fixed point for one `lambda`.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub v: DensityProfile,
    pub iterations: usize,
    /// `||v - Pi(., lambda v)||_1` at return.
    pub residual: f64,
    /// Relaxation in force at return.
    pub damping: f64,
}

/// `v_{k+1} = (1 - d) v_k + d Pi(., lambda v_k)` from `v_0 = (e1 + e2) / 2`.
pub fn inner_picard(ctx: &KernelContext, lambda: f64, cfg: &SolverConfig) -> Result<InnerSolution> {
    inner_picard_tol(ctx, lambda, cfg, cfg.picard_tol)
}

fn inner_picard_tol(
    ctx: &KernelContext,
    lambda: f64,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<InnerSolution> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Parameter(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    let grid = ctx.grid();
    let mut v = ctx.midpoint().into_values();
    let mut damping = cfg.picard_damping;
    let mut rising = 0usize;
    let mut last = f64::INFINITY;

    for k in 0..=cfg.picard_max_iter {
        let u = DensityProfile::new(grid.clone(), v.iter().map(|x| lambda * x).collect())?;
        let pi = ctx.survival_pi(&u)?;
        let residual = l1_distance(grid, &v, pi.values())?;
        if residual <= tol {
            return Ok(InnerSolution {
                v: DensityProfile::new(grid.clone(), v)?,
                iterations: k,
                residual,
                damping,
            });
        }
        if k == cfg.picard_max_iter {
            return Err(Error::Convergence {
                iterations: k,
                residual,
            });
        }
        if residual > last {
            rising += 1;
            if rising >= 3 {
                damping = if damping > 0.5 {
                    0.5
                } else {
                    0.25f64.min(damping)
                };
                rising = 0;
            }
        } else {
            rising = 0;
        }
        last = residual;
        for (vi, pi) in v.iter_mut().zip(pi.values()) {
            *vi = (1.0 - damping) * *vi + damping * pi;
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// `R(lambda v_lambda) - 1` where `v_lambda` solves the inner fixed point.
pub fn lambda_residual(ctx: &KernelContext, lambda: f64, cfg: &SolverConfig) -> Result<f64> {
    Ok(lambda_point(ctx, lambda, cfg, cfg.picard_tol)?.0)
}

fn lambda_point(
    ctx: &KernelContext,
    lambda: f64,
    cfg: &SolverConfig,
    tol: f64,
) -> Result<(f64, InnerSolution)> {
    let inner = inner_picard_tol(ctx, lambda, cfg, tol)?;
    let u = inner.v.scaled(lambda)?;
    let r = ctx.net_reproduction(&u)?;
    Ok((r - 1.0, inner))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub lambda: f64,
    /// `None` when the inner iteration failed at this point.
    pub residual: Option<f64>,
    pub inner_iterations: usize,
    pub failure: Option<String>,
}

/// Consecutive scan points where `R - 1` changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub residual_lo: f64,
    pub residual_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Sampled `rho0`, when the range was derived from `M`.
    pub rho0: Option<f64>,
    /// `M` from `rho0` (or its proxy), when the range was derived from it.
    pub m: Option<f64>,
    pub points: Vec<ScanPoint>,
    /// Sorted by `lambda`; empty for a degenerate family.
    pub brackets: Vec<Bracket>,
    /// `|R - 1|` negligible across the scan: a continuum of equilibria.
    pub degenerate: bool,
}

impl ScanReport {
    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| p.residual.is_none()).count()
    }

    /// `M ||e2||_1`, which bounds every total population `P*` when a
    /// `rho0` was found.
    pub fn population_bound(&self, ctx: &KernelContext) -> Option<f64> {
        match (self.rho0, self.m) {
            (Some(_), Some(m)) => Some(m * ctx.norm_e2()),
            _ => None,
        }
    }
}

/// Resolved scan interval, with the `rho0` estimate and `M` when the upper
/// end came from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
    pub rho0: Option<f64>,
    pub m: Option<f64>,
}

/// The scan range: explicit bounds from the config, else `[root_tol, max(M, 1)]`.
pub fn resolve_lambda_range(ctx: &KernelContext, cfg: &SolverConfig) -> Result<LambdaRange> {
    let lo = cfg.lambda_min.unwrap_or(cfg.root_tol);
    let (hi, rho0, m) = match cfg.lambda_max {
        Some(hi) => (hi, None, None),
        None => {
            let rho0 = find_rho0(ctx, cfg)?;
            let m = compute_m(ctx, rho0.unwrap_or_else(|| rho0_proxy(ctx)))?;
            // M can fall below the lower end when beta_max ||e2||_1 < 1; no
            // root exists there, but keep a nonempty range for the report.
            (m.max(1.0), rho0, Some(m))
        }
    };
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(Error::Parameter(format!("empty lambda range [{lo}, {hi}]")));
    }
    Ok(LambdaRange { lo, hi, rho0, m })
}

/// Stand-in for `rho0` when none was found: `beta_max ||e2||_1`.
pub fn rho0_proxy(ctx: &KernelContext) -> f64 {
    ctx.model().bounds().beta_max * ctx.norm_e2()
}

pub(crate) fn scan_lambdas(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let t = i as f64 / last;
            if i == points - 1 {
                hi
            } else if lo > 0.0 {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect()
}

/// Threshold on `|R - 1|` below which a point counts as "on the root set".
pub(crate) fn degenerate_threshold(ctx: &KernelContext, cfg: &SolverConfig) -> f64 {
    cfg.root_tol
        + ctx.net_reproduction_tail_bound()
        + ctx.model().bounds().beta_max * ctx.quadrature_defect()
}

/// Fraction of scan points that must sit on the root set for a degenerate family.
pub const DEGENERATE_FRACTION: f64 = 0.9;

/// Sign changes of `R(lambda v_lambda) - 1` over the scan grid.
///
/// Only sign changes at scan resolution are found; a root touched without a
/// sign change, or a pair of roots between two points, is missed.
pub fn scan_roots(ctx: &KernelContext, cfg: &SolverConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let range = resolve_lambda_range(ctx, cfg)?;
    let lambdas = scan_lambdas(range.lo, range.hi, cfg.scan_points);
    let points: Vec<ScanPoint> = lambdas
        .par_iter()
        .map(
            |&lambda| match lambda_point(ctx, lambda, cfg, cfg.picard_tol) {
                Ok((r, inner)) => ScanPoint {
                    lambda,
                    residual: Some(r),
                    inner_iterations: inner.iterations,
                    failure: None,
                },
                Err(e) => ScanPoint {
                    lambda,
                    residual: None,
                    inner_iterations: 0,
                    failure: Some(e.to_string()),
                },
            },
        )
        .collect();

    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.residual.map(|r| (p.lambda, r)))
        .collect();
    let threshold = degenerate_threshold(ctx, cfg);
    let flat = ok.iter().filter(|(_, r)| r.abs() <= threshold).count();
    let degenerate = !ok.is_empty() && flat as f64 >= DEGENERATE_FRACTION * points.len() as f64;

    let mut brackets = Vec::new();
    if !degenerate {
        for w in ok.windows(2) {
            let ((a, ra), (b, rb)) = (w[0], w[1]);
            if (ra < 0.0) != (rb < 0.0) {
                brackets.push(Bracket {
                    lo: a,
                    hi: b,
                    residual_lo: ra,
                    residual_hi: rb,
                });
            }
        }
    }
    brackets.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(ScanReport {
        lambda_min: range.lo,
        lambda_max: range.hi,
        rho0: range.rho0,
        m: range.m,
        points,
        brackets,
        degenerate,
    })
}

/// How an equilibrium was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Bisection,
    MapA,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub lambda_star: f64,
    /// Shape, in `[e1, e2]`.
    pub v_star: DensityProfile,
    /// `lambda_star * v_star`.
    pub u_star: DensityProfile,
    /// `Pi(., u_star)`.
    pub pi_star: DensityProfile,
    /// Total population `int u_star`.
    pub p_star: f64,
    pub r_at_u: f64,
    /// `G(u_star)`.
    pub birth: f64,
    /// `||u* - T u*||_1` on the grid plus the certified tail remainder.
    pub residual_l1: f64,
    /// The tail remainder included in `residual_l1`.
    pub residual_tail: f64,
    pub inner_iterations: usize,
    pub damping: f64,
    pub route: Route,
}

pub(crate) fn assemble(
    ctx: &KernelContext,
    lambda: f64,
    v: DensityProfile,
    inner_iterations: usize,
    damping: f64,
    route: Route,
) -> Result<EquilibriumResult> {
    let grid = ctx.grid();
    let u = v.scaled(lambda)?;
    let eval = ctx.evaluate(&u)?;
    let tu: Vec<f64> = eval.pi.values().iter().map(|p| eval.birth * p).collect();
    let on_grid = l1_distance(grid, u.values(), &tu)?;
    let tail = ctx.residual_tail_bound(lambda.max(eval.birth));
    Ok(EquilibriumResult {
        lambda_star: lambda,
        p_star: u.l1_norm(),
        r_at_u: eval.net_reproduction,
        birth: eval.birth,
        residual_l1: on_grid + tail,
        residual_tail: tail,
        pi_star: eval.pi,
        v_star: v,
        u_star: u,
        inner_iterations,
        damping,
        route,
    })
}

/// Bisection of `R(lambda v_lambda) - 1` on a sign-changing bracket.
pub fn bisect_root(
    ctx: &KernelContext,
    bracket: &Bracket,
    cfg: &SolverConfig,
) -> Result<EquilibriumResult> {
    cfg.validate()?;
    let tol = cfg.refine_tol();
    let (mut lo, mut hi) = (bracket.lo.min(bracket.hi), bracket.lo.max(bracket.hi));
    let mut r_lo = lambda_point(ctx, lo, cfg, tol)?.0;
    let mut r_hi = lambda_point(ctx, hi, cfg, tol)?.0;
    if (r_lo < 0.0) == (r_hi < 0.0) {
        return Err(Error::Parameter(format!(
            "no sign change on [{lo}, {hi}]: residuals {r_lo:e}, {r_hi:e}"
        )));
    }

    for _ in 0..400 {
        let width = hi - lo;
        let best = r_lo.abs().min(r_hi.abs());
        if width <= cfg.root_tol && best <= cfg.root_tol {
            break;
        }
        if width <= 4.0 * f64::EPSILON * hi.abs() {
            break;
        }
        let mid = lo + 0.5 * width;
        let r_mid = lambda_point(ctx, mid, cfg, tol)?.0;
        if (r_mid < 0.0) == (r_lo < 0.0) {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
            r_hi = r_mid;
        }
    }

    let lambda = if r_lo.abs() <= r_hi.abs() { lo } else { hi };
    // Polish the shape so the equilibrium residual is not limited by the
    // inner tolerance scaled by lambda.
    let polish = tol / lambda.max(1.0);
    let inner = inner_picard_tol(ctx, lambda, cfg, polish)?;
    assemble(
        ctx,
        lambda,
        inner.v,
        inner.iterations,
        inner.damping,
        Route::Bisection,
    )
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub scan: ScanReport,
    /// Sorted by `lambda_star`.
    pub equilibria: Vec<EquilibriumResult>,
    /// Brackets whose refinement failed, with the error.
    pub failures: Vec<(Bracket, String)>,
}

/// Scan for sign changes and refine every bracket.
pub fn solve(ctx: &KernelContext, cfg: &SolverConfig) -> Result<SolveReport> {
    let scan = scan_roots(ctx, cfg)?;
    let refined: Vec<(Bracket, Result<EquilibriumResult>)> = scan
        .brackets
        .par_iter()
        .map(|b| (*b, bisect_root(ctx, b, cfg)))
        .collect();
    let mut equilibria = Vec::new();
    let mut failures = Vec::new();
    for (b, r) in refined {
        match r {
            Ok(eq) => equilibria.push(eq),
            Err(e) => failures.push((b, e.to_string())),
        }
    }
    equilibria.sort_by(|a, b| a.lambda_star.total_cmp(&b.lambda_star));
    Ok(SolveReport {
        scan,
        equilibria,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Grid, Scheme};
    use crate::model::ModelSpec;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        build_grid(40.0, 4001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            picard_damping: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            scan_points: 1,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            lambda_min: Some(2.0),
            lambda_max: Some(1.0),
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            root_tol: -1.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn inner_picard_u_independent_kernels_converge_in_one_step() {
        let cfg = SolverConfig::default();
        let ctx = KernelContext::new(ModelSpec::constant(0.7, 1.1, 0.3).unwrap(), grid());
        for lambda in [0.0, 0.5, 30.0] {
            // The midpoint start already equals Pi for tight bounds.
            let s = inner_picard(&ctx, lambda, &cfg).unwrap();
            assert!(s.iterations <= 1);
            assert!(s.residual < 1e-15);
        }
        let ctx = KernelContext::new(ModelSpec::counterexample(2.0).unwrap(), grid());
        let s = inner_picard(&ctx, 0.3, &cfg).unwrap();
        assert!(s.iterations <= 1);
        for (v, x) in s.v.values().iter().zip(ctx.grid().nodes()) {
            assert_relative_eq!(*v, (-x).exp() / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn inner_picard_hierarchical_at_zero() {
        let cfg = SolverConfig::default();
        let (g_hi, mu0) = (1.2, 0.9);
        let ctx = KernelContext::new(
            ModelSpec::hierarchical(0.4, g_hi, mu0, 1.0).unwrap(),
            grid(),
        );
        let s = inner_picard(&ctx, 0.0, &cfg).unwrap();
        for (v, x) in s.v.values().iter().zip(ctx.grid().nodes()) {
            assert_relative_eq!(*v, (-mu0 * x / g_hi).exp() / g_hi, max_relative = 1e-12);
        }
    }

    #[test]
    fn inner_picard_stays_between_envelopes() {
        let cfg = SolverConfig::default();
        let ctx = KernelContext::new(ModelSpec::hierarchical(0.4, 1.2, 0.9, 1.0).unwrap(), grid());
        for lambda in [0.1, 1.0, 10.0, 100.0] {
            let s = inner_picard(&ctx, lambda, &cfg).unwrap();
            assert!(s.residual <= cfg.picard_tol);
            for ((v, a), b) in
                s.v.values()
                    .iter()
                    .zip(ctx.e1().values())
                    .zip(ctx.e2().values())
            {
                assert!(*v >= a * (1.0 - 1e-12) && *v <= b * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn inner_picard_reports_non_convergence() {
        let cfg = SolverConfig {
            picard_max_iter: 1,
            picard_tol: 1e-300,
            ..SolverConfig::default()
        };
        let ctx = KernelContext::new(ModelSpec::hierarchical(0.4, 1.2, 0.9, 1.0).unwrap(), grid());
        match inner_picard(&ctx, 10.0, &cfg) {
            Err(Error::Convergence {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn lambda_residual_examples() {
        let cfg = SolverConfig::default();
        let ctx = KernelContext::new(ModelSpec::counterexample(1.0).unwrap(), grid());
        for lambda in [1.0, 1.0 / 6.0] {
            assert!(lambda_residual(&ctx, lambda, &cfg).unwrap().abs() < 1e-8);
        }
        let ctx = KernelContext::new(ModelSpec::constant(0.6, 1.0, 0.6).unwrap(), grid());
        for lambda in [0.0, 0.3, 3.0] {
            assert!(lambda_residual(&ctx, lambda, &cfg).unwrap().abs() < 1e-8);
        }
    }

    #[test]
    fn scan_finds_both_counterexample_roots() {
        let cfg = SolverConfig {
            lambda_min: Some(0.01),
            lambda_max: Some(10.0),
            scan_points: 200,
            ..SolverConfig::default()
        };
        let ctx = KernelContext::new(ModelSpec::counterexample(1.0).unwrap(), grid());
        let scan = scan_roots(&ctx, &cfg).unwrap();
        assert!(!scan.degenerate);
        assert_eq!(scan.brackets.len(), 2);
        let b = &scan.brackets;
        assert!(b[0].lo <= 1.0 / 6.0 && 1.0 / 6.0 <= b[0].hi);
        assert!(b[1].lo <= 1.0 && 1.0 <= b[1].hi);
        assert_eq!(scan.failed_points(), 0);
    }

    #[test]
    fn scan_without_roots() {
        let cfg = SolverConfig::default();
        let ctx = KernelContext::new(ModelSpec::constant(1.0, 1.0, 0.5).unwrap(), grid());
        let scan = scan_roots(&ctx, &cfg).unwrap();
        assert!(scan.brackets.is_empty() && !scan.degenerate);

        let g = build_grid(30.0, 3001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared();
        let ctx = KernelContext::new(ModelSpec::hierarchical(0.5, 1.0, 1.0, 0.9).unwrap(), g);
        let scan = scan_roots(&ctx, &cfg).unwrap();
        assert!(scan.brackets.is_empty());
    }

    #[test]
    fn scan_flags_degenerate_family() {
        let cfg = SolverConfig {
            scan_points: 32,
            ..SolverConfig::default()
        };
        let ctx = KernelContext::new(ModelSpec::constant(1.0, 1.0, 1.0).unwrap(), grid());
        let scan = scan_roots(&ctx, &cfg).unwrap();
        assert!(scan.degenerate);
        assert!(scan.brackets.is_empty());
    }

    #[test]
    fn bisect_counterexample_roots() {
        let cfg = SolverConfig::default();
        let ctx = KernelContext::new(ModelSpec::counterexample(1.0).unwrap(), grid());
        for (lo, hi, root) in [(0.1, 0.3, 1.0 / 6.0), (0.7, 1.4, 1.0)] {
            let b = Bracket {
                lo,
                hi,
                residual_lo: 0.0,
                residual_hi: 0.0,
            };
            let eq = bisect_root(&ctx, &b, &cfg).unwrap();
            assert!((eq.lambda_star - root).abs() < 1e-8, "{}", eq.lambda_star);
            assert!((eq.p_star - root).abs() < 1e-6);
            assert!(eq.residual_l1 < 1e-6);
            assert!((eq.r_at_u - 1.0).abs() < 10.0 * cfg.root_tol);
            assert!(eq.residual_l1 < 10.0 * cfg.picard_tol);
        }
        let bad = Bracket {
            lo: 2.0,
            hi: 3.0,
            residual_lo: 0.0,
            residual_hi: 0.0,
        };
        assert!(matches!(
            bisect_root(&ctx, &bad, &cfg),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn hierarchical_equilibrium_matches_closed_form_population() {
        // With constant mortality, int Pi = 1/mu0 for every u, so
        // R(u) = b0 / (mu0 (1 + ||u||_1)) and P* = b0/mu0 - 1.
        let g = build_grid(40.0, 4001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared();
        let ctx = KernelContext::new(ModelSpec::hierarchical(0.5, 1.0, 1.0, 2.0).unwrap(), g);
        let cfg = SolverConfig::default();
        let report = solve(&ctx, &cfg).unwrap();
        assert_eq!(report.equilibria.len(), 1);
        let eq = &report.equilibria[0];
        assert!((eq.p_star - 1.0).abs() < 1e-6, "P* = {}", eq.p_star);
        assert!(eq.residual_l1 < 10.0 * cfg.picard_tol, "{}", eq.residual_l1);
        assert!((eq.r_at_u - 1.0).abs() < 10.0 * cfg.root_tol);
    }

    #[test]
    fn scan_lambdas_spacing() {
        let l = scan_lambdas(0.01, 10.0, 4);
        assert_relative_eq!(l[1], 0.1, max_relative = 1e-12);
        assert_eq!(l[3], 10.0);
        let l = scan_lambdas(0.0, 3.0, 4);
        assert_eq!(l, vec![0.0, 1.0, 2.0, 3.0]);
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use steadypop_core::kernel::{compactness_diagnostics, KernelContext};
use steadypop_core::model::{standard_onion_samples, validate_hypotheses};
use steadypop_core::solver::{certify, scan_roots, solve, Route};
use steadypop_core::DensityProfile;

use crate::config::RunConfig;
use crate::output::{num, opt_num, Record, Table};
use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Scan,
    Certify,
    Diagnose,
    Verify,
}

/// One command with its command-line options.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
    /// Residual tolerance for `verify`.
    pub tol: Option<f64>,
    /// Profile file for `verify`, with columns `x` and `u`.
    pub profile: Option<PathBuf>,
}

/// Default residual tolerance for `verify`.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-6;

/// Shifts and horizon cap for the translation diagnostics.
const DIAGNOSE_SHIFTS: [f64; 3] = [0.01, 0.1, 1.0];
const DIAGNOSE_HORIZON: f64 = 10.0;

/// Run one invocation and return the process exit code. Messages go to
/// stdout (results) and stderr (errors).
pub fn run(inv: &Invocation) -> u8 {
    match dispatch(inv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("steadypop: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(inv: &Invocation) -> Result<u8, CliError> {
    let cfg = RunConfig::load(&inv.config)?;
    if let Some(tol) = inv.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::Input(format!(
                "--tol must be positive, got {tol}"
            )));
        }
    }
    let out = inv.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let ctx = KernelContext::new(cfg.model.clone(), cfg.grid.clone());
    match inv.command {
        Command::Verify => {
            let path = inv
                .profile
                .as_ref()
                .ok_or_else(|| CliError::Input("verify needs --profile".into()))?;
            cmd_verify(&ctx, path, inv.tol.unwrap_or(DEFAULT_VERIFY_TOL))
        }
        cmd => {
            fs::create_dir_all(&out)?;
            match cmd {
                Command::Solve => cmd_solve(&ctx, &cfg, &out),
                Command::Scan => cmd_scan(&ctx, &cfg, &out),
                Command::Certify => cmd_certify(&ctx, &cfg, &out),
                Command::Diagnose => cmd_diagnose(&ctx, &out),
                Command::Verify => unreachable!(),
            }
        }
    }
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Bisection => "bisection",
        Route::MapA => "map_a",
    }
}

/// `equilibria.csv`, `profile_<k>.csv` per equilibrium and `solve.txt`.
pub fn cmd_solve(ctx: &KernelContext, cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let report = solve(ctx, &cfg.solver)?;
    let mut table = Table::new(&[
        "index",
        "lambda_star",
        "p_star",
        "r_at_u",
        "g_at_u",
        "residual_l1",
        "residual_tail",
        "inner_iterations",
        "damping",
        "route",
    ]);
    let grid = ctx.grid();
    for (k, eq) in report.equilibria.iter().enumerate() {
        table.row(&[
            (k + 1).to_string(),
            num(eq.lambda_star),
            num(eq.p_star),
            num(eq.r_at_u),
            num(eq.birth),
            num(eq.residual_l1),
            num(eq.residual_tail),
            eq.inner_iterations.to_string(),
            num(eq.damping),
            route_name(eq.route).to_string(),
        ]);
        if cfg.write_profiles {
            let mut profile = Table::new(&["x", "u_star", "v_star", "pi", "e1", "e2"]);
            for i in 0..grid.len() {
                profile.row(&[
                    num(grid.nodes()[i]),
                    num(eq.u_star.values()[i]),
                    num(eq.v_star.values()[i]),
                    num(eq.pi_star.values()[i]),
                    num(ctx.e1().values()[i]),
                    num(ctx.e2().values()[i]),
                ]);
            }
            profile.write(&out.join(format!("profile_{}.csv", k + 1)))?;
        }
    }
    table.write(&out.join("equilibria.csv"))?;

    let bound = report.scan.population_bound(ctx);
    let mut rec = Record::default();
    rec.section("solve");
    rec.put("variant", ctx.model().variant().name());
    rec.put("grid_n", grid.len());
    rec.put("grid_x_max", num(grid.x_max()));
    rec.put("grid_scheme", grid.scheme().name());
    rec.put("lambda_min", num(report.scan.lambda_min));
    rec.put("lambda_max", num(report.scan.lambda_max));
    rec.put("rho0_estimate", opt_num(report.scan.rho0));
    rec.put("m", opt_num(report.scan.m));
    rec.put("population_bound", opt_num(bound));
    if let Some(b) = bound {
        let holds = report.equilibria.iter().all(|e| e.p_star <= b);
        rec.put("population_bound_holds", holds);
    }
    rec.put("scan_points", report.scan.points.len());
    rec.put("failed_scan_points", report.scan.failed_points());
    rec.put("brackets", report.scan.brackets.len());
    rec.put("degenerate_family", report.scan.degenerate);
    rec.put("equilibria", report.equilibria.len());
    for (i, (b, err)) in report.failures.iter().enumerate() {
        rec.put(
            &format!("failure_{}", i + 1),
            format!("[{}, {}]: {err}", num(b.lo), num(b.hi)),
        );
    }
    rec.write(&out.join("solve.txt"))?;
    print!("{}", rec.as_str());

    if report.equilibria.is_empty() {
        if report.scan.degenerate {
            eprintln!("steadypop: R(lambda v) = 1 across the scan; degenerate family, no isolated equilibria");
        } else {
            eprintln!("steadypop: no positive equilibrium found in the scanned range");
        }
        return Ok(exit::NO_EQUILIBRIUM);
    }
    Ok(exit::SUCCESS)
}

/// `scan.csv` with one row per scan point; brackets on stdout.
pub fn cmd_scan(ctx: &KernelContext, cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let scan = scan_roots(ctx, &cfg.solver)?;
    let mut table = Table::new(&["lambda", "residual", "inner_iterations", "status"]);
    for p in &scan.points {
        let status = match &p.failure {
            None => "ok".to_string(),
            Some(msg) => format!("\"failed: {}\"", msg.replace('"', "'")),
        };
        table.row(&[
            num(p.lambda),
            opt_num(p.residual),
            p.inner_iterations.to_string(),
            status,
        ]);
    }
    table.write(&out.join("scan.csv"))?;

    let mut rec = Record::default();
    rec.section("scan");
    rec.put("lambda_min", num(scan.lambda_min));
    rec.put("lambda_max", num(scan.lambda_max));
    rec.put("points", scan.points.len());
    rec.put("failed_points", scan.failed_points());
    rec.put("degenerate_family", scan.degenerate);
    rec.put("brackets", scan.brackets.len());
    for (i, b) in scan.brackets.iter().enumerate() {
        rec.put(
            &format!("bracket_{}", i + 1),
            format!("[{}, {}]", num(b.lo), num(b.hi)),
        );
    }
    print!("{}", rec.as_str());
    Ok(exit::SUCCESS)
}

/// `certificate.txt`.
pub fn cmd_certify(ctx: &KernelContext, cfg: &RunConfig, out: &Path) -> Result<u8, CliError> {
    let c = certify(ctx, &cfg.solver)?;
    let mut rec = Record::default();
    rec.section("certificate");
    rec.put("kind", c.kind.name());
    rec.put("route", c.route.map(|r| r.name()).unwrap_or("none"));
    rec.put("r0", num(c.r0));
    rec.put("rho0_estimate", opt_num(c.rho0_estimate));
    rec.put("rho0_proxy_used", c.rho0_proxy_used);
    rec.put("m", num(c.m));
    rec.put("norm_e1", num(c.norm_e1));
    rec.put("norm_e2", num(c.norm_e2));

    rec.section("evidence");
    rec.put("bounds_pass", c.bounds_pass);
    rec.put("fertility_limit_pass", c.fertility_limit_pass);
    rec.put("rays_decreasing", c.rays_decreasing);
    rec.put("degenerate_family", c.degenerate_family);
    rec.put("bound_inconsistency", c.bound_inconsistency);
    let m = &c.monotonicity;
    rec.put("monotonicity_pairs", m.pairs);
    rec.put(
        "mortality_growth_nondecreasing",
        m.mortality_growth_nondecreasing,
    );
    rec.put("mortality_growth_increasing", m.mortality_growth_increasing);
    rec.put(
        "fertility_mortality_nonincreasing",
        m.fertility_mortality_nonincreasing,
    );
    rec.put(
        "fertility_mortality_decreasing",
        m.fertility_mortality_decreasing,
    );
    rec.put(
        "fertility_mortality_nondecreasing_in_x",
        m.fertility_mortality_nondecreasing_in_x,
    );
    rec.put(
        "fertility_mortality_increasing_in_x",
        m.fertility_mortality_increasing_in_x,
    );
    rec.put(
        "monotonicity_strict_fertility",
        m.strict_fertility_alternative(),
    );
    rec.put("monotonicity_strict_others", m.strict_others_alternative());

    rec.section("lambda_sweep");
    for (i, (lambda, r)) in c.lambda_sweep.iter().enumerate() {
        rec.put(
            &format!("point_{:02}", i + 1),
            format!("{} {}", num(*lambda), opt_num(*r)),
        );
    }

    rec.section("notes");
    if c.r0 < 1.0 {
        rec.put("r0_below_one", format!("R(0) = {} < 1", num(c.r0)));
    }
    for (i, note) in c.notes.iter().enumerate() {
        rec.put(&format!("note_{}", i + 1), note);
    }
    rec.write(&out.join("certificate.txt"))?;
    print!("{}", rec.as_str());
    Ok(exit::SUCCESS)
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

/// `diagnostics.txt`: hypothesis checks and translation-bound evidence.
pub fn cmd_diagnose(ctx: &KernelContext, out: &Path) -> Result<u8, CliError> {
    let grid = ctx.grid();
    let samples = standard_onion_samples(ctx.model().bounds(), grid.clone(), 1);
    let horizon = DIAGNOSE_HORIZON.min(0.5 * grid.x_max());
    let hyp = validate_hypotheses(ctx.model(), grid, &samples, horizon)?;
    let comp = compactness_diagnostics(ctx, &samples, &DIAGNOSE_SHIFTS, horizon)?;

    let mut rec = Record::default();
    rec.section("bounds");
    rec.put("result", pass(hyp.bounds.pass));
    rec.put("samples", hyp.bounds.samples_checked);
    rec.put("worst_violation", num(hyp.bounds.worst_violation));
    rec.put(
        "worst_rate",
        hyp.bounds
            .worst_rate
            .map(|r| r.to_string())
            .unwrap_or_else(|| "none".into()),
    );

    rec.section("continuity");
    rec.put("result", pass(hyp.continuity.pass));
    rec.put("perturbation", num(hyp.continuity.perturbation));
    rec.put("max_response", num(hyp.continuity.max_response));

    rec.section("growth_derivative");
    let d = &hyp.growth_derivative;
    rec.put(
        "result",
        match d.within_bound {
            Some(b) => pass(b),
            None => "n/a",
        },
    );
    rec.put("horizon", num(d.horizon));
    rec.put("sup_abs_gx", num(d.sup_abs_gx));
    rec.put("analytic_bound_at_sup", opt_num(d.analytic_bound));

    rec.section("fertility_limit");
    rec.put("result", pass(hyp.fertility_limit.pass));
    for (l, b) in hyp
        .fertility_limit
        .lambdas
        .iter()
        .zip(&hyp.fertility_limit.max_beta)
    {
        rec.put(&format!("max_beta_at_lambda_{}", num(*l)), num(*b));
    }

    rec.section("compactness");
    rec.put("horizon", num(horizon));
    rec.put("rows", comp.rows.len());
    rec.put("bounded", pass(comp.all_bounded()));
    rec.put("tails_dominated", pass(comp.all_tails_dominated()));
    rec.put("translation_bound", pass(comp.all_within_bound()));
    let worst = comp
        .rows
        .iter()
        .filter(|r| r.bound > 0.0)
        .map(|r| r.modulus / r.bound)
        .fold(0.0, f64::max);
    rec.put("worst_modulus_to_bound", num(worst));

    rec.write(&out.join("diagnostics.txt"))?;
    print!("{}", rec.as_str());
    Ok(exit::SUCCESS)
}

/// Read `x` and `u` columns from a CSV file with a header row.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read profile {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Input("profile file is empty".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::Input(format!("profile file has no column {name:?}")))
    };
    let (ix, iu) = (col("x")?, col("u")?);
    let mut xs = Vec::new();
    let mut us = Vec::new();
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let cell = |i: usize| -> Result<f64, CliError> {
            cells
                .get(i)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| CliError::Input(format!("bad number on data line {}", n + 1)))
        };
        xs.push(cell(ix)?);
        us.push(cell(iu)?);
    }
    Ok((xs, us))
}

/// Residual of a given profile; exit 0 when below `tol`, else 4.
pub fn cmd_verify(ctx: &KernelContext, profile: &Path, tol: f64) -> Result<u8, CliError> {
    let (xs, us) = read_profile(profile)?;
    let u = DensityProfile::from_samples(ctx.grid().clone(), &xs, &us)
        .map_err(|e| CliError::Input(format!("profile: {e}")))?;
    let eval = ctx.evaluate(&u)?;
    let residual = ctx.residual(&u)?;
    let mut rec = Record::default();
    rec.section("verify");
    rec.put("residual_l1", num(residual));
    rec.put("r_at_u", num(eval.net_reproduction));
    rec.put("g_at_u", num(eval.birth));
    rec.put("population", num(u.l1_norm()));
    rec.put("tolerance", num(tol));
    let ok = residual < tol;
    rec.put("result", pass(ok));
    print!("{}", rec.as_str());
    Ok(if ok {
        exit::SUCCESS
    } else {
        exit::VERIFY_FAILED
    })
}

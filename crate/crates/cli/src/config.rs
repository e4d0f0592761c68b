//! Run configuration read from a TOML file.
//!
//! Keys may be written flat (`model.variant = "hierarchical"`) or grouped in
//! tables. Unknown keys, and keys that the chosen variant does not use, are
//! rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use steadypop_core::model::{Functional, RateFormula};
use steadypop_core::solver::SolverConfig;
use steadypop_core::{build_grid, Grid, ModelSpec, RateBounds, Scheme, Variant};

use crate::CliError;

/// Grid points used when `grid.n` is absent.
pub const DEFAULT_NODES: usize = 4001;
/// Mass of `e2` allowed beyond the truncation point when `grid.x_max` is absent.
pub const AUTO_TRUNCATION_TOL: f64 = 1e-10;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    variant: String,
    g_low: Option<f64>,
    g_high: Option<f64>,
    mu_low: Option<f64>,
    mu_high: Option<f64>,
    beta_max: Option<f64>,
    mu0: Option<f64>,
    g0: Option<f64>,
    beta0: Option<f64>,
    g: Option<f64>,
    b0: Option<f64>,
    growth: Option<RawFormula>,
    mortality: Option<RawFormula>,
    fertility: Option<RawFormula>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormula {
    #[serde(default)]
    base: f64,
    #[serde(default)]
    x_amp: f64,
    #[serde(default)]
    x_rate: f64,
    #[serde(default)]
    up_amp: f64,
    #[serde(default)]
    down_amp: f64,
    scale: Option<f64>,
    functional: Option<String>,
    decay: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    x_max: Option<f64>,
    n: Option<usize>,
    scheme: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    picard_tol: Option<f64>,
    picard_max_iter: Option<usize>,
    picard_damping: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    scan_points: Option<usize>,
    root_tol: Option<f64>,
    map_a_max_iter: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    profiles: Option<bool>,
}

/// A validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: Arc<Grid>,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Write one profile file per equilibrium.
    pub write_profiles: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))?;
        let model = build_model(&raw.model)?;
        let solver = build_solver(&raw.solver)?;
        let grid = build_run_grid(&raw.grid, model.bounds())?;
        Ok(RunConfig {
            model,
            grid,
            solver,
            output_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
            write_profiles: raw.output.profiles.unwrap_or(true),
        })
    }
}

fn invalid(key: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {err}"))
}

fn required(key: &str, value: Option<f64>) -> Result<f64, CliError> {
    value.ok_or_else(|| CliError::Config(format!("missing key {key}")))
}

fn build_model(raw: &RawModel) -> Result<ModelSpec, CliError> {
    let bounds = RateBounds::new(
        required("model.g_low", raw.g_low)?,
        required("model.g_high", raw.g_high)?,
        required("model.mu_low", raw.mu_low)?,
        required("model.mu_high", raw.mu_high)?,
        required("model.beta_max", raw.beta_max)?,
    )
    .map_err(|e| invalid("model bounds", e))?;

    let scalars = [
        ("mu0", raw.mu0.is_some()),
        ("g0", raw.g0.is_some()),
        ("beta0", raw.beta0.is_some()),
        ("g", raw.g.is_some()),
        ("b0", raw.b0.is_some()),
        ("growth", raw.growth.is_some()),
        ("mortality", raw.mortality.is_some()),
        ("fertility", raw.fertility.is_some()),
    ];
    let used: &[&str] = match raw.variant.as_str() {
        "constant" => &["mu0", "g0", "beta0"],
        "counterexample" => &["g"],
        "hierarchical" => &["mu0", "b0"],
        "composite" => &["growth", "mortality", "fertility"],
        other => {
            return Err(invalid(
                "model.variant",
                format!(
                    "unknown variant {other:?} (expected constant, counterexample, hierarchical or composite)"
                ),
            ))
        }
    };
    for (key, present) in scalars {
        if present && !used.contains(&key) {
            return Err(invalid(
                &format!("model.{key}"),
                format!("not used by variant {}", raw.variant),
            ));
        }
    }

    let variant = match raw.variant.as_str() {
        "constant" => Variant::Constant {
            mu0: required("model.mu0", raw.mu0)?,
            g0: required("model.g0", raw.g0)?,
            beta0: required("model.beta0", raw.beta0)?,
        },
        "counterexample" => Variant::Counterexample {
            g: required("model.g", raw.g)?,
        },
        "hierarchical" => Variant::Hierarchical {
            mu0: required("model.mu0", raw.mu0)?,
            b0: required("model.b0", raw.b0)?,
        },
        _ => {
            let formula = |name: &str, f: &Option<RawFormula>| -> Result<RateFormula, CliError> {
                let f = f
                    .as_ref()
                    .ok_or_else(|| CliError::Config(format!("missing table model.{name}")))?;
                build_formula(name, f)
            };
            Variant::Composite {
                growth: formula("growth", &raw.growth)?,
                mortality: formula("mortality", &raw.mortality)?,
                fertility: formula("fertility", &raw.fertility)?,
            }
        }
    };
    ModelSpec::new(bounds, variant).map_err(|e| invalid("model", e))
}

fn build_formula(name: &str, raw: &RawFormula) -> Result<RateFormula, CliError> {
    let key = |k: &str| format!("model.{name}.{k}");
    let functional = match raw.functional.as_deref().unwrap_or("none") {
        "none" => Functional::None,
        "total" => Functional::Total,
        "tail" => Functional::Tail,
        "head" => Functional::Head,
        "weighted" => Functional::Weighted {
            decay: required(&key("decay"), raw.decay)?,
        },
        other => {
            return Err(invalid(
                &key("functional"),
                format!(
                    "unknown functional {other:?} (expected none, total, tail, head or weighted)"
                ),
            ))
        }
    };
    if raw.decay.is_some() && !matches!(functional, Functional::Weighted { .. }) {
        return Err(invalid(
            &key("decay"),
            "only used with functional = \"weighted\"",
        ));
    }
    Ok(RateFormula {
        base: raw.base,
        x_amp: raw.x_amp,
        x_rate: raw.x_rate,
        up_amp: raw.up_amp,
        down_amp: raw.down_amp,
        scale: raw.scale.unwrap_or(1.0),
        functional,
    })
}

fn build_solver(raw: &RawSolver) -> Result<SolverConfig, CliError> {
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        picard_tol: raw.picard_tol.unwrap_or(d.picard_tol),
        picard_max_iter: raw.picard_max_iter.unwrap_or(d.picard_max_iter),
        picard_damping: raw.picard_damping.unwrap_or(d.picard_damping),
        lambda_min: raw.lambda_min,
        lambda_max: raw.lambda_max,
        scan_points: raw.scan_points.unwrap_or(d.scan_points),
        root_tol: raw.root_tol.unwrap_or(d.root_tol),
        map_a_max_iter: raw.map_a_max_iter.unwrap_or(d.map_a_max_iter),
        seed: raw.seed.unwrap_or(d.seed),
    };
    cfg.validate().map_err(|e| invalid("solver", e))?;
    Ok(cfg)
}

fn build_run_grid(raw: &RawGrid, bounds: &RateBounds) -> Result<Arc<Grid>, CliError> {
    let scheme = match raw.scheme.as_deref() {
        None => Scheme::UniformCorrected,
        Some(name) => Scheme::parse(name).ok_or_else(|| {
            invalid(
                "grid.scheme",
                format!(
                    "unknown scheme {name:?} (expected uniform_trapezoid, graded_trapezoid or uniform_corrected)"
                ),
            )
        })?,
    };
    let x_max = raw
        .x_max
        .unwrap_or_else(|| bounds.truncation_horizon(AUTO_TRUNCATION_TOL));
    let n = raw.n.unwrap_or(DEFAULT_NODES);
    build_grid(x_max, n, scheme)
        .map(Grid::into_shared)
        .map_err(|e| invalid("grid", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HIER: &str = r#"
model.variant = "hierarchical"
model.g_low = 0.5
model.g_high = 1.0
model.mu_low = 1.0
model.mu_high = 1.0
model.beta_max = 2.0
model.mu0 = 1.0
model.b0 = 2.0
grid.x_max = 30.0
grid.n = 301
solver.scan_points = 64
"#;

    fn config_err(text: &str) -> String {
        match RunConfig::parse(text) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_flat_keys() {
        let c = RunConfig::parse(HIER).unwrap();
        assert_eq!(c.grid.len(), 301);
        assert_eq!(c.grid.scheme(), Scheme::UniformCorrected);
        assert_eq!(c.solver.scan_points, 64);
        assert_eq!(c.solver.root_tol, SolverConfig::default().root_tol);
        assert!(matches!(c.model.variant(), Variant::Hierarchical { .. }));
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn tables_are_equivalent() {
        let text = r#"
[model]
variant = "counterexample"
g_low = 1.0
g_high = 1.0
mu_low = 1.0
mu_high = 1.0
beta_max = 4.0
g = 1.0

[grid]
n = 101
"#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.grid.len(), 101);
        // Auto truncation: (g/mu) ln(||e2|| / 1e-10) = ln(1e10).
        assert!((c.grid.x_max() - 1e10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn composite_formulas() {
        let text = r#"
model.variant = "composite"
model.g_low = 1.0
model.g_high = 1.0
model.mu_low = 1.0
model.mu_high = 1.5
model.beta_max = 0.6
model.growth.base = 1.0
model.mortality.base = 1.0
model.mortality.up_amp = 0.5
model.mortality.functional = "total"
model.fertility.base = 0.6
"#;
        let c = RunConfig::parse(text).unwrap();
        match c.model.variant() {
            Variant::Composite { mortality, .. } => {
                assert_eq!(mortality.functional, Functional::Total);
                assert_eq!(mortality.up_amp, 0.5);
                assert_eq!(mortality.scale, 1.0);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        assert!(config_err(&HIER.replace("model.g_low = 0.5\n", "")).contains("model.g_low"));
        assert!(config_err(&format!("{HIER}grid.bogus = 1\n")).contains("bogus"));
        assert!(config_err(&format!("{HIER}model.beta0 = 1\n")).contains("model.beta0"));
        assert!(config_err(&HIER.replace("hierarchical", "logistic")).contains("model.variant"));
        assert!(config_err(&format!("{HIER}grid.scheme = \"simpson\"\n")).contains("grid.scheme"));
        assert!(config_err(&HIER.replace("model.b0 = 2.0\n", "")).contains("model.b0"));
        assert!(
            config_err(&format!("{HIER}solver.picard_damping = 2.0\n")).contains("picard_damping")
        );
        assert!(!config_err("model.variant = \"constant\"\nmodel = 3\n").is_empty());
    }
}

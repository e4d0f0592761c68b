#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steadypop"))
}

/// Run `steadypop <cmd> --config <cfg> --out <out> [extra]` and return the
/// exit code with stdout.
pub fn run(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let o = bin()
        .arg(cmd)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
    )
}

pub fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn bounds(g_low: f64, g_high: f64, mu_low: f64, mu_high: f64, beta_max: f64) -> String {
    format!(
        "model.g_low = {g_low:?}\nmodel.g_high = {g_high:?}\nmodel.mu_low = {mu_low:?}\nmodel.mu_high = {mu_high:?}\nmodel.beta_max = {beta_max:?}\n"
    )
}

pub fn counterexample(n: usize, x_max: f64) -> String {
    format!(
        "model.variant = \"counterexample\"\n{}model.g = 1.0\ngrid.x_max = {x_max:?}\ngrid.n = {n}\n",
        bounds(1.0, 1.0, 1.0, 1.0, 4.0)
    )
}

pub fn constant(mu0: f64, g0: f64, beta0: f64) -> String {
    format!(
        "model.variant = \"constant\"\n{}model.mu0 = {mu0:?}\nmodel.g0 = {g0:?}\nmodel.beta0 = {beta0:?}\ngrid.x_max = 40.0\ngrid.n = 2001\n",
        bounds(g0, g0, mu0, mu0, beta0.max(1e-3))
    )
}

pub fn hierarchical(mu0: f64, b0: f64) -> String {
    format!(
        "model.variant = \"hierarchical\"\n{}model.mu0 = {mu0:?}\nmodel.b0 = {b0:?}\ngrid.n = 4001\n",
        bounds(0.5, 1.0, mu0, mu0, b0)
    )
}

/// Constant growth and fertility, mortality `mu0 + rise ||u|| / (1 + ||u||)`.
pub fn crowded(mu0: f64, rise: f64, beta0: f64) -> String {
    format!(
        "model.variant = \"composite\"\n{}model.growth.base = 1.0\nmodel.mortality.base = {mu0:?}\nmodel.mortality.up_amp = {rise:?}\nmodel.mortality.functional = \"total\"\nmodel.fertility.base = {beta0:?}\ngrid.x_max = 40.0\ngrid.n = 2001\n",
        bounds(1.0, 1.0, mu0, mu0 + rise, beta0)
    )
}

/// Parse a CSV file into its header and numeric-or-text cells.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

pub fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(path);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

/// Value of `key = value` in a record file.
pub fn record_value(text: &str, key: &str) -> Option<String> {
    text.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then(|| v.to_string())
    })
}

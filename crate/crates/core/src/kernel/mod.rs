//! Survival kernel, envelopes, birth and net reproduction functionals, and
//! the fixed-point operator whose fixed points are the equilibria.
//!
//! For a density `u`:
//!
//! ```text
//! Pi(x, u) = exp(-int_0^x mu(y,u)/g(y,u) dy) / g(x, u)
//! G(u)     = int beta(x, u) u(x) dx
//! R(u)     = int beta(x, u) Pi(x, u) dx
//! (T u)(x) = G(u) Pi(x, u)
//! ```
//!
//! The running integral of `mu/g` uses trapezoid panels whatever the grid's
//! rule: a positive panel rule keeps `e1 <= Pi <= e2` exact at every node.

mod compactness;

use std::sync::Arc;

use crate::error::Result;
use crate::grid::{DensityProfile, Grid};
use crate::model::{ModelSpec, RateSamples};

pub use compactness::{compactness_diagnostics, CompactnessReport, CompactnessRow};

/// A model on a grid, with its envelopes sampled once.
#[derive(Debug, Clone)]
pub struct KernelContext {
    model: ModelSpec,
    grid: Arc<Grid>,
    e1: DensityProfile,
    e2: DensityProfile,
    norm_e1: f64,
    norm_e2: f64,
}

/// `Pi(., u)`, the rates, `G(u)` and `R(u)` from one rate evaluation.
#[derive(Debug, Clone)]
pub struct KernelEval {
    pub rates: RateSamples,
    pub pi: DensityProfile,
    pub birth: f64,
    pub net_reproduction: f64,
}

impl KernelContext {
    pub fn new(model: ModelSpec, grid: Arc<Grid>) -> Self {
        let b = *model.bounds();
        let e1 = DensityProfile::from_fn(grid.clone(), |x| b.lower_envelope(x))
            .expect("envelopes are positive");
        let e2 = DensityProfile::from_fn(grid.clone(), |x| b.upper_envelope(x))
            .expect("envelopes are positive");
        KernelContext {
            norm_e1: b.lower_envelope_norm(),
            norm_e2: b.upper_envelope_norm(),
            model,
            grid,
            e1,
            e2,
        }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn e1(&self) -> &DensityProfile {
        &self.e1
    }

    pub fn e2(&self) -> &DensityProfile {
        &self.e2
    }

    /// `||e1||_1` on the half-line, in closed form.
    pub fn norm_e1(&self) -> f64 {
        self.norm_e1
    }

    /// `||e2||_1` on the half-line, in closed form.
    pub fn norm_e2(&self) -> f64 {
        self.norm_e2
    }

    /// `int_{x_max}^inf e2`: the mass any profile under `e2` can hide beyond
    /// the grid.
    pub fn envelope_tail(&self) -> f64 {
        self.model.bounds().upper_envelope_tail(self.grid.x_max())
    }

    pub fn zero(&self) -> DensityProfile {
        DensityProfile::zeros(self.grid.clone())
    }

    /// `(e1 + e2) / 2`.
    pub fn midpoint(&self) -> DensityProfile {
        let values = self
            .e1
            .values()
            .iter()
            .zip(self.e2.values())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        DensityProfile::new(self.grid.clone(), values).expect("positive")
    }

    fn pi_from_rates(&self, rates: &RateSamples) -> Vec<f64> {
        let ratio: Vec<f64> = rates.mu.iter().zip(&rates.g).map(|(m, g)| m / g).collect();
        let hazard = self
            .grid
            .cumulative_integral(&ratio)
            .expect("rates sampled on the context grid");
        // The exact hazard lies between the envelope slopes times x; clamping
        // removes overshoot from negative stencil coefficients.
        let b = self.model.bounds();
        let (lo, hi) = (b.upper_decay(), b.lower_decay());
        hazard
            .iter()
            .zip(self.grid.nodes())
            .zip(&rates.g)
            .map(|((h, x), g)| (-h.clamp(lo * x, hi * x)).exp() / g)
            .collect()
    }

    /// Evaluate the rates once and derive `Pi`, `G` and `R` from them.
    pub fn evaluate(&self, u: &DensityProfile) -> Result<KernelEval> {
        u.check_grid(&self.grid)?;
        let rates = self.model.sample_rates(u)?;
        let pi = self.pi_from_rates(&rates);
        let born: Vec<f64> = rates
            .beta
            .iter()
            .zip(u.values())
            .map(|(b, v)| b * v)
            .collect();
        let offspring: Vec<f64> = rates.beta.iter().zip(&pi).map(|(b, p)| b * p).collect();
        let birth = self.grid.integrate(&born)?;
        let net_reproduction = self.grid.integrate(&offspring)?;
        Ok(KernelEval {
            pi: DensityProfile::new(self.grid.clone(), pi)?,
            rates,
            birth,
            net_reproduction,
        })
    }

    /// `Pi(., u)`; lies in `[e1, e2]` at every node.
    pub fn survival_pi(&self, u: &DensityProfile) -> Result<DensityProfile> {
        u.check_grid(&self.grid)?;
        let rates = self.model.sample_rates(u)?;
        DensityProfile::new(self.grid.clone(), self.pi_from_rates(&rates))
    }

    /// `G(u) = int beta(x, u) u(x) dx`.
    pub fn birth_g(&self, u: &DensityProfile) -> Result<f64> {
        u.check_grid(&self.grid)?;
        let rates = self.model.sample_rates(u)?;
        let born: Vec<f64> = rates
            .beta
            .iter()
            .zip(u.values())
            .map(|(b, v)| b * v)
            .collect();
        self.grid.integrate(&born)
    }

    /// `R(u) = int beta(x, u) Pi(x, u) dx`.
    pub fn net_reproduction(&self, u: &DensityProfile) -> Result<f64> {
        Ok(self.evaluate(u)?.net_reproduction)
    }

    /// `(T u)(x) = G(u) Pi(x, u)`.
    pub fn apply_t(&self, u: &DensityProfile) -> Result<DensityProfile> {
        let eval = self.evaluate(u)?;
        eval.pi.scaled(eval.birth)
    }

    /// `||u - T u||_1` on the grid.
    pub fn residual(&self, u: &DensityProfile) -> Result<f64> {
        let tu = self.apply_t(u)?;
        l1_distance(&self.grid, u.values(), tu.values())
    }

    /// Certified bound on `||u - T u||_1` beyond `x_max` for `u` under
    /// `scale * e2` with `G(u) <= scale`.
    pub fn residual_tail_bound(&self, scale: f64) -> f64 {
        scale * self.envelope_tail()
    }

    /// Quadrature error of the envelopes on the grid against their closed
    /// forms, a scale for how well grid integrals resolve `Pi`.
    pub fn quadrature_defect(&self) -> f64 {
        let b = self.model.bounds();
        let x_max = self.grid.x_max();
        let d1 = self.grid.integrate(self.e1.values()).expect("same grid")
            - b.lower_envelope_integral(0.0, x_max);
        let d2 = self.grid.integrate(self.e2.values()).expect("same grid")
            - (self.norm_e2 - self.envelope_tail());
        d1.abs().max(d2.abs())
    }

    /// Bound on the part of `R` lost to truncation: `beta_max int_{x_max}^inf e2`.
    pub fn net_reproduction_tail_bound(&self) -> f64 {
        self.model.bounds().beta_max * self.envelope_tail()
    }
}

/// `int |a - b|` on the grid.
pub fn l1_distance(grid: &Grid, a: &[f64], b: &[f64]) -> Result<f64> {
    grid.check_len(b)?;
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    grid.integrate(&diff)
}

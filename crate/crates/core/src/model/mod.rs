//! Vital rates `mu(x, u)`, `g(x, u)`, `beta(x, u)` and their declared bounds.
//!
//! Rates receive the whole density `u`, so nonlocal dependence (total mass,
//! tail integrals) is expressible. Every evaluation is checked against the
//! model's [`RateBounds`]; an out-of-bounds value is a model misconfiguration
//! and surfaces as [`Error::BoundsViolation`].

mod formula;
mod hypotheses;
mod onion;

use crate::error::{Error, Rate, Result};
use crate::grid::{DensityProfile, Grid};

pub use formula::{Functional, RateFormula};
pub use hypotheses::{
    validate_hypotheses, BoundsEvidence, ContinuityEvidence, DerivativeEvidence,
    FertilityLimitEvidence, HypothesisReport,
};
pub use onion::{standard_onion_samples, OnionSample, OnionSampler, ProfileShape};

/// Relative slack for bounds checks; absorbs rounding in evaluated formulas.
pub const BOUNDS_SLACK: f64 = 1e-12;

/// Constants bounding the vital rates uniformly in `x` and `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBounds {
    pub g_low: f64,
    pub g_high: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    pub beta_max: f64,
}

impl RateBounds {
    pub fn new(g_low: f64, g_high: f64, mu_low: f64, mu_high: f64, beta_max: f64) -> Result<Self> {
        let b = RateBounds {
            g_low,
            g_high,
            mu_low,
            mu_high,
            beta_max,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g_low,
            self.g_high,
            self.mu_low,
            self.mu_high,
            self.beta_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("rate bounds must be finite".into()));
        }
        if !(self.g_low > 0.0 && self.g_low <= self.g_high) {
            return Err(Error::Parameter(format!(
                "growth bounds need 0 < g_low <= g_high, got [{}, {}]",
                self.g_low, self.g_high
            )));
        }
        if !(self.mu_low > 0.0 && self.mu_low <= self.mu_high) {
            return Err(Error::Parameter(format!(
                "mortality bounds need 0 < mu_low <= mu_high, got [{}, {}]",
                self.mu_low, self.mu_high
            )));
        }
        if self.beta_max <= 0.0 {
            return Err(Error::Parameter(format!(
                "beta_max must be positive, got {}",
                self.beta_max
            )));
        }
        Ok(())
    }

    /// Decay rate of the lower envelope, `mu_high / g_low`.
    pub fn lower_decay(&self) -> f64 {
        self.mu_high / self.g_low
    }

    /// Decay rate of the upper envelope, `mu_low / g_high`.
    pub fn upper_decay(&self) -> f64 {
        self.mu_low / self.g_high
    }

    /// `e1(x) = exp(-(mu_high/g_low) x) / g_high`.
    pub fn lower_envelope(&self, x: f64) -> f64 {
        (-self.lower_decay() * x).exp() / self.g_high
    }

    /// `e2(x) = exp(-(mu_low/g_high) x) / g_low`.
    pub fn upper_envelope(&self, x: f64) -> f64 {
        (-self.upper_decay() * x).exp() / self.g_low
    }

    /// `||e1||_1 = g_low / (g_high mu_high)` on the whole half-line.
    pub fn lower_envelope_norm(&self) -> f64 {
        self.g_low / (self.g_high * self.mu_high)
    }

    /// `||e2||_1 = g_high / (g_low mu_low)` on the whole half-line.
    pub fn upper_envelope_norm(&self) -> f64 {
        self.g_high / (self.g_low * self.mu_low)
    }

    /// `int_a^b e1` in closed form (`b` may be infinite).
    pub fn lower_envelope_integral(&self, a: f64, b: f64) -> f64 {
        let k = self.lower_decay();
        self.lower_envelope_norm() * ((-k * a).exp() - (-k * b).exp())
    }

    /// `int_T^inf e2 = ||e2||_1 exp(-(mu_low/g_high) T)`.
    pub fn upper_envelope_tail(&self, t: f64) -> f64 {
        self.upper_envelope_norm() * (-self.upper_decay() * t).exp()
    }

    /// Horizon at which the analytic tail of `e2` drops below `tol`.
    pub fn truncation_horizon(&self, tol: f64) -> f64 {
        let x = (self.g_high / self.mu_low) * (self.upper_envelope_norm() / tol).ln();
        x.max(1.0)
    }

    fn check(&self, rate: Rate, x: f64, value: f64) -> Result<f64> {
        let (low, high) = match rate {
            Rate::Growth => (self.g_low, self.g_high),
            Rate::Mortality => (self.mu_low, self.mu_high),
            Rate::Fertility => (0.0, self.beta_max),
        };
        let slack = BOUNDS_SLACK * high;
        if !value.is_finite() || value < low - slack || value > high + slack {
            return Err(Error::BoundsViolation {
                rate,
                x,
                value,
                low,
                high,
            });
        }
        Ok(value)
    }

    /// Relative excess of `value` outside the bounds of `rate` (0 if inside).
    pub fn violation(&self, rate: Rate, value: f64) -> f64 {
        let (low, high) = match rate {
            Rate::Growth => (self.g_low, self.g_high),
            Rate::Mortality => (self.mu_low, self.mu_high),
            Rate::Fertility => (0.0, self.beta_max),
        };
        if !value.is_finite() {
            return f64::INFINITY;
        }
        ((low - value).max(value - high) / high).max(0.0)
    }
}

/// Piecewise profile of the counterexample's reproduction factor.
///
/// `1/2 + 3a` on `[0, 1/2]`, `3 - 2a` on `(1/2, 5/4]`, `(e^{5/4}/2) e^{-a}`
/// beyond. `f(a) = 1` at `a = 1/6` and `a = 1`.
pub fn counterexample_f(a: f64) -> Result<f64> {
    if !a.is_finite() || a < 0.0 {
        return Err(Error::Parameter(format!(
            "counterexample_f needs a finite a >= 0, got {a}"
        )));
    }
    Ok(counterexample_f_unchecked(a))
}

fn counterexample_f_unchecked(a: f64) -> f64 {
    if a <= 0.5 {
        0.5 + 3.0 * a
    } else if a <= 1.25 {
        3.0 - 2.0 * a
    } else {
        0.5 * (1.25 - a).exp()
    }
}

/// Model variants. All parameters are per unit time.
#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// `mu = mu0`, `g = g0`, `beta = beta0`.
    Constant { mu0: f64, g0: f64, beta0: f64 },
    /// `mu = g = const`, `beta(x, u) = 2 g (1 - e^{-x}) f(||u||_1)`.
    Counterexample { g: f64 },
    /// Hierarchical growth `g = g_low + (g_high - g_low) exp(-int_x^inf u)`
    /// with `mu = mu0` and `beta = b0 / (1 + ||u||_1)`. The growth limits are
    /// the model's declared `g_low`/`g_high`.
    Hierarchical { mu0: f64, b0: f64 },
    /// Each rate given by a [`RateFormula`].
    Composite {
        growth: RateFormula,
        mortality: RateFormula,
        fertility: RateFormula,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Constant { .. } => "constant",
            Variant::Counterexample { .. } => "counterexample",
            Variant::Hierarchical { .. } => "hierarchical",
            Variant::Composite { .. } => "composite",
        }
    }
}

/// A model: a variant plus the constants bounding its rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    bounds: RateBounds,
    variant: Variant,
}

/// Rates sampled at every grid node for one density.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSamples {
    pub g: Vec<f64>,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ModelSpec {
    pub fn new(bounds: RateBounds, variant: Variant) -> Result<Self> {
        bounds.validate()?;
        let in_range = |name: &str, v: f64, low: f64, high: f64| -> Result<()> {
            if !(v.is_finite() && v >= low && v <= high) {
                return Err(Error::Parameter(format!(
                    "{name} = {v} is outside the declared bounds [{low}, {high}]"
                )));
            }
            Ok(())
        };
        match &variant {
            Variant::Constant { mu0, g0, beta0 } => {
                in_range("mu0", *mu0, bounds.mu_low, bounds.mu_high)?;
                in_range("g0", *g0, bounds.g_low, bounds.g_high)?;
                in_range("beta0", *beta0, 0.0, bounds.beta_max)?;
            }
            Variant::Counterexample { g } => {
                in_range("g", *g, bounds.g_low, bounds.g_high)?;
                in_range("g (as mortality)", *g, bounds.mu_low, bounds.mu_high)?;
                if bounds.beta_max < 4.0 * g {
                    return Err(Error::Parameter(format!(
                        "counterexample fertility reaches 4g = {}, above beta_max = {}",
                        4.0 * g,
                        bounds.beta_max
                    )));
                }
            }
            Variant::Hierarchical { mu0, b0 } => {
                in_range("mu0", *mu0, bounds.mu_low, bounds.mu_high)?;
                in_range("b0", *b0, 0.0, bounds.beta_max)?;
            }
            Variant::Composite {
                growth,
                mortality,
                fertility,
            } => {
                growth.validate("growth")?;
                mortality.validate("mortality")?;
                fertility.validate("fertility")?;
            }
        }
        Ok(ModelSpec { bounds, variant })
    }

    /// Constant rates with bounds collapsed onto the values.
    pub fn constant(mu0: f64, g0: f64, beta0: f64) -> Result<Self> {
        let beta_max = if beta0 > 0.0 { beta0 } else { 1.0 };
        ModelSpec::new(
            RateBounds::new(g0, g0, mu0, mu0, beta_max)?,
            Variant::Constant { mu0, g0, beta0 },
        )
    }

    /// The non-uniqueness example with two positive equilibria.
    pub fn counterexample(g: f64) -> Result<Self> {
        ModelSpec::new(
            RateBounds::new(g, g, g, g, 4.0 * g)?,
            Variant::Counterexample { g },
        )
    }

    /// Hierarchical growth with constant mortality and crowding-limited fertility.
    pub fn hierarchical(g_low: f64, g_high: f64, mu0: f64, b0: f64) -> Result<Self> {
        ModelSpec::new(
            RateBounds::new(g_low, g_high, mu0, mu0, b0)?,
            Variant::Hierarchical { mu0, b0 },
        )
    }

    /// Constant growth and fertility; mortality `mu0 + rise * s/(1+s)` with
    /// `s = ||u||_1`, strictly increasing in `u`.
    pub fn constant_with_crowded_mortality(
        mu0: f64,
        rise: f64,
        g0: f64,
        beta0: f64,
    ) -> Result<Self> {
        ModelSpec::new(
            RateBounds::new(g0, g0, mu0, mu0 + rise, beta0.max(f64::MIN_POSITIVE))?,
            Variant::Composite {
                growth: RateFormula::constant(g0),
                mortality: RateFormula {
                    base: mu0,
                    up_amp: rise,
                    functional: Functional::Total,
                    ..RateFormula::constant(0.0)
                },
                fertility: RateFormula::constant(beta0),
            },
        )
    }

    pub fn bounds(&self) -> &RateBounds {
        &self.bounds
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    /// Rates at every node of `u`'s grid, without bounds checks.
    pub fn raw_rates(&self, u: &DensityProfile) -> RateSamples {
        let grid = u.grid();
        let n = grid.len();
        let x = grid.nodes();
        match &self.variant {
            Variant::Constant { mu0, g0, beta0 } => RateSamples {
                g: vec![*g0; n],
                mu: vec![*mu0; n],
                beta: vec![*beta0; n],
            },
            Variant::Counterexample { g } => {
                let f = counterexample_f_unchecked(u.l1_norm());
                RateSamples {
                    g: vec![*g; n],
                    mu: vec![*g; n],
                    beta: x.iter().map(|x| 2.0 * g * (-(-x).exp_m1()) * f).collect(),
                }
            }
            Variant::Hierarchical { mu0, b0 } => {
                let tail = tail_mass(grid, u);
                let (lo, hi) = (self.bounds.g_low, self.bounds.g_high);
                let beta = b0 / (1.0 + u.l1_norm());
                RateSamples {
                    g: tail.iter().map(|t| lo + (hi - lo) * (-t).exp()).collect(),
                    mu: vec![*mu0; n],
                    beta: vec![beta; n],
                }
            }
            Variant::Composite {
                growth,
                mortality,
                fertility,
            } => RateSamples {
                g: growth.sample(u),
                mu: mortality.sample(u),
                beta: fertility.sample(u),
            },
        }
    }

    /// Rates at every node, each checked against the declared bounds.
    pub fn sample_rates(&self, u: &DensityProfile) -> Result<RateSamples> {
        let rates = self.raw_rates(u);
        let x = u.grid().nodes();
        for (rate, values) in [
            (Rate::Growth, &rates.g),
            (Rate::Mortality, &rates.mu),
            (Rate::Fertility, &rates.beta),
        ] {
            for (xi, v) in x.iter().zip(values.iter()) {
                self.bounds.check(rate, *xi, *v)?;
            }
        }
        Ok(rates)
    }

    fn eval_at(&self, rate: Rate, x: f64, u: &DensityProfile) -> Result<f64> {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::Parameter(format!("size x must be >= 0, got {x}")));
        }
        let value = match (&self.variant, rate) {
            (Variant::Constant { g0, .. }, Rate::Growth) => *g0,
            (Variant::Constant { mu0, .. }, Rate::Mortality) => *mu0,
            (Variant::Constant { beta0, .. }, Rate::Fertility) => *beta0,
            (Variant::Counterexample { g }, Rate::Growth | Rate::Mortality) => *g,
            (Variant::Counterexample { g }, Rate::Fertility) => {
                2.0 * g * (-(-x).exp_m1()) * counterexample_f_unchecked(u.l1_norm())
            }
            (Variant::Hierarchical { .. }, Rate::Growth) => {
                let tail = tail_mass(u.grid(), u);
                let t = u.grid().interpolate(&tail, x);
                let (lo, hi) = (self.bounds.g_low, self.bounds.g_high);
                lo + (hi - lo) * (-t).exp()
            }
            (Variant::Hierarchical { mu0, .. }, Rate::Mortality) => *mu0,
            (Variant::Hierarchical { b0, .. }, Rate::Fertility) => b0 / (1.0 + u.l1_norm()),
            (Variant::Composite { growth, .. }, Rate::Growth) => growth.eval(x, u),
            (Variant::Composite { mortality, .. }, Rate::Mortality) => mortality.eval(x, u),
            (Variant::Composite { fertility, .. }, Rate::Fertility) => fertility.eval(x, u),
        };
        self.bounds.check(rate, x, value)
    }

    pub fn eval_g(&self, x: f64, u: &DensityProfile) -> Result<f64> {
        self.eval_at(Rate::Growth, x, u)
    }

    pub fn eval_mu(&self, x: f64, u: &DensityProfile) -> Result<f64> {
        self.eval_at(Rate::Mortality, x, u)
    }

    pub fn eval_beta(&self, x: f64, u: &DensityProfile) -> Result<f64> {
        self.eval_at(Rate::Fertility, x, u)
    }
}

/// `int_x^{x_max} u` at every node. Trapezoid panels keep it nonnegative for
/// any `u >= 0`.
pub(crate) fn tail_mass(grid: &Grid, u: &DensityProfile) -> Vec<f64> {
    grid.reverse_cumulative_trapezoid(u.values())
        .expect("profile sampled on its own grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Scheme};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn grid() -> Arc<Grid> {
        build_grid(40.0, 4001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared()
    }

    #[test]
    fn counterexample_f_values() {
        assert_relative_eq!(
            counterexample_f(1.0 / 6.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(counterexample_f(1.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_eq!(counterexample_f(0.0).unwrap(), 0.5);
        assert_eq!(counterexample_f(0.5).unwrap(), 2.0);
        assert_eq!(3.0 - 2.0 * 0.5, 2.0);
        assert!(matches!(counterexample_f(-0.1), Err(Error::Parameter(_))));
        assert!(counterexample_f(f64::NAN).is_err());
    }

    #[test]
    fn counterexample_f_is_continuous_at_breakpoints() {
        for a in [0.5, 1.25] {
            let left = counterexample_f(a).unwrap();
            let right = counterexample_f(a + 1e-15).unwrap();
            assert!(
                (left - right).abs() < 1e-12,
                "jump at {a}: {left} vs {right}"
            );
        }
        // Closed-form branch values at 5/4.
        assert!((0.5 * (1.25f64 - 1.25).exp() - (3.0 - 2.0 * 1.25)).abs() < 1e-12);
    }

    #[test]
    fn hierarchical_growth_limits() {
        let grid = grid();
        let m = ModelSpec::hierarchical(0.5, 1.0, 1.0, 2.0).unwrap();
        let zero = DensityProfile::zeros(grid.clone());
        for x in [0.0, 1.0, 7.3, 40.0] {
            assert_eq!(m.eval_g(x, &zero).unwrap(), 1.0);
        }
        let heavy = DensityProfile::from_fn(grid, |x| 1e3 * (-x).exp()).unwrap();
        let g0 = m.eval_g(0.0, &heavy).unwrap();
        assert!((g0 - 0.5).abs() < 1e-12, "g(0) = {g0}");
    }

    #[test]
    fn constant_rates() {
        let grid = grid();
        let m = ModelSpec::constant(0.7, 1.3, 0.4).unwrap();
        let u = DensityProfile::from_fn(grid, |x| (-x).exp()).unwrap();
        assert_eq!(m.eval_g(3.0, &u).unwrap(), 1.3);
        assert_eq!(m.eval_mu(3.0, &u).unwrap(), 0.7);
        assert_eq!(m.eval_beta(3.0, &u).unwrap(), 0.4);
    }

    #[test]
    fn counterexample_rates() {
        let grid = grid();
        let m = ModelSpec::counterexample(1.5).unwrap();
        let zero = DensityProfile::zeros(grid.clone());
        let u = DensityProfile::from_fn(grid, |x| 0.3 * (-x).exp()).unwrap();
        assert_eq!(m.eval_mu(2.0, &u).unwrap(), 1.5);
        assert_eq!(m.eval_beta(0.0, &u).unwrap(), 0.0);
        assert_eq!(m.eval_beta(0.0, &zero).unwrap(), 0.0);
        let x = 2.0f64;
        assert_relative_eq!(
            m.eval_beta(x, &zero).unwrap(),
            2.0 * 1.5 * (1.0 - (-x).exp()) * 0.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn hierarchical_fertility_at_zero() {
        let m = ModelSpec::hierarchical(0.5, 1.0, 1.0, 1.7).unwrap();
        let zero = DensityProfile::zeros(grid());
        assert_eq!(m.eval_beta(3.0, &zero).unwrap(), 1.7);
    }

    #[test]
    fn bounds_violation_is_reported() {
        let bounds = RateBounds::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let m = ModelSpec::new(
            bounds,
            Variant::Composite {
                growth: RateFormula::constant(1.0),
                mortality: RateFormula::constant(1.0),
                fertility: RateFormula {
                    base: 0.5,
                    up_amp: 2.0,
                    functional: Functional::Total,
                    ..RateFormula::constant(0.0)
                },
            },
        )
        .unwrap();
        let big = DensityProfile::from_fn(grid(), |x| 10.0 * (-x).exp()).unwrap();
        assert!(matches!(
            m.eval_beta(1.0, &big),
            Err(Error::BoundsViolation {
                rate: Rate::Fertility,
                ..
            })
        ));
        assert!(m.sample_rates(&big).is_err());
    }

    #[test]
    fn parameters_outside_bounds_are_rejected() {
        let b = RateBounds::new(1.0, 2.0, 1.0, 2.0, 1.0).unwrap();
        assert!(ModelSpec::new(
            b,
            Variant::Constant {
                mu0: 3.0,
                g0: 1.0,
                beta0: 0.5
            }
        )
        .is_err());
        assert!(ModelSpec::new(b, Variant::Counterexample { g: 1.0 }).is_err());
        assert!(RateBounds::new(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(RateBounds::new(2.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(RateBounds::new(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn envelope_norms_and_horizon() {
        let b = RateBounds::new(0.5, 2.0, 0.25, 3.0, 1.0).unwrap();
        assert_relative_eq!(b.lower_envelope_norm(), 0.5 / (2.0 * 3.0));
        assert_relative_eq!(b.upper_envelope_norm(), 2.0 / (0.5 * 0.25));
        let t = b.truncation_horizon(1e-10);
        assert_relative_eq!(b.upper_envelope_tail(t), 1e-10, max_relative = 1e-9);
        assert_relative_eq!(
            b.lower_envelope_integral(0.0, f64::INFINITY),
            b.lower_envelope_norm()
        );
    }
}

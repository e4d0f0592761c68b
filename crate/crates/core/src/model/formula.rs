use crate::error::{Error, Result};
use crate::grid::DensityProfile;

/// Scalar summary of the density that a composite rate depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// No dependence on `u`.
    None,
    /// `||u||_1`.
    Total,
    /// `int_x^inf u(y) dy`.
    Tail,
    /// `int_0^x u(y) dy`.
    Head,
    /// `int e^{-decay y} u(y) dy`.
    Weighted { decay: f64 },
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::None => "none",
            Functional::Total => "total",
            Functional::Tail => "tail",
            Functional::Head => "head",
            Functional::Weighted { .. } => "weighted",
        }
    }
}

/// `base + x_amp (1 - e^{-x_rate x}) + up_amp s/(1+s) + down_amp/(1+s)`
/// with `s = scale * functional(u)(x)`.
///
/// The `up` term rises and the `down` term falls as the population grows,
/// both saturating, so bounded rates with monotone crowding effects are easy
/// to write down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFormula {
    pub base: f64,
    pub x_amp: f64,
    pub x_rate: f64,
    pub up_amp: f64,
    pub down_amp: f64,
    pub scale: f64,
    pub functional: Functional,
}

impl RateFormula {
    pub fn constant(value: f64) -> Self {
        RateFormula {
            base: value,
            x_amp: 0.0,
            x_rate: 0.0,
            up_amp: 0.0,
            down_amp: 0.0,
            scale: 1.0,
            functional: Functional::None,
        }
    }

    pub(crate) fn validate(&self, which: &str) -> Result<()> {
        let vals = [
            self.base,
            self.x_amp,
            self.x_rate,
            self.up_amp,
            self.down_amp,
            self.scale,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "{which} formula has a non-finite coefficient"
            )));
        }
        if self.x_rate < 0.0 || self.scale < 0.0 {
            return Err(Error::Parameter(format!(
                "{which} formula needs x_rate >= 0 and scale >= 0"
            )));
        }
        if let Functional::Weighted { decay } = self.functional {
            if !(decay.is_finite() && decay >= 0.0) {
                return Err(Error::Parameter(format!(
                    "{which} formula weight decay must be >= 0, got {decay}"
                )));
            }
        }
        Ok(())
    }

    fn combine(&self, x: f64, s: f64) -> f64 {
        let s = self.scale * s;
        self.base
            + self.x_amp * (-(-self.x_rate * x).exp_m1())
            + self.up_amp * s / (1.0 + s)
            + self.down_amp / (1.0 + s)
    }

    fn functional_samples(&self, u: &DensityProfile) -> Vec<f64> {
        let grid = u.grid();
        let n = grid.len();
        match self.functional {
            Functional::None => vec![0.0; n],
            Functional::Total => vec![u.l1_norm(); n],
            Functional::Tail => super::tail_mass(grid, u),
            Functional::Head => grid
                .cumulative_trapezoid(u.values())
                .expect("profile sampled on its own grid"),
            Functional::Weighted { decay } => {
                let weighted: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .zip(u.values())
                    .map(|(x, v)| (-decay * x).exp() * v)
                    .collect();
                let total = grid.integrate(&weighted).expect("same grid");
                vec![total; n]
            }
        }
    }

    pub(crate) fn sample(&self, u: &DensityProfile) -> Vec<f64> {
        let s = self.functional_samples(u);
        u.grid()
            .nodes()
            .iter()
            .zip(&s)
            .map(|(x, s)| self.combine(*x, *s))
            .collect()
    }

    pub(crate) fn eval(&self, x: f64, u: &DensityProfile) -> f64 {
        let s = match self.functional {
            Functional::None => 0.0,
            Functional::Total => u.l1_norm(),
            Functional::Weighted { .. } => self.functional_samples(u)[0],
            Functional::Tail | Functional::Head => {
                u.grid().interpolate(&self.functional_samples(u), x)
            }
        };
        self.combine(x, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Scheme};
    use approx::assert_relative_eq;

    #[test]
    fn formula_terms() {
        let grid = build_grid(20.0, 2001, Scheme::UniformCorrected)
            .unwrap()
            .into_shared();
        let u = DensityProfile::from_fn(grid.clone(), |x| (-x).exp()).unwrap();
        let f = RateFormula {
            base: 1.0,
            x_amp: 0.5,
            x_rate: 2.0,
            up_amp: 0.3,
            down_amp: 0.2,
            scale: 2.0,
            functional: Functional::Total,
        };
        let s = 2.0 * u.l1_norm();
        let x = 0.7f64;
        let expected = 1.0 + 0.5 * (1.0 - (-1.4f64).exp()) + 0.3 * s / (1.0 + s) + 0.2 / (1.0 + s);
        assert_relative_eq!(f.eval(x, &u), expected, max_relative = 1e-14);

        let tail = RateFormula {
            functional: Functional::Tail,
            scale: 1.0,
            ..f
        };
        let samples = tail.sample(&u);
        // Node 700 sits at x = 7.
        let t = (-7.0f64).exp() - (-20.0f64).exp();
        let expected = 1.0 + 0.5 * (1.0 - (-14.0f64).exp()) + 0.3 * t / (1.0 + t) + 0.2 / (1.0 + t);
        assert_relative_eq!(samples[700], expected, max_relative = 1e-6);
        assert_relative_eq!(tail.eval(7.0, &u), samples[700], max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let mut f = RateFormula::constant(1.0);
        f.scale = -1.0;
        assert!(f.validate("g").is_err());
        let mut f = RateFormula::constant(f64::INFINITY);
        assert!(f.validate("g").is_err());
        f = RateFormula::constant(1.0);
        f.functional = Functional::Weighted { decay: -1.0 };
        assert!(f.validate("g").is_err());
    }
}

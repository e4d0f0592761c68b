//! Samples from the onion set `U = union over lambda > 0 of [lambda e1, lambda e2]`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RateBounds;
use crate::error::{Error, Result};
use crate::grid::{DensityProfile, Grid};

/// `u = lambda * v` with `e1 <= v <= e2` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct OnionSample {
    lambda: f64,
    v: DensityProfile,
}

impl OnionSample {
    pub fn new(bounds: &RateBounds, lambda: f64, v: DensityProfile) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "onion sample needs lambda > 0, got {lambda}"
            )));
        }
        for (i, (x, vi)) in v.grid().nodes().iter().zip(v.values()).enumerate() {
            let lo = bounds.lower_envelope(*x);
            let hi = bounds.upper_envelope(*x);
            if *vi < lo * (1.0 - 1e-12) || *vi > hi * (1.0 + 1e-12) {
                return Err(Error::Parameter(format!(
                    "profile value {vi} at node {i} (x = {x}) leaves [e1, e2] = [{lo}, {hi}]"
                )));
            }
        }
        Ok(OnionSample { lambda, v })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn v(&self) -> &DensityProfile {
        &self.v
    }

    /// The density `lambda * v`.
    pub fn u(&self) -> DensityProfile {
        self.v
            .scaled(self.lambda)
            .expect("lambda > 0 keeps u nonnegative")
    }
}

/// Shape of the interpolation weight between `e1` and `e2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileShape {
    Lower,
    Upper,
    Midpoint,
    /// Independent uniform weight at every node.
    Rough,
    /// `0.5 + 0.5 sin(k x + phi)` with random `k` and `phi`.
    Smooth,
}

/// Deterministic generator of profiles in `[e1, e2]`.
pub struct OnionSampler {
    bounds: RateBounds,
    grid: Arc<Grid>,
    rng: ChaCha8Rng,
}

impl OnionSampler {
    pub fn new(bounds: RateBounds, grid: Arc<Grid>, seed: u64) -> Self {
        OnionSampler {
            bounds,
            grid,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn profile(&mut self, shape: ProfileShape) -> DensityProfile {
        let theta: Vec<f64> = match shape {
            ProfileShape::Lower => vec![0.0; self.grid.len()],
            ProfileShape::Upper => vec![1.0; self.grid.len()],
            ProfileShape::Midpoint => vec![0.5; self.grid.len()],
            ProfileShape::Rough => (0..self.grid.len())
                .map(|_| self.rng.gen::<f64>())
                .collect(),
            ProfileShape::Smooth => {
                let k = self.rng.gen_range(0.1..3.0);
                let phi = self.rng.gen_range(0.0..std::f64::consts::TAU);
                self.grid
                    .nodes()
                    .iter()
                    .map(|x| 0.5 + 0.5 * (k * x + phi).sin())
                    .collect()
            }
        };
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(theta)
            .map(|(x, t)| {
                let lo = self.bounds.lower_envelope(*x);
                let hi = self.bounds.upper_envelope(*x);
                (lo + t * (hi - lo)).clamp(lo, hi)
            })
            .collect();
        DensityProfile::new(self.grid.clone(), values).expect("envelopes are positive")
    }

    /// One onion sample with the given `lambda` and shape.
    pub fn sample(&mut self, lambda: f64, shape: ProfileShape) -> OnionSample {
        let v = self.profile(shape);
        OnionSample { lambda, v }
    }

    /// `lambda` drawn log-uniformly from `[lo, hi]`, random rough or smooth shape.
    pub fn random(&mut self, lo: f64, hi: f64) -> OnionSample {
        let lambda = (self.rng.gen_range(lo.ln()..hi.ln())).exp();
        let shape = if self.rng.gen_bool(0.5) {
            ProfileShape::Rough
        } else {
            ProfileShape::Smooth
        };
        self.sample(lambda, shape)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// `lambda` in `{1e-3, 1e-2, ..., 1e3}` times the profiles `e1`, `e2`, their
/// midpoint and one rough and one smooth random profile.
pub fn standard_onion_samples(bounds: &RateBounds, grid: Arc<Grid>, seed: u64) -> Vec<OnionSample> {
    let mut sampler = OnionSampler::new(*bounds, grid, seed);
    let mut out = Vec::new();
    for p in -3..=3 {
        let lambda = 10f64.powi(p);
        for shape in [
            ProfileShape::Lower,
            ProfileShape::Upper,
            ProfileShape::Midpoint,
            ProfileShape::Rough,
            ProfileShape::Smooth,
        ] {
            out.push(sampler.sample(lambda, shape));
        }
    }
    out
}

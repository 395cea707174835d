use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation noise `M_n(t)` added to the clean reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    None,
    /// Unbounded zero-mean Gaussian.
    Gaussian { sigma: f64 },
    /// Gaussian clipped to `[-bound, bound]`; symmetric, so still zero mean.
    TruncatedGaussian { sigma: f64, bound: f64 },
    /// Scenario-defined estimator (the sensor packet counts).
    BinomialFeedback,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma.is_finite() && sigma >= 0.0) => {
                Err(Error::invalid("noise.sigma", format!("must be >= 0, got {sigma}")))
            }
            NoiseModel::TruncatedGaussian { sigma, bound } => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    Err(Error::invalid("noise.sigma", format!("must be >= 0, got {sigma}")))
                } else if !(bound.is_finite() && bound > 0.0) {
                    Err(Error::invalid("noise.bound", format!("must be > 0, got {bound}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// One additive draw. Returns 0 for `None` and `BinomialFeedback`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::None | NoiseModel::BinomialFeedback => 0.0,
            NoiseModel::Gaussian { sigma } => standard_normal(rng) * sigma,
            NoiseModel::TruncatedGaussian { sigma, bound } => (standard_normal(rng) * sigma).clamp(-bound, bound),
        }
    }
}

#[inline]
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").sample(rng)
}

//! Noise schedule and the deterministic first-order sampler update.
//!
//! Variance-exploding parameterization: a noisy latent is `x = x0 + sigma * e`.
//! The schedule holds `D + 1` sigmas, geometrically spaced from `sigma_max`
//! down to `sigma_min` over the first `D` entries, with a terminal exact zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    sigmas: Vec<f64>,
}

impl NoiseSchedule {
    /// Geometric schedule with `D` denoising steps. `D` must be even because
    /// the alternating orchestrator splits it exactly in half.
    pub fn geometric(steps: usize, sigma_max: f64, sigma_min: f64) -> Result<Self> {
        if steps < 2 || steps % 2 != 0 {
            return Err(Error::Config(format!(
                "step count must be even and >= 2, got {steps}"
            )));
        }
        if !(sigma_max > sigma_min && sigma_min > 0.0) {
            return Err(Error::Config(format!(
                "need sigma_max > sigma_min > 0, got {sigma_max} / {sigma_min}"
            )));
        }
        let mut sigmas = Vec::with_capacity(steps + 1);
        let ratio = sigma_min / sigma_max;
        for i in 0..steps {
            let t = i as f64 / (steps - 1) as f64;
            sigmas.push(sigma_max * ratio.powf(t));
        }
        sigmas.push(0.0);
        Ok(Self { sigmas })
    }

    /// Number of denoising steps D.
    pub fn steps(&self) -> usize {
        self.sigmas.len() - 1
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigmas[k]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigmas[0]
    }
}

/// One deterministic first-order update from `sigma_cur` to `sigma_next`:
/// `x0_hat + (sigma_next / sigma_cur) * (x - x0_hat)`. At `sigma_next = 0`
/// this returns `x0_hat` exactly.
pub fn sampler_step(x: &[f64], x0_hat: &[f64], sigma_cur: f64, sigma_next: f64) -> Result<Vec<f64>> {
    if sigma_next >= sigma_cur {
        return Err(Error::Scheduling(format!(
            "sampler_step requires sigma_next < sigma_cur, got {sigma_next} >= {sigma_cur}"
        )));
    }
    if x.len() != x0_hat.len() {
        return Err(Error::Shape(format!(
            "latent dims differ: {} vs {}",
            x.len(),
            x0_hat.len()
        )));
    }
    if sigma_next == 0.0 {
        return Ok(x0_hat.to_vec());
    }
    let ratio = sigma_next / sigma_cur;
    Ok(x
        .iter()
        .zip(x0_hat)
        .map(|(xi, x0i)| x0i + ratio * (xi - x0i))
        .collect())
}

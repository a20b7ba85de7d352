use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reconstruction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    /// Standard deviation of the Gaussian pre-blur, in pixels.
    pub blur_sigma: f64,
    /// Weight of the gradient-consistency term.
    pub alpha: f64,
    /// Weight of the map smoothness term.
    pub beta: f64,
    pub max_iters: usize,
    /// Stop once `(E_prev - E) / E_prev` drops below this.
    pub rel_tol: f64,
    /// First trial step of every backtracking line search.
    pub init_step: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            blur_sigma: 10.0,
            alpha: 1.0,
            beta: 0.1,
            max_iters: 500,
            rel_tol: 1e-6,
            init_step: 1.0,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.blur_sigma > 0.0 && self.blur_sigma.is_finite()) {
            return bad("blur_sigma must be positive");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be non-negative");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be non-negative");
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol must be positive");
        }
        if !(self.init_step > 0.0 && self.init_step.is_finite()) {
            return bad("init_step must be positive");
        }
        Ok(())
    }
}

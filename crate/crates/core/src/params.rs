use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::fraclap::FracOrder;

/// Coefficients of `∂ₜθ = νΔθ + λ|∇θ|^p + μ(−Δ)^α θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub nu: f64,
    pub alpha: f64,
    pub p: f64,
    pub mu: f64,
    pub lambda: f64,
    pub dim: usize,
}

impl PdeParams {
    pub fn new(nu: f64, alpha: f64, p: f64, mu: f64, lambda: f64, dim: usize) -> Result<Self> {
        let params = Self {
            nu,
            alpha,
            p,
            mu,
            lambda,
            dim,
        };
        params.validate()?;
        Ok(params)
    }

    /// Range checks. `μ = 0` is accepted so the local (viscous
    /// Hamilton–Jacobi) and pure heat sub-cases stay expressible.
    pub fn validate(&self) -> Result<()> {
        check_range("nu", self.nu, self.nu > 0.0, "(0, inf)")?;
        check_range("alpha", self.alpha, self.alpha > 0.0 && self.alpha < 0.5, "(0, 1/2)")?;
        check_range("p", self.p, self.p >= 1.0, "[1, inf)")?;
        check_range("mu", self.mu, self.mu >= 0.0, "[0, inf)")?;
        check_range("lambda", self.lambda, true, "(-inf, inf)")?;
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::OutOfRange {
                name: "dim",
                value: self.dim as f64,
                range: "{1, 2}",
            });
        }
        Ok(())
    }

    pub fn frac_order(&self) -> Result<FracOrder> {
        FracOrder::new(self.dim, self.alpha)
    }

    /// Copy with a different nonlinearity, handy for sweeps.
    pub fn with_nonlinearity(&self, lambda: f64, p: f64) -> Self {
        Self { lambda, p, ..*self }
    }
}

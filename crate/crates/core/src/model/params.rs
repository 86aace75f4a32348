use crate::error::{Error, Result};

/// Lamé constants and angular frequency, with the derived compressional and
/// shear wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    pub k_p: f64,
    pub k_s: f64,
}

impl ElasticParams {
    /// `k_p = ω/√(λ+2μ)`, `k_s = ω/√μ`.
    pub fn new(lambda: f64, mu: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("mu", mu), ("omega", omega)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let k_p = omega / (lambda + 2.0 * mu).sqrt();
        let k_s = omega / mu.sqrt();
        Ok(Self {
            lambda,
            mu,
            omega,
            k_p,
            k_s,
        })
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.lambda, self.mu, omega)
    }
}

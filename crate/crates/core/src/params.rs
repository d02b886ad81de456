use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of internal vertices and sleep rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_sites: u32,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(n_sites: u32, lambda: f64) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParams("n_sites must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive and finite, got {lambda}")));
        }
        Ok(Self { n_sites, lambda })
    }

    pub fn n(&self) -> f64 {
        self.n_sites as f64
    }

    pub fn p_sleep(&self) -> f64 {
        self.lambda / (1.0 + self.lambda)
    }

    /// Critical density.
    pub fn rho_c(&self) -> f64 {
        self.p_sleep()
    }

    /// Coefficient of the sqrt(N log N) shift.
    pub fn a(&self) -> f64 {
        self.lambda.sqrt() / (1.0 + self.lambda)
    }

    /// sqrt(N log N), the window scale.
    pub fn window_scale(&self) -> f64 {
        let n = self.n();
        (n * n.ln().max(0.0)).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0, 1.0).is_err());
        assert!(ModelParams::new(3, 0.0).is_err());
        assert!(ModelParams::new(3, f64::NAN).is_err());
        assert!(ModelParams::new(3, f64::INFINITY).is_err());
    }

    #[test]
    fn constants() {
        let p = ModelParams::new(10, 4.0).unwrap();
        assert!((p.rho_c() - 0.8).abs() < 1e-15);
        assert!((p.a() - 0.4).abs() < 1e-15);
    }
}

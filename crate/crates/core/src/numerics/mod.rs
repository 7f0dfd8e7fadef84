//! Special functions and half-line quadrature used by every numeric route.

mod quadrature;
mod special;

pub use quadrature::{
    integrate_halfline, integrate_halfline_from, integrate_interval, kronrod_rule, Integral,
    KRONROD_POINTS,
};
pub use special::{
    hyp1f1_terminating, ln_factorial, ln_gamma, ln_hyp1f1_terminating, pochhammer,
    tricomi_u_oracle, SignedLn,
};

use crate::error::{Error, Result};

/// Truncation and quadrature settings shared by all numeric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesQuadConfig {
    /// Hard cap on the series index.
    pub k_max: usize,
    /// Absolute tolerance on the neglected tail of a series.
    pub tail_tol: f64,
    /// Relative tolerance for adaptive quadrature.
    pub quad_rel_tol: f64,
    /// Maximum number of interval bisections per quadrature call.
    pub quad_max_subdiv: usize,
}

impl Default for SeriesQuadConfig {
    fn default() -> Self {
        Self {
            k_max: 20_000,
            tail_tol: 1e-12,
            quad_rel_tol: 1e-10,
            quad_max_subdiv: 1_000,
        }
    }
}

impl SeriesQuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        if !(self.tail_tol > 0.0 && self.tail_tol.is_finite()) {
            return Err(Error::Domain(format!(
                "tail_tol must be positive, got {}",
                self.tail_tol
            )));
        }
        if !(self.quad_rel_tol > 0.0 && self.quad_rel_tol.is_finite()) {
            return Err(Error::Domain(format!(
                "quad_rel_tol must be positive, got {}",
                self.quad_rel_tol
            )));
        }
        if self.quad_max_subdiv < 1 {
            return Err(Error::Domain("quad_max_subdiv must be at least 1".into()));
        }
        Ok(())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

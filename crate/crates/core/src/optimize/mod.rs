//! Minimisation primitives: 1-D line searches, small-K constrained
//! minimisation over score sets, and simplex grids.

mod line;
mod scores;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use line::{golden_section, minimize_1d, minimize_scan};
pub use scores::{minimize_over_scores, minimize_over_scores_from, Constraint};
pub use simplex::{simplex_grid, simplex_grid_interior};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Objective-scale tolerance.
    pub tol: f64,
    /// Maximum number of descent sweeps per start.
    pub max_iters: usize,
    pub restarts: usize,
    /// Unbounded score sets are clipped to [−box_radius, box_radius]^K.
    pub box_radius: f64,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings { tol: 1e-8, max_iters: 10_000, restarts: 16, box_radius: 50.0, seed: 0 }
    }
}

impl OptimizerSettings {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Domain("optimizer tol must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Domain("optimizer needs at least one restart".into()));
        }
        if !(self.box_radius > 0.0) {
            return Err(Error::Domain("box radius must be positive".into()));
        }
        Ok(())
    }

    /// Seed of the random stream with the given index.
    pub fn stream(&self, index: u64) -> u64 {
        self.seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub minimizer: Vec<f64>,
    pub value: f64,
    /// Improvement achieved by the last sweep (≥ 0).
    pub residual: f64,
    pub converged: bool,
    /// The objective went below −1e12 or decreases without bound along the
    /// ray through a box-boundary minimiser.
    pub unbounded: bool,
    /// The minimiser touches the artificial box.
    pub boundary: bool,
}

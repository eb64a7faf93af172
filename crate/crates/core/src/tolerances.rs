use serde::{Deserialize, Serialize};

use crate::maslov::{MaslovOptions, DEFAULT_ARC};
use crate::path::EMBEDDING_GRID;
use crate::quadratic::NULLITY_TOLERANCE;

/// Numerical knobs that a job may override.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative nullity tolerance for form indices.
    pub null: f64,
    /// Embeddedness sweep resolution, points per unit time.
    pub grid: usize,
    /// Left end of the `2π` window used for the Maslov step function.
    pub window_base: f64,
    /// Maximal phase travel per factor of a based family.
    pub arc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            null: NULLITY_TOLERANCE,
            grid: EMBEDDING_GRID,
            window_base: 0.0,
            arc: DEFAULT_ARC,
        }
    }
}

impl Tolerances {
    pub fn maslov(&self) -> MaslovOptions {
        MaslovOptions {
            tol: self.null,
            arc: self.arc,
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::conformable::Alpha;
use crate::error::{Error, Result};
use crate::jet::ZERO_GUARD;

/// A point `(q¹, q², q³, p₁, p₂, p₃)` of the Cartesian phase space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: [f64; 3],
    pub p: [f64; 3],
}

impl PhasePoint {
    pub const DIM: usize = 6;

    pub fn new(q: [f64; 3], p: [f64; 3]) -> Self {
        Self { q, p }
    }

    pub fn from_array(x: [f64; 6]) -> Self {
        Self {
            q: [x[0], x[1], x[2]],
            p: [x[3], x[4], x[5]],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.q[0], self.q[1], self.q[2], self.p[0], self.p[1], self.p[2]]
    }

    /// For `alpha != 1` every coordinate must be nonzero; the deformed
    /// weights degenerate on the coordinate hyperplanes.
    pub fn check_interior(&self, alpha: Alpha) -> Result<()> {
        if alpha.is_classical() {
            return Ok(());
        }
        for (index, value) in self.to_array().into_iter().enumerate() {
            if !value.is_finite() || value.abs() < ZERO_GUARD {
                return Err(Error::OffOrthant { index, value });
            }
        }
        Ok(())
    }
}

impl From<[f64; 6]> for PhasePoint {
    fn from(x: [f64; 6]) -> Self {
        Self::from_array(x)
    }
}

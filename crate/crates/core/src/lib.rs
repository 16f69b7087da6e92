//! Conformable (α-deformed) Poisson geometry on `T*ℝ³` and the Kepler
//! problem, with residual-based verification of the structural identities.

pub mod action_angle;
pub mod conformable;
pub mod equatorial;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod jet;
pub mod kepler;
pub mod observable;
pub mod phase;
pub mod poisson;
pub mod report;
pub mod sampling;
pub mod symmetry;

pub use conformable::Alpha;
pub use error::{Error, Result};
pub use phase::PhasePoint;
pub use report::{Suite, VerificationReport};

use thiserror::Error;

/// Errors raised by the conformable kernels, the geometric engine and the
/// orbit integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A conformable weight `|x|^beta` with `beta <= 0` was requested at `x = 0`.
    #[error("singular conformable weight: |x|^{beta} at x = {x}")]
    SingularWeight { x: f64, beta: f64 },

    /// A point lies on (or too close to) a coordinate hyperplane where the
    /// deformed structure degenerates.
    #[error("point is off the orthant interior: coordinate {index} = {value}")]
    OffOrthant { index: usize, value: f64 },

    /// The deformation order is outside the range accepted by an operation.
    #[error("unsupported deformation order alpha = {alpha}: {reason}")]
    Alpha { alpha: f64, reason: &'static str },

    /// Generic domain violation with a description.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Kepler energy vanishes (common boundary of the bound and
    /// scattering families) so the scaled Runge-Lenz-Pauli vector is undefined.
    #[error("zero-energy point: |H| = {0:e} is inside the dead zone")]
    ZeroEnergy(f64),

    /// The action matrix `R = [[J1, J2], [4 J2, J1]]` is singular.
    #[error("singular action matrix: det R = {0:e}")]
    SingularR(f64),

    /// Array shapes disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A result came out non-finite.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Invalid input to the integrator or another routine.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("ellipticity violated at {location}: {reason}")]
    Ellipticity { location: String, reason: String },

    #[error("source term below c0 at {location}: f = {value}, c0 = {c0}")]
    SourceBelowBound { location: String, value: f64, c0: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("ball of radius {radius} around the center leaves the admissible domain (limit {limit})")]
    RadiusTooLarge { radius: f64, limit: f64 },

    #[error("center is not a singular free-boundary point: {reason}")]
    NotSingular { reason: String },

    #[error("complementarity solver did not converge: residual {residual} after {iterations} sweeps")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("epiperimetric datum too far from the model: distance {distance} > delta {delta}")]
    DatumTooFar { distance: f64, delta: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

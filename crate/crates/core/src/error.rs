use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or configuration field violates its constraint.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error(
        "quadrature did not converge on [{lower}, {upper}]: achieved error {achieved:.3e}, requested {requested:.3e}"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        value: f64,
        achieved: f64,
        requested: f64,
    },

    /// No AP count up to the cap satisfies a design target.
    #[error("no AP count up to {n_max} meets the target; best value {best_value:.6} at N = {best_n_aps}")]
    Infeasible {
        n_max: u32,
        best_n_aps: u32,
        best_value: f64,
    },

    /// The least-squares system has fewer independent rows than unknowns.
    #[error("rank-deficient fit: {distinct} distinct abscissae for degree {degree}")]
    RankDeficient { distinct: usize, degree: usize },

    /// A simulated user coincides with an access point.
    #[error("degenerate realization: serving distance is zero")]
    DegenerateRealization,
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors produced by numerical routines rather than input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature { .. } | Error::RankDeficient { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

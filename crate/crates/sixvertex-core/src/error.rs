use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the numerical pipelines.
///
/// Variants split into two families: input problems (`Domain`, `Dimension`,
/// `Range`, `Feasibility`) and solver problems (everything else). See
/// [`Error::is_input_error`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the documented domain.
    Domain(String),
    /// A vector or matrix had the wrong size.
    Dimension { expected: usize, found: usize },
    /// A logarithm or kernel was evaluated on its pole.
    Singularity(String),
    /// An iterative method ran out of iterations.
    Iteration { method: &'static str, iterations: usize, residual: f64 },
    /// Newton continuation could not reach the target.
    Continuation(String),
    /// Two Bethe roots collided.
    Degeneracy(String),
    /// The contour came too close to a kernel pole.
    ContourDeformation { distance: f64 },
    /// A function jumped between sheets along a contour.
    Branch { index: usize, jump: f64 },
    /// Nyström matrix too ill-conditioned for the node count.
    Resolution { condition: f64 },
    /// Endpoint density vanished: the point sits on a regime boundary.
    BoundaryOfRegime { rho: f64 },
    /// A query fell outside a tabulated range.
    Range(String),
    /// A field left the disordered region during evolution.
    RegimeExit { x_index: usize, y: f64, detail: String },
    /// Boundary data admit no height function in the gradient box.
    Feasibility(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Dimension { .. } | Error::Range(_) | Error::Feasibility(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Dimension { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Singularity(m) => write!(f, "singularity: {m}"),
            Error::Iteration { method, iterations, residual } => write!(
                f,
                "{method} did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::Continuation(m) => write!(f, "continuation failed: {m}"),
            Error::Degeneracy(m) => write!(f, "degenerate roots: {m}"),
            Error::ContourDeformation { distance } => {
                write!(f, "contour within {distance:.3e} of a kernel pole")
            }
            Error::Branch { index, jump } => {
                write!(f, "branch jump of {jump:.3} at contour node {index}")
            }
            Error::Resolution { condition } => write!(
                f,
                "Nystrom matrix condition number {condition:.3e}; increase the node count"
            ),
            Error::BoundaryOfRegime { rho } => {
                write!(f, "endpoint density {rho:.3e} vanishes: boundary of the regime")
            }
            Error::Range(m) => write!(f, "out of range: {m}"),
            Error::RegimeExit { x_index, y, detail } => {
                write!(f, "left the disordered region at x index {x_index}, y = {y}: {detail}")
            }
            Error::Feasibility(m) => write!(f, "infeasible boundary data: {m}"),
        }
    }
}

impl core::error::Error for Error {}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn input_errors_are_classified() {
        assert!(Error::Domain("x".into()).is_input_error());
        assert!(Error::Range("x".into()).is_input_error());
        assert!(!Error::Continuation("x".into()).is_input_error());
        assert!(!Error::Resolution { condition: 1e12 }.is_input_error());
    }

    #[test]
    fn display_mentions_details() {
        let e = Error::Dimension { expected: 3, found: 4 };
        assert!(e.to_string().contains("expected 3"));
    }
}

use num_complex::Complex64;
use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants fall into two groups: input errors (bad parameters, malformed
/// descriptors) and numerical failures (no cut ray, no convergence, etc.).
/// [`Error::is_numerical`] tells them apart, which the CLI uses to pick an
/// exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("value at z = {0} overflows the direct representation; iterate through BigPoint instead")]
    Overflow(Complex64),

    #[error("no axis ray avoids the tracts of this map")]
    NoCutRay,

    #[error("point {0} is not in any fundamental domain")]
    NotInDomain(Complex64),

    #[error("point is not in a tract")]
    NotInTract,

    #[error("point {0} lies outside G_K minus the cut curve")]
    OutsideDomain(Complex64),

    #[error("no doubling threshold found below r_max = {r_max}")]
    NoThreshold { r_max: f64 },

    #[error("point left every representable regime")]
    Indeterminate,

    #[error("no escape-radius witness found below the cap")]
    NoWitness,

    #[error("no sample lies in the shell |z| >= {radius}")]
    EmptyShell { radius: f64 },

    #[error("pullback polishing diverged at t = {t} after {iterations} iterations")]
    PullbackDivergence { t: f64, iterations: usize },

    #[error("inverse branch for digit {digit} leaves its fundamental domain (t = {t})")]
    AddressInfeasible { digit: i64, t: f64 },

    #[error("point {0} could not be polished to a periodic point")]
    NotPeriodic(Complex64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter(_) | Error::Parse(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

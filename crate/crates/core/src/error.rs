use thiserror::Error;

/// Errors produced by the solvers and their building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("factor does not reproduce the seminorm matrix (relative error {0:.3e})")]
    FactorMismatch(f64),

    #[error("gradient not in image of seminorm (relative residual {0:.3e})")]
    NotInImage(f64),

    #[error("matrices do not share a kernel (relative leak {0:.3e})")]
    KernelMismatch(f64),

    #[error("non-finite input")]
    NonFinite,

    #[error("no finite QSC constant for this objective")]
    NoQscConstant,

    #[error("reference oracle is desk-scale only (dimension {0} > 3)")]
    ReferenceTooLarge(usize),

    #[error("query norm {norm:.3e} outside the domain ball of radius {radius:.3e}")]
    OutsideDomain { norm: f64, radius: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("iteration budget exceeded in {routine} after {iterations} iterations")]
    BudgetExceeded {
        routine: &'static str,
        iterations: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

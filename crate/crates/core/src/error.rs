use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A truncated series operation produced an accuracy window that does
    /// not contain exponent 0.
    #[error("window underflow in {op}: resulting window [{lo}, {hi}] does not contain 0")]
    WindowUnderflow { op: &'static str, lo: i64, hi: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("multiplier is not invertible on its window: {0}")]
    SingularMultiplier(String),

    #[error(
        "section fails its functional equation: residual {residual:e} exceeds tolerance {tol:e}"
    )]
    InvalidSection { residual: f64, tol: f64 },

    #[error("covector d(theta_-{index}) is not admissible: pairing with the class is {value:e} (tolerance {tol:e})")]
    InvalidCovector { index: usize, value: f64, tol: f64 },

    #[error("internal consistency check failed ({what}): residual {residual:e}")]
    InternalConsistency { what: &'static str, residual: f64 },

    #[error("sub-bundle search did not converge at degree {degree}: best c = {best_c}, relative sigma_min = {best_rho:e}")]
    NonConvergence {
        degree: i64,
        best_c: Complex64,
        best_rho: f64,
    },

    #[error("bracket comparison failed: ratios are not constant (max relative deviation {max_deviation:e})\n{ratio_table}")]
    ComparisonFailure {
        max_deviation: f64,
        ratio_table: String,
    },
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::InvalidSection { .. }
                | Error::InvalidCovector { .. }
                | Error::WindowUnderflow { .. }
        )
    }
}

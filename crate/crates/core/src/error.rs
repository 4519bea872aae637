use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("mode index {0} repeated")]
    RepeatedIndex(usize),

    #[error("invalid Gaussian state: {0}")]
    InvalidState(String),

    #[error("matrix is not symplectic (residual {residual:e} > {tol:e})")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("transform is not canonical (residual {residual:e} > {tol:e})")]
    NotCanonical { residual: f64, tol: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    /// Requested more clones-side amplitude than available inputs can
    /// support without amplification, i.e. `M < N`.
    #[error("attenuation regime: M = {m_clones} < N = {n_inputs}")]
    Attenuation { n_inputs: u32, m_clones: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {restarts} restarts (best KKT residual {residual:e})")]
    NonConvergence { restarts: usize, residual: f64 },

    #[error("mode role mismatch: {0}")]
    RoleMismatch(String),
}

impl Error {
    /// Domain errors are caller mistakes (bad configuration); everything else
    /// is either numerical failure or an internal inconsistency.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Attenuation { .. }
                | Error::InvalidDimension(_)
                | Error::IndexOutOfRange { .. }
                | Error::RepeatedIndex(_)
        )
    }
}

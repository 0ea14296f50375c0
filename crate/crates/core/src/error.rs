use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unsupported quadrature size {0}")]
    UnsupportedQuadrature(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inadmissible state {0:?}")]
    Inadmissible(Vec<f64>),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("predictor did not converge at tau={tau:e} after {iterations} iterations (last update {residual:e})")]
    PredictorDivergence {
        tau: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("in cell {cell}")]
    InCell {
        cell: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_cell(self, cell: usize) -> Self {
        Error::InCell {
            cell,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

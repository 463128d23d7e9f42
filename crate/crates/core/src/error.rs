use thiserror::Error;

use crate::calibration::StepRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no factors")]
    NoFactors,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid dimension {0}: expected a power of two")]
    InvalidDimension(usize),
    #[error("step too large: dt = {dt} ns exceeds ramp/10 = {limit} ns")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("pulse too short for ramps: effective duration {effective} ns < ramp {ramp} ns")]
    PulseTooShort { effective: f64, ramp: f64 },
    #[error("no oscillation")]
    NoOscillation,
    #[error("non-rotational dynamics (fit residual {0:.3e})")]
    NonRotational(f64),
    #[error("unphysical dephasing: T2_echo = {t2_echo} us exceeds 2*T1 = {limit} us")]
    UnphysicalDephasing { t2_echo: f64, limit: f64 },
    #[error("non-invertible readout on qubit {0}")]
    NonInvertibleReadout(usize),
    #[error("calibration did not converge after {iterations} outer iterations")]
    NotConverged {
        iterations: usize,
        history: Box<Vec<StepRecord>>,
    },
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("zero reference fidelity for Pauli channel {0}")]
    ZeroReference(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

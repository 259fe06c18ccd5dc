//! Near-optimal channel fidelity of quantum error correction codes.
//!
//! The pipeline is: build a [`codes::Code`] and a [`noise::NoiseChannel`],
//! assemble the QEC matrix with [`qecmat::build_qec_matrix`], then evaluate
//! [`fidelity::near_optimal_fidelity`]. The transpose-channel value brackets
//! the optimal recovery fidelity from both sides; [`recovery_sdp`] solves for
//! the optimum directly on small instances, and [`analytic`] carries closed
//! forms for the thermodynamic and GKP codes.

pub mod analytic;
pub mod codes;
pub mod fidelity;
pub mod hilbert;
pub mod noise;
pub mod qecmat;
pub mod recovery_sdp;

pub use num_complex::Complex64;

pub use codes::{Code, CodeFamily};
pub use fidelity::{FidelityReport, FidelityMethod};
pub use hilbert::ComplexMatrix;
pub use noise::{KrausOp, NoiseChannel};
pub use qecmat::QecMatrix;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("truncation criterion unmet: {0}")]
    Truncation(String),
    #[error("overlap matrix is singular (min eigenvalue {0:.3e})")]
    SingularOverlap(f64),
    #[error("problem too large for the SDP solver: d_L·N = {0} > {1}")]
    TooLarge(usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

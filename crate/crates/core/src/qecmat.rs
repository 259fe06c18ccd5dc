//! The QEC matrix `M_{[μl],[νk]} = ⟨μ_L|N_l†N_k|ν_L⟩`, the Knill–Laflamme
//! test, and the overlap correction for non-orthonormal codewords.
//!
//! Composite indices are logical-major: `[μl] = μ·N_K + l`.

use crate::codes::{overlap_inverse_sqrt, Code};
use crate::hilbert::{frobenius_norm, partial_trace_logical, ComplexMatrix};
use crate::noise::NoiseChannel;
use crate::{Error, Result};

pub const KL_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct QecMatrix {
    pub d_l: usize,
    pub n_kraus: usize,
    pub data: ComplexMatrix,
    /// Code and channel labels.
    pub source: (String, String),
}

impl QecMatrix {
    pub fn from_data(d_l: usize, n_kraus: usize, data: ComplexMatrix) -> Result<Self> {
        let n = d_l * n_kraus;
        if data.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "QEC matrix is {:?}, expected {n}x{n}",
                data.shape()
            )));
        }
        let defect = data.hermiticity_defect();
        if defect > 1e-10 * frobenius_norm(&data).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { d_l, n_kraus, data, source: (String::new(), String::new()) })
    }

    pub fn dim(&self) -> usize {
        self.d_l * self.n_kraus
    }

    /// `Tr_L M`, an `N_K × N_K` matrix.
    pub fn partial_trace(&self) -> ComplexMatrix {
        partial_trace_logical(&self.data, self.d_l, self.n_kraus).expect("shape checked on construction")
    }

    /// Same matrix with `data` replaced; shape must be preserved.
    pub fn with_data(&self, data: ComplexMatrix) -> Result<Self> {
        let mut out = Self::from_data(self.d_l, self.n_kraus, data)?;
        out.source = self.source.clone();
        Ok(out)
    }
}

/// Columns `N_k|ν_L⟩` in composite order, an `out_dim × d_L·N_K` matrix.
pub fn error_vectors(code: &Code, channel: &NoiseChannel) -> Result<ComplexMatrix> {
    if code.physical_dim() != channel.in_dim() {
        return Err(Error::DimensionMismatch(format!(
            "code lives in {} dimensions, channel acts on {}",
            code.physical_dim(),
            channel.in_dim()
        )));
    }
    let d_l = code.logical_dim();
    let words: Vec<_> = (0..d_l).map(|mu| code.codeword(mu)).collect();
    let mut columns = Vec::with_capacity(d_l * channel.n_kraus());
    for word in &words {
        for k in &channel.kraus {
            columns.push(k.apply(word));
        }
    }
    ComplexMatrix::from_columns(&columns)
}

/// Gram matrix of the error vectors.
pub fn build_qec_matrix(code: &Code, channel: &NoiseChannel) -> Result<QecMatrix> {
    let v = error_vectors(code, channel)?;
    let data = v.adjoint_mul(&v).hermitian_part();
    let mut m = QecMatrix::from_data(code.logical_dim(), channel.n_kraus(), data)?;
    m.source = (code.family.to_string(), channel.label.clone());
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct KlCheck {
    pub is_exact: bool,
    /// `Tr_L M / d_L`.
    pub a: ComplexMatrix,
    /// `‖M − I_L ⊗ A‖_F`.
    pub residual: f64,
}

pub fn kl_check(m: &QecMatrix, tol: f64) -> KlCheck {
    let a = m.partial_trace().scale(1.0 / m.d_l as f64);
    let residual = frobenius_norm(&(&m.data - &ComplexMatrix::identity(m.d_l).kron(&a)));
    KlCheck { is_exact: residual <= tol, a, residual }
}

/// `(m^{−1} ⊗ I_{N_K})·M`.
pub fn overlap_correct(m: &QecMatrix, overlap: &ComplexMatrix) -> Result<ComplexMatrix> {
    if overlap.shape() != (m.d_l, m.d_l) {
        return Err(Error::DimensionMismatch("overlap matrix does not match d_L".into()));
    }
    let inv_sqrt = overlap_inverse_sqrt(overlap)?;
    let inv = &inv_sqrt * &inv_sqrt;
    Ok(&inv.kron(&ComplexMatrix::identity(m.n_kraus)) * &m.data)
}

/// `(m^{−1/2} ⊗ I)·M·(m^{−1/2} ⊗ I)`, Hermitian and similar to [`overlap_correct`].
pub fn overlap_symmetrized(m: &QecMatrix, overlap: &ComplexMatrix) -> Result<QecMatrix> {
    if overlap.shape() != (m.d_l, m.d_l) {
        return Err(Error::DimensionMismatch("overlap matrix does not match d_L".into()));
    }
    let w = overlap_inverse_sqrt(overlap)?.kron(&ComplexMatrix::identity(m.n_kraus));
    m.with_data((&(&w * &m.data) * &w).hermitian_part())
}

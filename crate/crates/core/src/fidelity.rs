//! Near-optimal channel fidelity `F̃ = ‖Tr_L √M‖_F² / d_L²`, its perturbative
//! expansion, and the transpose-channel recovery that attains it.
//!
//! The optimal fidelity satisfies `F̃ ≤ F_opt ≤ (1 + F̃)/2`.

use std::fmt;

use crate::codes::Code;
use crate::hilbert::{
    c64, frobenius_norm, hadamard, herm_eig, partial_trace_logical, psd_pinv, psd_pinv_sqrt, psd_sqrt_from_eig,
    ComplexMatrix, DEFAULT_CUTOFF,
};
use crate::noise::NoiseChannel;
use crate::qecmat::{build_qec_matrix, error_vectors, overlap_symmetrized, QecMatrix};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FidelityMethod {
    Exact,
    Nonorthonormal,
    PerturbativeDiag,
    PerturbativeUnitary,
}

impl fmt::Display for FidelityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityMethod::Exact => "exact",
            FidelityMethod::Nonorthonormal => "nonorthonormal",
            FidelityMethod::PerturbativeDiag => "perturbative-diag",
            FidelityMethod::PerturbativeUnitary => "perturbative-unitary",
        })
    }
}

/// How the correctable part `D` of the QEC matrix is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PerturbativeMode {
    /// `D` = diagonal of `Tr_L M / d_L`, no rotation.
    DiagTruncation,
    /// Kraus labels rotated so that `Tr_L M / d_L` is diagonal.
    UnitaryRotation,
}

impl PerturbativeMode {
    pub fn method(self) -> FidelityMethod {
        match self {
            PerturbativeMode::DiagTruncation => FidelityMethod::PerturbativeDiag,
            PerturbativeMode::UnitaryRotation => FidelityMethod::PerturbativeUnitary,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub near_optimal: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
    pub perturbative_infidelity: Option<f64>,
    pub method: FidelityMethod,
    /// Eigen-directions of `M` discarded by the rank cutoff.
    pub dropped_subspaces: usize,
}

impl FidelityReport {
    pub fn from_fidelity(near_optimal: f64, method: FidelityMethod) -> Self {
        let f = near_optimal.clamp(0.0, 1.0);
        Self {
            near_optimal: f,
            bound_lo: f,
            bound_hi: (1.0 + f) / 2.0,
            perturbative_infidelity: None,
            method,
            dropped_subspaces: 0,
        }
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.near_optimal
    }

    /// Whether `f_opt` lies in `[bound_lo − tol, bound_hi + tol]`.
    pub fn brackets(&self, f_opt: f64, tol: f64) -> bool {
        self.bound_lo - tol <= f_opt && f_opt <= self.bound_hi + tol
    }
}

fn near_optimal_raw(m: &QecMatrix) -> Result<(f64, usize)> {
    let eig = herm_eig(&m.data)?;
    let scale = eig.max_eigenvalue().abs().max(eig.min_eigenvalue().abs());
    let dropped = eig.eigenvalues.iter().filter(|&&l| l <= DEFAULT_CUTOFF * scale).count();
    let root = psd_sqrt_from_eig(&eig, DEFAULT_CUTOFF)?;
    let t = partial_trace_logical(&root, m.d_l, m.n_kraus)?;
    let d = m.d_l as f64;
    Ok((frobenius_norm(&t).powi(2) / (d * d), dropped))
}

/// `F̃ = ‖Tr_L √M‖_F² / d_L²` for orthonormal codewords.
pub fn near_optimal_fidelity(m: &QecMatrix) -> Result<FidelityReport> {
    let (f, dropped) = near_optimal_raw(m)?;
    let mut report = FidelityReport::from_fidelity(f, FidelityMethod::Exact);
    report.dropped_subspaces = dropped;
    Ok(report)
}

/// `F̃ = ‖Tr_L √((m^{−1}⊗I)M)‖_F² / d_L²`, evaluated through the Hermitian
/// similar matrix `(m^{−1/2}⊗I) M (m^{−1/2}⊗I)`.
pub fn near_optimal_fidelity_nonorthonormal(m: &QecMatrix, overlap: &ComplexMatrix) -> Result<FidelityReport> {
    let sym = overlap_symmetrized(m, overlap)?;
    let (f, dropped) = near_optimal_raw(&sym)?;
    let mut report = FidelityReport::from_fidelity(f, FidelityMethod::Nonorthonormal);
    report.dropped_subspaces = dropped;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct PerturbativeParts {
    pub d_l: usize,
    pub mode: PerturbativeMode,
    /// Retained diagonal of `D`.
    pub d: Vec<f64>,
    /// Kraus indices (after any rotation) kept by the cutoff.
    pub kept: Vec<usize>,
    /// `M − I_L ⊗ D` on the kept indices.
    pub delta_m: ComplexMatrix,
    /// `1/(√D_l + √D_k)` on the kept indices, `N_K' × N_K'`.
    pub f_of_d: ComplexMatrix,
}

impl PerturbativeParts {
    fn weighted_residual(&self) -> ComplexMatrix {
        let weights = ComplexMatrix::from_fn(self.d_l, self.d_l, |_, _| c64(1.0, 0.0)).kron(&self.f_of_d);
        hadamard(&weights, &self.delta_m).expect("shapes agree by construction")
    }
}

/// Splits `M = I_L ⊗ D + ΔM` and drops Kraus indices with `D_l ≤ cutoff·max D`.
pub fn perturbative_parts(m: &QecMatrix, mode: PerturbativeMode, cutoff: f64) -> Result<PerturbativeParts> {
    let a = m.partial_trace().scale(1.0 / m.d_l as f64);
    let (data, diag) = match mode {
        PerturbativeMode::DiagTruncation => (m.data.clone(), a.real_diagonal()),
        PerturbativeMode::UnitaryRotation => {
            let eig = herm_eig(&a)?;
            let u = ComplexMatrix::identity(m.d_l).kron(&eig.eigenvectors);
            let rotated = (&u.adjoint() * &(&m.data * &u)).hermitian_part();
            (rotated, eig.eigenvalues.clone())
        }
    };
    let d_max = diag.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = (0..m.n_kraus).filter(|&l| diag[l] > cutoff * d_max).collect();
    let d: Vec<f64> = kept.iter().map(|&l| diag[l]).collect();
    let nk = kept.len();
    let rows: Vec<usize> = (0..m.d_l).flat_map(|mu| kept.iter().map(move |&l| mu * m.n_kraus + l)).collect();
    let restricted = data.select(&rows, &rows);
    let delta_m = &restricted - &ComplexMatrix::identity(m.d_l).kron(&ComplexMatrix::from_diagonal(&d));
    let f_of_d = ComplexMatrix::from_fn(nk, nk, |l, k| c64(1.0 / (d[l].sqrt() + d[k].sqrt()), 0.0));
    Ok(PerturbativeParts { d_l: m.d_l, mode, d, kept, delta_m, f_of_d })
}

/// Second-order infidelity `(1/d_L)‖f(D)⊙ΔM‖_F²`, less
/// `(1/d_L²)‖Tr_L(f(D)⊙ΔM)‖_F²` in diag-truncation mode.
pub fn perturbative_infidelity(parts: &PerturbativeParts) -> f64 {
    let w = parts.weighted_residual();
    let d = parts.d_l as f64;
    let main = frobenius_norm(&w).powi(2) / d;
    match parts.mode {
        PerturbativeMode::UnitaryRotation => main,
        PerturbativeMode::DiagTruncation => {
            let t = partial_trace_logical(&w, parts.d_l, parts.d.len()).expect("square by construction");
            main - frobenius_norm(&t).powi(2) / (d * d)
        }
    }
}

/// `Tr D`, the limit of `F̃` as the perturbative term vanishes.
pub fn trace_correctable(parts: &PerturbativeParts) -> f64 {
    parts.d.iter().sum()
}

/// Kraus operators `A_j = N_j E` of encoding followed by noise, each
/// `out_dim × d_L`.
pub fn encoded_kraus(code: &Code, channel: &NoiseChannel) -> Result<Vec<ComplexMatrix>> {
    let v = error_vectors(code, channel)?;
    let (d_l, nk) = (code.logical_dim(), channel.n_kraus());
    Ok((0..nk)
        .map(|j| {
            let cols: Vec<usize> = (0..d_l).map(|mu| mu * nk + j).collect();
            v.select(&(0..v.rows()).collect::<Vec<_>>(), &cols)
        })
        .collect())
}

/// Transpose-channel Kraus operators
/// `R_l = Σ (M^{−1/2})_{[μl],[νk]} |μ_L⟩⟨ν_L|N_k†`, each `d_L × out_dim`,
/// mapping the noisy physical space back onto the logical space.
pub fn transpose_channel_kraus(m: &QecMatrix, code: &Code, channel: &NoiseChannel) -> Result<Vec<ComplexMatrix>> {
    if !code.is_orthonormal(1e-10) {
        return Err(Error::InvalidParameter("transpose channel needs orthonormal codewords".into()));
    }
    if m.d_l != code.logical_dim() || m.n_kraus != channel.n_kraus() {
        return Err(Error::DimensionMismatch("QEC matrix does not match code and channel".into()));
    }
    let v = error_vectors(code, channel)?;
    let s = psd_pinv_sqrt(&m.data, DEFAULT_CUTOFF)?;
    let v_dag = v.adjoint();
    let all: Vec<usize> = (0..m.dim()).collect();
    Ok((0..m.n_kraus)
        .map(|l| {
            let rows: Vec<usize> = (0..m.d_l).map(|mu| mu * m.n_kraus + l).collect();
            &s.select(&rows, &all) * &v_dag
        })
        .collect())
}

/// `P̂_N = V M⁺ V†`, the projector onto the span of the error vectors.
pub fn error_subspace_projector(m: &QecMatrix, code: &Code, channel: &NoiseChannel) -> Result<ComplexMatrix> {
    let v = error_vectors(code, channel)?;
    let pinv = psd_pinv(&m.data, DEFAULT_CUTOFF)?;
    Ok(&(&v * &pinv) * &v.adjoint())
}

/// `(1/d_L²) Σ_ij |Tr(R_i A_j)|²`.
pub fn channel_fidelity(recovery: &[ComplexMatrix], forward: &[ComplexMatrix], d_l: usize) -> Result<f64> {
    let mut total = 0.0;
    for r in recovery {
        for a in forward {
            if r.cols() != a.rows() || r.rows() != d_l || a.cols() != d_l {
                return Err(Error::DimensionMismatch(format!(
                    "recovery {:?} does not compose with forward {:?} on d_L = {d_l}",
                    r.shape(),
                    a.shape()
                )));
            }
            total += (r * a).trace().norm_sqr();
        }
    }
    Ok(total / (d_l * d_l) as f64)
}

/// Near-optimal fidelity of a code under a channel, choosing the
/// non-orthonormal formula when the codewords overlap, with the
/// perturbative infidelity attached.
pub fn analyze(code: &Code, channel: &NoiseChannel, mode: PerturbativeMode) -> Result<FidelityReport> {
    let m = build_qec_matrix(code, channel)?;
    let (mut report, sym) = if code.is_orthonormal(1e-12) {
        (near_optimal_fidelity(&m)?, m)
    } else {
        (near_optimal_fidelity_nonorthonormal(&m, &code.overlap)?, overlap_symmetrized(&m, &code.overlap)?)
    };
    let parts = perturbative_parts(&sym, mode, DEFAULT_CUTOFF)?;
    report.perturbative_infidelity = Some(perturbative_infidelity(&parts));
    Ok(report)
}

//! Dense complex linear algebra: Hermitian eigendecomposition, PSD matrix
//! functions, the composite-index partial trace and a few norms.
//!
//! Composite indices follow the logical-major convention `i = μ·n_kraus + l`,
//! so `I_L ⊗ A` is literally a Kronecker product with the logical factor on
//! the left and [`partial_trace_logical`] sums the diagonal `n_kraus × n_kraus`
//! blocks.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

/// Relative rank cutoff for square roots and pseudo-inverses.
pub const DEFAULT_CUTOFF: f64 = 1e-12;

/// Eigenvalues below `-NEGATIVE_TOLERANCE·λ_max` mark an input as not PSD.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

/// Relative Hermiticity tolerance accepted by [`herm_eig`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense complex matrix. All entries are finite.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_nalgebra(DMatrix::from_row_slice(rows, cols, entries))
    }

    pub fn from_real_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<Complex64> = entries.iter().map(|&x| c64(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &entries)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { c64(diag[i], 0.0) } else { Complex64::default() })
    }

    /// Matrix whose columns are the given vectors (all of equal length).
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Self::from_nalgebra(DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn from_nalgebra(m: DMatrix<Complex64>) -> Result<Self> {
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    pub fn as_nalgebra(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    /// `self† · rhs` without materializing the adjoint.
    pub fn adjoint_mul(&self, rhs: &Self) -> Self {
        Self(self.0.ad_mul(&rhs.0))
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        Self(self.0.kronecker(&rhs.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.0.diagonal().iter().copied().collect()
    }

    /// Real parts of the diagonal.
    pub fn real_diagonal(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Sub-matrix of the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// `(self + self†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * c64(0.5, 0.0))
    }

    /// Frobenius distance to the adjoint.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    /// Real inner product `Re Tr(self† rhs)`.
    pub fn inner(&self, rhs: &Self) -> f64 {
        self.0.iter().zip(rhs.0.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut Complex64 {
        &mut self.0[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `V g(Λ) V†`.
    pub fn apply_fn(&self, g: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = self.eigenvectors.as_nalgebra();
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = g(lam);
            scaled.column_mut(j).scale_mut(s);
        }
        ComplexMatrix(scaled * v.adjoint())
    }
}

/// Hermitian eigendecomposition. The input is symmetrized before solving.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(Error::NotSquare(h.rows(), h.cols()));
    }
    let scale = frobenius_norm(h).max(1.0);
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.rows();
    if n == 0 {
        return Ok(HermEig { eigenvalues: vec![], eigenvectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(h.hermitian_part().into_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { eigenvalues, eigenvectors })
}

/// Absolute thresholds `(rank_cut, negative_cut)` for a spectrum.
fn thresholds(eig: &HermEig, cutoff: f64) -> (f64, f64) {
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |m, l| m.max(l.abs()))
        .max(f64::MIN_POSITIVE);
    (cutoff * scale, NEGATIVE_TOLERANCE.max(cutoff) * scale)
}

fn check_psd(eig: &HermEig, negative_cut: f64) -> Result<()> {
    let min = eig.min_eigenvalue();
    if min < -negative_cut {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Square root of a PSD matrix. Eigenvalues below `cutoff·λ_max` are treated
/// as zero.
pub fn psd_sqrt(h: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    psd_sqrt_from_eig(&eig, cutoff)
}

pub fn psd_sqrt_from_eig(eig: &HermEig, cutoff: f64) -> Result<ComplexMatrix> {
    let (rank_cut, neg_cut) = thresholds(eig, cutoff);
    check_psd(eig, neg_cut)?;
    Ok(eig.apply_fn(|l| if l > rank_cut { l.sqrt() } else { 0.0 }))
}

/// Pseudo-inverse square root: `R` with `R·H·R` the projector onto the
/// retained eigenspace.
pub fn psd_pinv_sqrt(h: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    psd_pinv_sqrt_from_eig(&eig, cutoff)
}

pub fn psd_pinv_sqrt_from_eig(eig: &HermEig, cutoff: f64) -> Result<ComplexMatrix> {
    let (rank_cut, neg_cut) = thresholds(eig, cutoff);
    check_psd(eig, neg_cut)?;
    Ok(eig.apply_fn(|l| if l > rank_cut { 1.0 / l.sqrt() } else { 0.0 }))
}

/// Moore–Penrose pseudo-inverse of a PSD matrix.
pub fn psd_pinv(h: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    let (rank_cut, neg_cut) = thresholds(&eig, cutoff);
    check_psd(&eig, neg_cut)?;
    Ok(eig.apply_fn(|l| if l > rank_cut { 1.0 / l } else { 0.0 }))
}

/// Projector onto the eigenspace retained by the cutoff.
pub fn support_projector(h: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(h)?;
    let (rank_cut, _) = thresholds(&eig, cutoff);
    Ok(eig.apply_fn(|l| if l > rank_cut { 1.0 } else { 0.0 }))
}

/// `(Tr_L M)_{lk} = Σ_μ M[μ·n_kraus + l, μ·n_kraus + k]`.
pub fn partial_trace_logical(m: &ComplexMatrix, d_l: usize, n_kraus: usize) -> Result<ComplexMatrix> {
    let dim = d_l * n_kraus;
    if m.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} with d_L={d_l}, N_K={n_kraus}",
            m.rows(),
            m.cols()
        )));
    }
    let mut out = ComplexMatrix::zeros(n_kraus, n_kraus);
    for mu in 0..d_l {
        let base = mu * n_kraus;
        for l in 0..n_kraus {
            for k in 0..n_kraus {
                out[(l, k)] += m[(base + l, base + k)];
            }
        }
    }
    Ok(out)
}

/// Partial trace over the second (minor) factor of a `a_dim·b_dim` square
/// matrix, leaving an `a_dim × a_dim` matrix.
pub fn partial_trace_minor(m: &ComplexMatrix, a_dim: usize, b_dim: usize) -> Result<ComplexMatrix> {
    partial_trace_logical(&swap_factors(m, a_dim, b_dim)?, b_dim, a_dim)
}

/// Reorders a square matrix on `A ⊗ B` into the `B ⊗ A` layout.
pub fn swap_factors(m: &ComplexMatrix, a_dim: usize, b_dim: usize) -> Result<ComplexMatrix> {
    let dim = a_dim * b_dim;
    if m.shape() != (dim, dim) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} is not ({a_dim}·{b_dim}) square",
            m.rows(),
            m.cols()
        )));
    }
    let perm = |i: usize| (i % b_dim) * a_dim + i / b_dim;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            out[(perm(i), perm(j))] = m[(i, j)];
        }
    }
    Ok(out)
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.as_nalgebra().norm()
}

pub fn hadamard(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "hadamard of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(ComplexMatrix(a.as_nalgebra().component_mul(b.as_nalgebra())))
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    a.as_nalgebra().clone().singular_values().iter().fold(0.0, |m: f64, &s| m.max(s))
}

/// Inner product `⟨u|v⟩`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

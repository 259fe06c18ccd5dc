//! Kraus-operator families for the noise channels, with an explicit
//! completeness defect recording what a truncation dropped.
//!
//! Kraus operators are stored structurally ([`KrausOp`]) so that multi-qubit
//! product channels and the bosonic loss channel can act on large registers
//! without materializing dense matrices. Kraus ordering is part of the
//! contract: product channels are weight-major then lexicographic, loss is by
//! number of lost excitations ascending.

use num_complex::Complex64;

use crate::codes::Code;
use crate::hilbert::{c64, herm_eig, ComplexMatrix};
use crate::{invalid, Error, Result};

/// Tail probability used when choosing loss truncations automatically.
pub const LOSS_TAIL: f64 = 1e-10;

/// Factor of a tensor-product operator acting on one site.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteOp {
    Identity(usize),
    /// `out × in` matrix on this site.
    Matrix(ComplexMatrix),
}

impl SiteOp {
    fn in_dim(&self) -> usize {
        match self {
            SiteOp::Identity(d) => *d,
            SiteOp::Matrix(m) => m.cols(),
        }
    }

    fn out_dim(&self) -> usize {
        match self {
            SiteOp::Identity(d) => *d,
            SiteOp::Matrix(m) => m.rows(),
        }
    }

    fn to_dense(&self) -> ComplexMatrix {
        match self {
            SiteOp::Identity(d) => ComplexMatrix::identity(*d),
            SiteOp::Matrix(m) => m.clone(),
        }
    }
}

/// A Kraus operator mapping an `in_dim` space into an `out_dim` space.
#[derive(Clone, Debug, PartialEq)]
pub enum KrausOp {
    Dense(ComplexMatrix),
    /// Tensor product of site factors, site 0 most significant.
    Product(Vec<SiteOp>),
    /// `|n⟩ ↦ coeffs[n]·|n − shift⟩` on a `coeffs.len()`-dimensional space.
    Lowering { shift: usize, coeffs: Vec<f64> },
}

impl KrausOp {
    pub fn in_dim(&self) -> usize {
        match self {
            KrausOp::Dense(m) => m.cols(),
            KrausOp::Product(sites) => sites.iter().map(SiteOp::in_dim).product(),
            KrausOp::Lowering { coeffs, .. } => coeffs.len(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            KrausOp::Dense(m) => m.rows(),
            KrausOp::Product(sites) => sites.iter().map(SiteOp::out_dim).product(),
            KrausOp::Lowering { coeffs, .. } => coeffs.len(),
        }
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.in_dim(), "Kraus operator applied to a vector of wrong length");
        match self {
            KrausOp::Dense(m) => (0..m.rows())
                .map(|i| (0..m.cols()).map(|j| m[(i, j)] * v[j]).sum())
                .collect(),
            KrausOp::Lowering { shift, coeffs } => {
                let mut out = vec![Complex64::default(); coeffs.len()];
                for n in *shift..coeffs.len() {
                    out[n - shift] = v[n] * coeffs[n];
                }
                out
            }
            KrausOp::Product(sites) => {
                let mut cur = v.to_vec();
                for j in 0..sites.len() {
                    let SiteOp::Matrix(m) = &sites[j] else { continue };
                    let left: usize = sites[..j].iter().map(SiteOp::out_dim).product();
                    let right: usize = sites[j + 1..].iter().map(SiteOp::in_dim).product();
                    let (rows, cols) = m.shape();
                    let mut next = vec![Complex64::default(); left * rows * right];
                    for a in 0..left {
                        for c in 0..cols {
                            let src = &cur[(a * cols + c) * right..(a * cols + c + 1) * right];
                            for r in 0..rows {
                                let w = m[(r, c)];
                                if w == Complex64::default() {
                                    continue;
                                }
                                let dst = &mut next[(a * rows + r) * right..(a * rows + r + 1) * right];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += w * s;
                                }
                            }
                        }
                    }
                    cur = next;
                }
                cur
            }
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        match self {
            KrausOp::Dense(m) => m.clone(),
            KrausOp::Product(sites) => sites
                .iter()
                .fold(ComplexMatrix::identity(1), |acc, s| acc.kron(&s.to_dense())),
            KrausOp::Lowering { shift, coeffs } => {
                let n = coeffs.len();
                let mut m = ComplexMatrix::zeros(n, n);
                for k in *shift..n {
                    m[(k - shift, k)] = c64(coeffs[k], 0.0);
                }
                m
            }
        }
    }

    /// Diagonal of `K†K` when `K†K` is diagonal in the computational basis.
    fn gram_diagonal(&self) -> Option<Vec<f64>> {
        fn diag_of_gram(m: &ComplexMatrix) -> Option<Vec<f64>> {
            let g = m.adjoint_mul(m);
            let scale = g.max_abs().max(1.0);
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    if i != j && g[(i, j)].norm() > 1e-14 * scale {
                        return None;
                    }
                }
            }
            Some(g.real_diagonal())
        }
        match self {
            KrausOp::Dense(m) => diag_of_gram(m),
            KrausOp::Lowering { shift, coeffs } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(n, c)| if n >= *shift { c * c } else { 0.0 })
                    .collect(),
            ),
            KrausOp::Product(sites) => {
                let mut acc = vec![1.0];
                for s in sites {
                    let d = match s {
                        SiteOp::Identity(n) => vec![1.0; *n],
                        SiteOp::Matrix(m) => diag_of_gram(m)?,
                    };
                    acc = acc.iter().flat_map(|a| d.iter().map(move |b| a * b)).collect();
                }
                Some(acc)
            }
        }
    }
}

/// An ordered Kraus set with its measured completeness defect.
#[derive(Clone, Debug)]
pub struct NoiseChannel {
    pub label: String,
    pub kraus: Vec<KrausOp>,
    /// `‖Σ K†K − I‖_op` on the declared support.
    pub completeness_defect: f64,
    /// Leading basis states on which completeness is measured (`None` = all).
    pub support: Option<usize>,
}

impl NoiseChannel {
    /// Wraps an arbitrary Kraus list, measuring its defect on the full space.
    pub fn from_kraus(label: impl Into<String>, kraus: Vec<KrausOp>) -> Result<Self> {
        Self::with_support(label, kraus, None)
    }

    pub fn from_dense(label: impl Into<String>, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        Self::from_kraus(label, kraus.into_iter().map(KrausOp::Dense).collect())
    }

    fn with_support(label: impl Into<String>, kraus: Vec<KrausOp>, support: Option<usize>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(invalid("a channel needs at least one Kraus operator"));
        };
        let (din, dout) = (first.in_dim(), first.out_dim());
        if kraus.iter().any(|k| k.in_dim() != din || k.out_dim() != dout) {
            return Err(Error::DimensionMismatch("Kraus operators of unequal shape".into()));
        }
        let completeness_defect = completeness_defect(&kraus, support)?;
        Ok(Self { label: label.into(), kraus, completeness_defect, support })
    }

    pub fn n_kraus(&self) -> usize {
        self.kraus.len()
    }

    /// Physical (input) dimension.
    pub fn in_dim(&self) -> usize {
        self.kraus[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.kraus[0].out_dim()
    }

    pub fn dense_kraus(&self) -> Vec<ComplexMatrix> {
        self.kraus.iter().map(KrausOp::to_dense).collect()
    }
}

/// `‖Σ K†K − I‖_op`, restricted to the first `support` basis states if given.
pub fn completeness_defect(kraus: &[KrausOp], support: Option<usize>) -> Result<f64> {
    let n = kraus[0].in_dim();
    let keep = support.unwrap_or(n).min(n);
    let diags: Option<Vec<Vec<f64>>> = kraus.iter().map(KrausOp::gram_diagonal).collect();
    if let Some(diags) = diags {
        let mut total = vec![0.0; n];
        for d in &diags {
            for (t, x) in total.iter_mut().zip(d) {
                *t += x;
            }
        }
        return Ok(total[..keep].iter().fold(0.0, |m, t| m.max((1.0 - t).abs())));
    }
    if n > 2048 {
        return Err(Error::Truncation(format!(
            "cannot certify completeness of a non-diagonal {n}-dimensional Kraus set"
        )));
    }
    let mut sum = ComplexMatrix::zeros(n, n);
    for k in kraus {
        let d = k.to_dense();
        sum = &sum + &d.adjoint_mul(&d);
    }
    let idx: Vec<usize> = (0..keep).collect();
    let defect = &sum.select(&idx, &idx) - &ComplexMatrix::identity(keep);
    let eig = herm_eig(&defect)?;
    Ok(eig.min_eigenvalue().abs().max(eig.max_eigenvalue().abs()))
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(invalid(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Qubit amplitude damping: `K₀ = |0⟩⟨0| + √(1−p)|1⟩⟨1|`, `K₁ = √p|0⟩⟨1|`.
pub fn amplitude_damping_qubit(p: f64) -> Result<NoiseChannel> {
    check_probability("damping probability", p)?;
    let k0 = ComplexMatrix::from_real_row_major(2, 2, &[1.0, 0.0, 0.0, (1.0 - p).sqrt()])?;
    let k1 = ComplexMatrix::from_real_row_major(2, 2, &[0.0, p.sqrt(), 0.0, 0.0])?;
    NoiseChannel::from_dense(format!("damping(p={p})"), vec![k0, k1])
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_row_major(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("finite")
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(2, 2, &[c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)])
        .expect("finite")
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_row_major(2, 2, &[1.0, 0.0, 0.0, -1.0]).expect("finite")
}

/// Single-qubit Pauli channel `{√(1−Σp) I, √px X, √py Y, √pz Z}`.
pub fn pauli_channel(px: f64, py: f64, pz: f64) -> Result<NoiseChannel> {
    for (n, p) in [("px", px), ("py", py), ("pz", pz)] {
        check_probability(n, p)?;
    }
    let p0 = 1.0 - px - py - pz;
    if p0 < -1e-15 {
        return Err(invalid(format!("px + py + pz = {} exceeds 1", px + py + pz)));
    }
    let p0 = p0.max(0.0);
    let kraus = vec![
        ComplexMatrix::identity(2).scale(p0.sqrt()),
        pauli_x().scale(px.sqrt()),
        pauli_y().scale(py.sqrt()),
        pauli_z().scale(pz.sqrt()),
    ];
    NoiseChannel::from_dense(format!("pauli(px={px},py={py},pz={pz})"), kraus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::X => pauli_x(),
            Pauli::Y => pauli_y(),
            Pauli::Z => pauli_z(),
        }
    }
}

/// Complete channel with at most one Pauli error on `n` qubits:
/// `{√(1−nq) I, √q P₁, …, √q P_n}`.
pub fn weight_one_pauli(n_qubits: usize, pauli: Pauli, q: f64) -> Result<NoiseChannel> {
    check_probability("q", q)?;
    if n_qubits as f64 * q > 1.0 + 1e-15 {
        return Err(invalid(format!("n·q = {} exceeds 1", n_qubits as f64 * q)));
    }
    let mut kraus = vec![KrausOp::Product(vec![SiteOp::Matrix(
        ComplexMatrix::identity(1 << n_qubits).scale((1.0 - n_qubits as f64 * q).max(0.0).sqrt()),
    )])];
    for site in 0..n_qubits {
        let mut sites = Vec::new();
        if site > 0 {
            sites.push(SiteOp::Identity(1 << site));
        }
        sites.push(SiteOp::Matrix(pauli.matrix().scale(q.sqrt())));
        if site + 1 < n_qubits {
            sites.push(SiteOp::Identity(1 << (n_qubits - site - 1)));
        }
        kraus.push(KrausOp::Product(sites));
    }
    NoiseChannel::from_kraus(format!("weight1-{pauli:?}(n={n_qubits},q={q})"), kraus)
}

/// Index tuples over `n_sites` sites, each in `0..n_ops` with `0` the
/// no-error operator, with at most `max_weight` nonzero entries. Sorted by
/// weight, then lexicographically.
fn weighted_tuples(n_sites: usize, n_ops: usize, max_weight: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, n_sites: usize, n_ops: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n_sites {
            out.push(prefix.clone());
            return;
        }
        for a in 0..n_ops {
            if a != 0 && left == 0 {
                break;
            }
            prefix.push(a);
            rec(prefix, n_sites, n_ops, if a == 0 { left } else { left - 1 }, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n_sites, n_ops, max_weight, &mut out);
    out.sort_by_key(|t| (t.iter().filter(|&&a| a != 0).count(), t.clone()));
    out
}

/// n-fold tensor power of a single-qubit channel keeping terms with at most
/// `max_weight` non-`K₀` factors. Fails if the dropped tail leaves a defect
/// above `max_defect`.
pub fn tensor_noise(single: &NoiseChannel, n_qubits: usize, max_weight: usize, max_defect: f64) -> Result<NoiseChannel> {
    if single.in_dim() != 2 || single.out_dim() != 2 {
        return Err(invalid("tensor_noise expects a single-qubit channel"));
    }
    if n_qubits == 0 {
        return Err(invalid("tensor_noise needs at least one qubit"));
    }
    let site_ops = single.dense_kraus();
    let kraus = weighted_tuples(n_qubits, site_ops.len(), max_weight)
        .into_iter()
        .map(|t| KrausOp::Product(t.iter().map(|&a| SiteOp::Matrix(site_ops[a].clone())).collect()))
        .collect();
    let channel = NoiseChannel::from_kraus(
        format!("{}^{n_qubits}[w<={max_weight}]", single.label),
        kraus,
    )?;
    if channel.completeness_defect > max_defect {
        return Err(Error::Truncation(format!(
            "weight-{max_weight} truncation leaves defect {:.3e} > {max_defect:.3e}",
            channel.completeness_defect
        )));
    }
    Ok(channel)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// `binom(n,l) γ^l (1−γ)^{n−l}`, the probability of losing `l` of `n` excitations.
pub fn loss_probability(n: usize, l: usize, gamma: f64) -> f64 {
    if l > n {
        return 0.0;
    }
    let lf = ln_factorials(n);
    binomial_pmf(&lf, n, l, gamma)
}

fn binomial_pmf(ln_fact: &[f64], n: usize, l: usize, gamma: f64) -> f64 {
    if l > n {
        return 0.0;
    }
    if gamma == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    if gamma == 1.0 {
        return if l == n { 1.0 } else { 0.0 };
    }
    let ln = ln_fact[n] - ln_fact[l] - ln_fact[n - l] + l as f64 * gamma.ln() + (n - l) as f64 * (1.0 - gamma).ln();
    ln.exp()
}

/// Pure loss on Fock levels `0..=cutoff`:
/// `N_l = (γ/(1−γ))^{l/2} a^l/√l! (1−γ)^{n̂/2}`, `l = 0..=l_max`.
/// Completeness is measured on `n ≤ n_support`.
pub fn pure_loss(gamma: f64, l_max: usize, cutoff: usize, n_support: usize, max_defect: f64) -> Result<NoiseChannel> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("loss γ = {gamma} outside (0,1)")));
    }
    let dim = cutoff + 1;
    let lf = ln_factorials(dim);
    let kraus = (0..=l_max)
        .map(|l| KrausOp::Lowering {
            shift: l,
            coeffs: (0..dim).map(|n| binomial_pmf(&lf, n, l, gamma).sqrt()).collect(),
        })
        .collect();
    let channel = NoiseChannel::with_support(
        format!("loss(gamma={gamma},l_max={l_max})"),
        kraus,
        Some(n_support.min(cutoff) + 1),
    )?;
    if channel.completeness_defect > max_defect {
        return Err(Error::Truncation(format!(
            "loss truncation l_max={l_max} leaves defect {:.3e} > {max_defect:.3e} on n <= {n_support}",
            channel.completeness_defect
        )));
    }
    Ok(channel)
}

/// Smallest Fock level below which every codeword keeps `1 − tail` of its weight.
pub fn fock_support(code: &Code, tail: f64) -> usize {
    let iso = &code.isometry;
    (0..iso.cols())
        .map(|j| {
            let total: f64 = (0..iso.rows()).map(|n| iso[(n, j)].norm_sqr()).sum();
            let mut acc = 0.0;
            for n in 0..iso.rows() {
                acc += iso[(n, j)].norm_sqr();
                if acc >= (1.0 - tail) * total {
                    return n;
                }
            }
            iso.rows() - 1
        })
        .max()
        .unwrap_or(0)
}

/// Smallest `l` with `P(L > l) < tail` for `L ~ Binomial(n, γ)`.
pub fn loss_truncation(n: usize, gamma: f64, tail: f64) -> usize {
    let lf = ln_factorials(n);
    let mut cdf = 0.0;
    for l in 0..=n {
        cdf += binomial_pmf(&lf, n, l, gamma);
        if 1.0 - cdf < tail {
            return l;
        }
    }
    n
}

/// Pure loss sized for a Fock-space code: support and `l_max` chosen from
/// [`LOSS_TAIL`].
pub fn pure_loss_for_code(gamma: f64, code: &Code) -> Result<NoiseChannel> {
    if !code.family.is_bosonic() {
        return Err(invalid("pure loss needs a Fock-space code"));
    }
    let cutoff = code.physical_dim() - 1;
    let n_support = fock_support(code, LOSS_TAIL);
    let l_max = loss_truncation(n_support, gamma, LOSS_TAIL);
    pure_loss(gamma, l_max, cutoff, n_support, 10.0 * LOSS_TAIL)
}

/// Erasures on the first `l` of `n_qubits` qubits. Each erasure-prone qubit
/// maps into a 3-level space `{|−1⟩, |1⟩, |Ω⟩}` via
/// `K₀ = √(1−p) I`, `K₁ = √p|Ω⟩⟨−1|`, `K₂ = √p|Ω⟩⟨1|`; zero operators are
/// omitted. Qubit level 0 is spin −1, level 1 is spin +1.
pub fn erasure_first_l(n_qubits: usize, l: usize, p: f64) -> Result<NoiseChannel> {
    check_probability("erasure probability", p)?;
    if l > n_qubits {
        return Err(invalid(format!("{l} erasures on {n_qubits} qubits")));
    }
    let k0 = ComplexMatrix::from_real_row_major(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0])?.scale((1.0 - p).sqrt());
    let k1 = ComplexMatrix::from_real_row_major(3, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0])?.scale(p.sqrt());
    let k2 = ComplexMatrix::from_real_row_major(3, 2, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0])?.scale(p.sqrt());
    let site = [k0, k1, k2];
    let nonzero = [p < 1.0, p > 0.0, p > 0.0];
    let rest = n_qubits - l;
    let kraus = weighted_tuples(l, 3, l)
        .into_iter()
        .filter(|t| t.iter().all(|&a| nonzero[a]))
        .map(|t| {
            let mut sites: Vec<SiteOp> = t.iter().map(|&a| SiteOp::Matrix(site[a].clone())).collect();
            if rest > 0 {
                sites.push(SiteOp::Identity(1 << rest));
            }
            KrausOp::Product(sites)
        })
        .collect();
    NoiseChannel::from_kraus(format!("erasure(l={l},p={p})"), kraus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::frobenius_norm;

    fn sum_gram(ch: &NoiseChannel) -> ComplexMatrix {
        let n = ch.in_dim();
        ch.dense_kraus()
            .iter()
            .fold(ComplexMatrix::zeros(n, n), |acc, k| &acc + &k.adjoint_mul(k))
    }

    #[test]
    fn damping_endpoints_and_completeness() {
        let ch = amplitude_damping_qubit(0.0).unwrap();
        assert_eq!(ch.dense_kraus()[0], ComplexMatrix::identity(2));
        assert_eq!(ch.dense_kraus()[1], ComplexMatrix::zeros(2, 2));

        let ch = amplitude_damping_qubit(1.0).unwrap();
        let k = ch.dense_kraus();
        assert_eq!(k[0], ComplexMatrix::from_real_row_major(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap());
        assert_eq!(k[1], ComplexMatrix::from_real_row_major(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap());

        let ch = amplitude_damping_qubit(0.3).unwrap();
        assert!(frobenius_norm(&(&sum_gram(&ch) - &ComplexMatrix::identity(2))) < 1e-15);
        assert!(ch.completeness_defect < 1e-15);
        assert!(amplitude_damping_qubit(1.2).is_err());
    }

    #[test]
    fn pauli_examples() {
        let ch = pauli_channel(0.0, 0.0, 0.0).unwrap();
        assert_eq!(ch.dense_kraus()[0], ComplexMatrix::identity(2));
        let ch = pauli_channel(1.0, 0.0, 0.0).unwrap();
        assert_eq!(ch.dense_kraus()[1], pauli_x());
        assert!(ch.dense_kraus()[0].max_abs() == 0.0);
        let ch = pauli_channel(0.1, 0.05, 0.2).unwrap();
        assert!(frobenius_norm(&(&sum_gram(&ch) - &ComplexMatrix::identity(2))) < 1e-15);
        assert!(pauli_channel(0.5, 0.4, 0.2).is_err());
        assert!(pauli_channel(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn tensor_noise_counts_and_order() {
        let d = amplitude_damping_qubit(0.2).unwrap();
        let ch = tensor_noise(&d, 3, 0, 1.0).unwrap();
        assert_eq!(ch.n_kraus(), 1);
        let k00 = d.dense_kraus()[0].clone();
        let want = k00.kron(&k00).kron(&k00);
        assert!(frobenius_norm(&(&ch.kraus[0].to_dense() - &want)) < 1e-15);

        let ch = tensor_noise(&d, 2, 2, 1e-14).unwrap();
        assert_eq!(ch.n_kraus(), 4);
        assert!(ch.completeness_defect < 1e-15);
        // weight-major then lexicographic: 00, 01, 10, 11
        let k = d.dense_kraus();
        let expect = [(0, 0), (0, 1), (1, 0), (1, 1)];
        for (op, (a, b)) in ch.kraus.iter().zip(expect) {
            assert!(frobenius_norm(&(&op.to_dense() - &k[a].kron(&k[b]))) < 1e-15);
        }
    }

    #[test]
    fn tensor_noise_truncation_defect() {
        let p: f64 = 0.01;
        let d = amplitude_damping_qubit(p).unwrap();
        let ch = tensor_noise(&d, 4, 2, 1.0).unwrap();
        assert_eq!(ch.n_kraus(), 1 + 4 + 6);
        // worst case is |1111⟩: P(≥3 decays) = 4p³(1−p) + p⁴
        let dropped = 4.0 * p.powi(3) * (1.0 - p) + p.powi(4);
        assert!((ch.completeness_defect - dropped).abs() < 1e-15);
        assert!(ch.completeness_defect < 1e-5);
        assert!(tensor_noise(&d, 4, 2, 1e-7).is_err());
        let full = tensor_noise(&d, 4, 4, 1e-14).unwrap();
        assert!(full.completeness_defect < 1e-14);
    }

    #[test]
    fn product_apply_matches_dense() {
        let d = amplitude_damping_qubit(0.35).unwrap();
        let ch = tensor_noise(&d, 3, 3, 1e-14).unwrap();
        let v: Vec<Complex64> = (0..8).map(|i| c64(i as f64 * 0.1, 1.0 - i as f64 * 0.05)).collect();
        for k in &ch.kraus {
            let dense = k.to_dense();
            let direct = k.apply(&v);
            for i in 0..8 {
                let want: Complex64 = (0..8).map(|j| dense[(i, j)] * v[j]).sum();
                assert!((direct[i] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_loss_vacuum_and_binomial_statistics() {
        let gamma = 0.1;
        let cutoff = 30;
        let ch = pure_loss(gamma, cutoff, cutoff, cutoff, 1e-12).unwrap();
        let mut vac = vec![Complex64::default(); cutoff + 1];
        vac[0] = c64(1.0, 0.0);
        assert_eq!(ch.kraus[0].apply(&vac), vac);

        // oracle: N_l from the operator definition, a^l (1−γ)^{n/2}
        let dense = ch.dense_kraus();
        for (l, nl) in dense.iter().enumerate() {
            let g = nl.adjoint_mul(nl);
            for n in 0..=cutoff {
                let mut lf = 1.0;
                for k in 1..=l {
                    lf *= k as f64;
                }
                let falling: f64 = (0..l).map(|k| (n as f64 - k as f64).max(0.0)).product();
                let want = (gamma / (1.0 - gamma)).powi(l as i32) / lf * falling * (1.0 - gamma).powi(n as i32);
                assert!((g[(n, n)].re - want).abs() < 1e-12, "l={l} n={n}");
            }
        }
        assert!(ch.completeness_defect < 1e-12);
    }

    #[test]
    fn pure_loss_defect_is_measured_on_support() {
        let ch = pure_loss(0.1, 2, 40, 10, 1.0).unwrap();
        let direct: f64 = (0..=10)
            .map(|n| 1.0 - (0..=2).map(|l| loss_probability(n, l, 0.1)).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((ch.completeness_defect - direct).abs() < 1e-14);
        assert!(pure_loss(0.1, 2, 40, 10, 1e-6).is_err());
        assert!(pure_loss(1.0, 2, 40, 10, 1.0).is_err());
    }

    #[test]
    fn loss_truncation_tail() {
        let l = loss_truncation(100, 0.1, 1e-10);
        let tail: f64 = ((l + 1)..=100).map(|k| loss_probability(100, k, 0.1)).sum();
        let prev_tail: f64 = (l..=100).map(|k| loss_probability(100, k, 0.1)).sum();
        assert!(tail < 1e-10 && prev_tail >= 1e-10);
    }

    #[test]
    fn erasure_examples() {
        let ch = erasure_first_l(3, 0, 0.4).unwrap();
        assert_eq!(ch.n_kraus(), 1);
        assert!(frobenius_norm(&(&ch.kraus[0].to_dense() - &ComplexMatrix::identity(8))) < 1e-15);

        let ch = erasure_first_l(4, 1, 1.0).unwrap();
        assert_eq!(ch.n_kraus(), 2);
        assert_eq!(ch.out_dim(), 3 * 8);
        assert!(ch.completeness_defect < 1e-15);

        let ch = erasure_first_l(4, 2, 1.0).unwrap();
        assert_eq!(ch.n_kraus(), 4);

        let ch = erasure_first_l(5, 2, 0.3).unwrap();
        assert_eq!(ch.n_kraus(), 9);
        assert!(ch.completeness_defect < 1e-15);
        assert!(erasure_first_l(2, 3, 0.5).is_err());
    }

    #[test]
    fn weight_one_pauli_is_complete() {
        let ch = weight_one_pauli(3, Pauli::X, 0.05).unwrap();
        assert_eq!(ch.n_kraus(), 4);
        assert!(ch.completeness_defect < 1e-15);
        assert!(frobenius_norm(&(&sum_gram(&ch) - &ComplexMatrix::identity(8))) < 1e-14);
        let ch = weight_one_pauli(2, Pauli::Y, 0.1).unwrap();
        assert!(ch.completeness_defect < 1e-15);
    }

    #[test]
    fn non_diagonal_completeness_uses_dense_path() {
        // Hadamard-rotated damping has non-diagonal K†K terms.
        let h = ComplexMatrix::from_real_row_major(2, 2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale(0.5f64.sqrt());
        let d = amplitude_damping_qubit(0.3).unwrap();
        let rotated: Vec<ComplexMatrix> = d.dense_kraus().iter().map(|k| &(&h * k) * &h).collect();
        let ch = NoiseChannel::from_dense("rotated", vec![rotated[0].clone()]).unwrap();
        let g = rotated[0].adjoint_mul(&rotated[0]);
        let eig = herm_eig(&(&g - &ComplexMatrix::identity(2))).unwrap();
        let want = eig.min_eigenvalue().abs().max(eig.max_eigenvalue().abs());
        assert!((ch.completeness_defect - want).abs() < 1e-14);
    }
}

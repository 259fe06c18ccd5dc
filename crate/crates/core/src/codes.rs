//! Code families as isometries into a finite physical space.
//!
//! Qubit codes live on `2^n` dimensions with qubit 0 the most significant
//! bit. Bosonic codes live on Fock levels `0..=cutoff`. The thermodynamic
//! code uses qubit level 1 for spin `+1` and level 0 for spin `−1`.

use std::f64::consts::PI;
use std::fmt;

use crate::hilbert::{c64, herm_eig, psd_pinv_sqrt, ComplexMatrix};
use crate::{invalid, Error, Result};

/// Allowed norm lost to a Fock cutoff, per codeword.
pub const MAX_TRUNCATION_LOSS: f64 = 1e-8;
/// Envelope bound `e^{−Δ²·cutoff}` required of automatic GKP cutoffs.
pub const GKP_ENVELOPE_TAIL: f64 = 1e-10;
const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum CodeFamily {
    Trivial,
    Repetition { n: usize },
    Leung4,
    Shor9,
    Steane7,
    Cat { alpha: f64, s: usize },
    Binomial { s: usize, n_deph: usize },
    Gkp { delta: f64, lattice_radius: usize, orthonormalized: bool },
    Thermo { n: usize, d: usize, m0: i64 },
    Custom { label: String, bosonic: bool },
}

impl CodeFamily {
    pub fn is_bosonic(&self) -> bool {
        match self {
            CodeFamily::Cat { .. } | CodeFamily::Binomial { .. } | CodeFamily::Gkp { .. } => true,
            CodeFamily::Custom { bosonic, .. } => *bosonic,
            _ => false,
        }
    }

    /// Families whose codewords are orthonormal by construction.
    pub fn declared_orthonormal(&self) -> bool {
        match self {
            CodeFamily::Gkp { orthonormalized, .. } => *orthonormalized,
            CodeFamily::Custom { .. } => false,
            _ => true,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CodeFamily::Trivial => "trivial",
            CodeFamily::Repetition { .. } => "repetition",
            CodeFamily::Leung4 => "leung4",
            CodeFamily::Shor9 => "shor9",
            CodeFamily::Steane7 => "steane7",
            CodeFamily::Cat { .. } => "cat",
            CodeFamily::Binomial { .. } => "binomial",
            CodeFamily::Gkp { .. } => "gkp",
            CodeFamily::Thermo { .. } => "thermo",
            CodeFamily::Custom { .. } => "custom",
        }
    }
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeFamily::Repetition { n } => write!(f, "repetition(n={n})"),
            CodeFamily::Cat { alpha, s } => write!(f, "cat(alpha={alpha},S={s})"),
            CodeFamily::Binomial { s, n_deph } => write!(f, "binomial(S={s},N={n_deph})"),
            CodeFamily::Gkp { delta, .. } => write!(f, "gkp(delta={delta})"),
            CodeFamily::Thermo { n, d, m0 } => write!(f, "thermo(N={n},d={d},m0={m0})"),
            CodeFamily::Custom { label, .. } => f.write_str(label),
            other => f.write_str(other.name()),
        }
    }
}

/// `d_L` codewords as the columns of an `N × d_L` isometry.
#[derive(Clone, Debug)]
pub struct Code {
    pub family: CodeFamily,
    pub isometry: ComplexMatrix,
    /// `m_{μν} = ⟨μ_L|ν_L⟩`.
    pub overlap: ComplexMatrix,
    /// Largest per-codeword norm fraction lost to the Fock cutoff.
    pub truncation_loss: f64,
}

impl Code {
    /// Wraps codeword columns, checking normalization and, for families
    /// declared orthonormal, orthogonality.
    pub fn new(family: CodeFamily, isometry: ComplexMatrix, truncation_loss: f64) -> Result<Self> {
        if isometry.cols() == 0 || isometry.rows() < isometry.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} codewords in a {}-dimensional space",
                isometry.cols(),
                isometry.rows()
            )));
        }
        let overlap = isometry.adjoint_mul(&isometry);
        for (mu, n) in overlap.real_diagonal().iter().enumerate() {
            if (n - 1.0).abs() > NORM_TOLERANCE {
                return Err(invalid(format!("codeword {mu} has squared norm {n}")));
            }
        }
        if family.declared_orthonormal() {
            let off = (&overlap - &ComplexMatrix::identity(overlap.rows())).max_abs();
            if off > NORM_TOLERANCE {
                return Err(invalid(format!("{family} codewords are not orthonormal (defect {off:.3e})")));
            }
        }
        Ok(Self { family, isometry, overlap, truncation_loss })
    }

    pub fn physical_dim(&self) -> usize {
        self.isometry.rows()
    }

    pub fn logical_dim(&self) -> usize {
        self.isometry.cols()
    }

    pub fn codeword(&self, mu: usize) -> Vec<crate::Complex64> {
        self.isometry.column(mu)
    }

    /// Whether the overlap matrix is the identity to `tol`.
    pub fn is_orthonormal(&self, tol: f64) -> bool {
        (&self.overlap - &ComplexMatrix::identity(self.logical_dim())).max_abs() <= tol
    }

    /// Symmetric (Löwdin) orthonormalization `V m^{−1/2}` of the codewords.
    pub fn orthonormalized(&self) -> Result<Code> {
        let inv_sqrt = overlap_inverse_sqrt(&self.overlap)?;
        let family = match &self.family {
            CodeFamily::Gkp { delta, lattice_radius, .. } => {
                CodeFamily::Gkp { delta: *delta, lattice_radius: *lattice_radius, orthonormalized: true }
            }
            other => other.clone(),
        };
        let iso = &self.isometry * &inv_sqrt;
        let overlap = ComplexMatrix::identity(self.logical_dim());
        Ok(Code { family, isometry: iso, overlap, truncation_loss: self.truncation_loss })
    }
}

/// `m^{−1/2}` for an invertible overlap matrix.
pub fn overlap_inverse_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(m)?;
    if eig.min_eigenvalue() <= 1e-12 {
        return Err(Error::SingularOverlap(eig.min_eigenvalue()));
    }
    psd_pinv_sqrt(m, 0.0)
}

fn basis_state(dim: usize, index: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[index] = 1.0;
    v
}

fn real_columns(columns: &[Vec<f64>]) -> Result<ComplexMatrix> {
    ComplexMatrix::from_columns(
        &columns
            .iter()
            .map(|c| c.iter().map(|&x| c64(x, 0.0)).collect())
            .collect::<Vec<_>>(),
    )
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Named qubit codes: `trivial`, `repetition(n)` (also `repetitionN`),
/// `leung4`, `shor9`, `steane7`.
pub fn build_qubit_code(name: &str) -> Result<Code> {
    let lower = name.trim().to_ascii_lowercase();
    match lower.as_str() {
        "trivial" => return trivial_code(),
        "leung4" => return leung4(),
        "shor9" => return shor9(),
        "steane7" => return steane7(),
        _ => {}
    }
    let digits = lower
        .strip_prefix("repetition")
        .map(|r| r.trim_start_matches('(').trim_end_matches(')').trim());
    match digits.and_then(|d| d.parse::<usize>().ok()) {
        Some(n) => repetition(n),
        None => Err(Error::Unknown { kind: "qubit code", name: name.to_string() }),
    }
}

/// The unencoded qubit `|0⟩, |1⟩`.
pub fn trivial_code() -> Result<Code> {
    let iso = real_columns(&[basis_state(2, 0), basis_state(2, 1)])?;
    Code::new(CodeFamily::Trivial, iso, 0.0)
}

/// `|0_L⟩ = |0…0⟩`, `|1_L⟩ = |1…1⟩` on `n` qubits.
pub fn repetition(n: usize) -> Result<Code> {
    if n == 0 || n > 20 {
        return Err(invalid(format!("repetition code on {n} qubits")));
    }
    let dim = 1usize << n;
    let iso = real_columns(&[basis_state(dim, 0), basis_state(dim, dim - 1)])?;
    Code::new(CodeFamily::Repetition { n }, iso, 0.0)
}

/// Approximate `[[4,1,2]]` amplitude-damping code.
pub fn leung4() -> Result<Code> {
    let mut zero = vec![0.0; 16];
    zero[0b0000] = 1.0;
    zero[0b1111] = 1.0;
    let mut one = vec![0.0; 16];
    one[0b0011] = 1.0;
    one[0b1100] = 1.0;
    let iso = real_columns(&[normalized(zero), normalized(one)])?;
    Code::new(CodeFamily::Leung4, iso, 0.0)
}

/// `[[9,1,3]]`: `(|000⟩ ± |111⟩)^{⊗3} / 2√2`.
pub fn shor9() -> Result<Code> {
    let block = |sign: f64| {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        v[7] = sign;
        v
    };
    let cube = |sign: f64| {
        let b = block(sign);
        let mut out = vec![0.0; 512];
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    out[i * 64 + j * 8 + k] = b[i] * b[j] * b[k];
                }
            }
        }
        normalized(out)
    };
    let iso = real_columns(&[cube(1.0), cube(-1.0)])?;
    Code::new(CodeFamily::Shor9, iso, 0.0)
}

/// `[[7,1,3]]` Steane code: `|0_L⟩` is the uniform superposition of the even
/// Hamming codewords, `|1_L⟩` of their complements.
pub fn steane7() -> Result<Code> {
    let generators = [0b1010101usize, 0b0110011, 0b0001111];
    let mut zero = vec![0.0; 128];
    let mut one = vec![0.0; 128];
    for mask in 0..8usize {
        let word = (0..3).filter(|b| mask >> b & 1 == 1).fold(0, |w, b| w ^ generators[b]);
        zero[word] = 1.0;
        one[word ^ 0b1111111] = 1.0;
    }
    let iso = real_columns(&[normalized(zero), normalized(one)])?;
    Code::new(CodeFamily::Steane7, iso, 0.0)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Cat code `|0_L⟩ ∝ Π₀|α⟩`, `|1_L⟩ ∝ Π_{S+1}|α⟩` on Fock levels `0..=cutoff`.
/// With `cutoff = None` the smallest cutoff meeting [`MAX_TRUNCATION_LOSS`]
/// is used.
pub fn build_cat(alpha: f64, s: usize, cutoff: Option<usize>) -> Result<Code> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("cat amplitude α = {alpha} must be positive")));
    }
    let period = 2 * (s + 1);
    let probe = (alpha * alpha + 20.0 * alpha + 60.0).ceil() as usize + period;
    let cutoff_probe = probe.max(cutoff.unwrap_or(0));
    // log |⟨n|α⟩|² up to the e^{−α²} factor, which cancels on normalization
    let ln_w: Vec<f64> = {
        let mut lf = 0.0;
        (0..=cutoff_probe)
            .map(|n| {
                if n > 0 {
                    lf += (n as f64).ln();
                }
                2.0 * n as f64 * alpha.ln() - lf
            })
            .collect()
    };
    let ln_max = ln_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weight = |n: usize| (ln_w[n] - ln_max).exp();
    let in_word = |n: usize, mu: usize| n % period == mu * (s + 1);
    let total = |mu: usize| (0..=cutoff_probe).filter(|&n| in_word(n, mu)).map(weight).sum::<f64>();
    let totals = [total(0), total(1)];
    let loss_at = |c: usize| {
        (0..2)
            .map(|mu| {
                let kept: f64 = (0..=c).filter(|&n| in_word(n, mu)).map(weight).sum();
                1.0 - kept / totals[mu]
            })
            .fold(0.0, f64::max)
    };
    let cutoff = match cutoff {
        Some(c) => c,
        None => (s + 1..=cutoff_probe)
            .find(|&c| loss_at(c) < MAX_TRUNCATION_LOSS)
            .ok_or_else(|| Error::Truncation(format!("no cat cutoff found for α = {alpha}")))?,
    };
    let loss = loss_at(cutoff);
    if loss >= MAX_TRUNCATION_LOSS {
        return Err(Error::Truncation(format!(
            "cat α={alpha}, S={s}: cutoff {cutoff} loses {loss:.3e} of the codeword norm"
        )));
    }
    let columns: Vec<Vec<f64>> = (0..2)
        .map(|mu| {
            normalized(
                (0..=cutoff)
                    .map(|n| if in_word(n, mu) { weight(n).sqrt() } else { 0.0 })
                    .collect(),
            )
        })
        .collect();
    Code::new(CodeFamily::Cat { alpha, s }, real_columns(&columns)?, loss)
}

/// Binomial code with loss spacing `S` and dephasing spacing `N`:
/// `|μ_L⟩ = 2^{−(N+1)/2} Σ_m (±1)^m √binom(N+1,m) |(S+1)m⟩`.
pub fn build_binomial(s: usize, n_deph: usize, cutoff: Option<usize>) -> Result<Code> {
    let top = (s + 1) * (n_deph + 1);
    let cutoff = cutoff.unwrap_or(top);
    if cutoff < top {
        return Err(Error::Truncation(format!("binomial code needs cutoff >= {top}, got {cutoff}")));
    }
    let ln_norm = (n_deph + 1) as f64 * 2f64.ln();
    let columns: Vec<Vec<f64>> = [1.0, -1.0]
        .iter()
        .map(|&sign: &f64| {
            let mut v = vec![0.0; cutoff + 1];
            for m in 0..=n_deph + 1 {
                let ln_binom = ln_factorial(n_deph + 1) - ln_factorial(m) - ln_factorial(n_deph + 1 - m);
                v[(s + 1) * m] = sign.powi(m as i32) * (0.5 * (ln_binom - ln_norm)).exp();
            }
            normalized(v)
        })
        .collect();
    Code::new(CodeFamily::Binomial { s, n_deph }, real_columns(&columns)?, 0.0)
}

/// Normalized Hermite functions `ψ_n(x)` for `n = 0..=n_max` via the stable
/// three-term recurrence, with a running log-scale so that neither the
/// Gaussian prefactor nor large `n` over- or underflows.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    const RESCALE: f64 = 1e150;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let (mut prev, mut cur) = (0.0f64, 1.0f64);
    out.push(log_scale.exp());
    for n in 0..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(if cur == 0.0 { 0.0 } else { cur * log_scale.exp() });
    }
    out
}

/// Fock level beyond which `e^{−Δ²n} < GKP_ENVELOPE_TAIL`.
pub fn gkp_auto_cutoff(delta: f64) -> usize {
    (-GKP_ENVELOPE_TAIL.ln() / (delta * delta)).ceil() as usize
}

/// Smallest lattice radius whose peaks cover the classically allowed region
/// of every Hermite function up to `n_max`, with an eight-unit Gaussian margin.
pub fn gkp_lattice_radius(n_max: usize) -> usize {
    (((2.0 * n_max as f64 + 1.0).sqrt() + 8.0) / PI.sqrt()).ceil() as usize
}

/// Unnormalized `e^{−Δ²n} Σ_{|j|≤J, j≡μ (2)} ψ_n(j√π)` for `n = 0..=n_max`.
fn gkp_coefficients(delta: f64, n_max: usize, radius: usize) -> [Vec<f64>; 2] {
    let mut coeffs = [vec![0.0; n_max + 1], vec![0.0; n_max + 1]];
    for j in 0..=radius {
        let psi = hermite_functions(j as f64 * PI.sqrt(), n_max);
        let mu = j % 2;
        for (n, p) in psi.iter().enumerate() {
            // ψ_n(−x) = (−1)^n ψ_n(x): the ±j pair doubles even n and cancels odd n
            let pair = if j == 0 { *p } else if n % 2 == 0 { 2.0 * p } else { 0.0 };
            coeffs[mu][n] += pair;
        }
    }
    for c in coeffs.iter_mut() {
        for (n, v) in c.iter_mut().enumerate() {
            *v *= (-delta * delta * n as f64).exp();
        }
    }
    coeffs
}

/// Finite-energy square-lattice GKP qubit, `|μ_Δ⟩ ∝ e^{−Δ²n̂}|μ_L⟩`, in the
/// Fock basis. The codewords are normalized but not mutually orthogonal; the
/// overlap is recorded. `orthonormalize` replaces them by `V m^{−1/2}`.
pub fn build_gkp_square(delta: f64, cutoff: Option<usize>, lattice_radius: Option<usize>, orthonormalize: bool) -> Result<Code> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("GKP Δ = {delta} must be positive")));
    }
    let cutoff = cutoff.unwrap_or_else(|| gkp_auto_cutoff(delta));
    let probe = cutoff.max((30.0 / (delta * delta)).ceil() as usize);
    let needed = gkp_lattice_radius(probe);
    let radius = lattice_radius.unwrap_or(needed);
    if radius < needed {
        return Err(Error::Truncation(format!(
            "GKP lattice radius {radius} below the {needed} required for Fock levels up to {probe}"
        )));
    }
    let coeffs = gkp_coefficients(delta, probe, radius);
    let mut loss: f64 = 0.0;
    let mut columns = Vec::with_capacity(2);
    for c in &coeffs {
        let total: f64 = c.iter().map(|x| x * x).sum();
        let kept: f64 = c[..=cutoff].iter().map(|x| x * x).sum();
        if !(total > 0.0) {
            return Err(Error::Truncation(format!("GKP Δ = {delta}: codeword vanishes")));
        }
        loss = loss.max(1.0 - kept / total);
        columns.push(normalized(c[..=cutoff].to_vec()));
    }
    if loss >= MAX_TRUNCATION_LOSS {
        return Err(Error::Truncation(format!(
            "GKP Δ={delta}: cutoff {cutoff} loses {loss:.3e} of the codeword norm"
        )));
    }
    let family = CodeFamily::Gkp { delta, lattice_radius: radius, orthonormalized: false };
    let code = Code::new(family, real_columns(&columns)?, loss)?;
    if orthonormalize {
        code.orthonormalized()
    } else {
        Ok(code)
    }
}

/// `Tr(n̂ P̂_L)/d_L` with `P̂_L = V m^{−1} V†` the code-space projector.
pub fn mean_excitation(code: &Code) -> Result<f64> {
    if !code.family.is_bosonic() {
        return Err(invalid("mean excitation needs a Fock-space code"));
    }
    let iso = &code.isometry;
    let d = code.logical_dim();
    let n_weighted = ComplexMatrix::from_fn(d, d, |mu, nu| {
        (0..iso.rows()).map(|n| iso[(n, mu)].conj() * iso[(n, nu)] * n as f64).sum()
    });
    let inv_sqrt = overlap_inverse_sqrt(&code.overlap)?;
    let inv = &inv_sqrt * &inv_sqrt;
    Ok((&inv * &n_weighted).trace().re / d as f64)
}

/// Δ for which the square GKP code has mean excitation `target`, by
/// bisection on `[0.05, 2]`.
pub fn gkp_delta_for_mean(target: f64) -> Result<f64> {
    let nbar = |delta: f64| build_gkp_square(delta, None, None, false).and_then(|c| mean_excitation(&c));
    let (mut lo, mut hi) = (0.05f64, 2.0f64);
    let (n_lo, n_hi) = (nbar(lo)?, nbar(hi)?);
    if !(n_hi <= target && target <= n_lo) {
        return Err(invalid(format!("mean excitation {target} outside [{n_hi:.4}, {n_lo:.4}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let n = nbar(mid)?;
        if (n - target).abs() < 1e-9 || hi - lo < 1e-14 {
            return Ok(mid);
        }
        if n > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dicke state `|h_m^N⟩`: uniform superposition of bitstrings with spin sum `m`.
pub fn dicke_state(n: usize, m: i64) -> Result<Vec<f64>> {
    if n > 24 {
        return Err(invalid(format!("Dicke state on {n} qubits is too large")));
    }
    let ni = n as i64;
    if m.abs() > ni || (ni + m) % 2 != 0 {
        return Err(invalid(format!("magnetization {m} not reachable on {n} qubits")));
    }
    let ones = ((ni + m) / 2) as u32;
    let v: Vec<f64> = (0..1usize << n)
        .map(|b| if b.count_ones() == ones { 1.0 } else { 0.0 })
        .collect();
    Ok(normalized(v))
}

/// Thermodynamic code `|0_L⟩ = |h_{m0}^N⟩`, `|1_L⟩ = |h_{m0+d}^N⟩`; the default
/// `m0` is `−d/2`.
pub fn build_thermo(n: usize, d: usize, m0: Option<i64>) -> Result<Code> {
    if d == 0 || d >= n {
        return Err(invalid(format!("thermodynamic code needs 0 < d < N, got d={d}, N={n}")));
    }
    let m0 = match m0 {
        Some(m) => m,
        None if d.is_multiple_of(2) => -(d as i64) / 2,
        None => return Err(invalid(format!("default m0 = −d/2 needs even d, got {d}"))),
    };
    let zero = dicke_state(n, m0)?;
    let one = dicke_state(n, m0 + d as i64)?;
    Code::new(CodeFamily::Thermo { n, d, m0 }, real_columns(&[zero, one])?, 0.0)
}

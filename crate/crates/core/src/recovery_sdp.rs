//! Optimal recovery by semidefinite programming on Choi matrices.
//!
//! A channel with Kraus operators `K_k : in → out` has Choi matrix
//! `C = Σ_ab |a⟩⟨b| ⊗ M(|a⟩⟨b|)` with input-major composite index
//! `[a·out + i]`; trace preservation reads `Tr_out C = I_in`. The recovery
//! fidelity is `Tr(C_R · C̃_A) / d_L²` where `C̃` is [`tilde_map`].
//!
//! The solver is a scaled ADMM (Douglas–Rachford) splitting between the
//! affine set `{Tr_out C = I}` and the PSD cone, warm-started from the
//! transpose channel. Every iterate is mapped back to an exactly feasible
//! recovery before its objective is recorded, so the reported value is
//! always attained by a CPTP map.

use crate::codes::Code;
use crate::fidelity::encoded_kraus;
use crate::hilbert::{c64, herm_eig, psd_pinv_sqrt, ComplexMatrix, DEFAULT_CUTOFF};
use crate::noise::NoiseChannel;
use crate::{Error, Result};

/// Largest `d_L·N` the solver accepts.
pub const MAX_SDP_DIM: usize = 128;

#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub data: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(in_dim: usize, out_dim: usize, data: ComplexMatrix) -> Result<Self> {
        let n = in_dim * out_dim;
        if data.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix {:?} for a {in_dim}→{out_dim} channel",
                data.shape()
            )));
        }
        Ok(Self { in_dim, out_dim, data })
    }

    /// `Tr_out C`, an `in × in` matrix.
    pub fn trace_out(&self) -> ComplexMatrix {
        trace_out(&self.data, self.in_dim, self.out_dim)
    }
}

fn trace_out(c: &ComplexMatrix, in_dim: usize, out_dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(in_dim, in_dim, |a, b| {
        (0..out_dim).map(|i| c[(a * out_dim + i, b * out_dim + i)]).sum()
    })
}

/// Choi matrix `Σ_k vec(K_k) vec(K_k)†` of a Kraus list, `vec(K)[a·out+i] = K[i,a]`.
pub fn choi_from_kraus(kraus: &[ComplexMatrix]) -> Result<ChoiMatrix> {
    let Some(first) = kraus.first() else {
        return Err(Error::InvalidParameter("empty Kraus list".into()));
    };
    let (out_dim, in_dim) = first.shape();
    if kraus.iter().any(|k| k.shape() != (out_dim, in_dim)) {
        return Err(Error::DimensionMismatch("Kraus operators of unequal shape".into()));
    }
    let columns: Vec<Vec<_>> = kraus
        .iter()
        .map(|k| (0..in_dim).flat_map(|a| (0..out_dim).map(move |i| k[(i, a)])).collect())
        .collect();
    let v = ComplexMatrix::from_columns(&columns)?;
    ChoiMatrix::new(in_dim, out_dim, &v * &v.adjoint())
}

/// Choi matrix of encoding followed by noise, `d_L → N_out`.
pub fn choi_of_composed(code: &Code, channel: &NoiseChannel) -> Result<ChoiMatrix> {
    choi_from_kraus(&encoded_kraus(code, channel)?)
}

/// `C̃_{[xy],[zw]} = C_{[wz],[yx]}`. An `in → out` Choi matrix becomes an
/// `out → in` one; for a Kraus list `{B_k}` it yields the Choi matrix of
/// `{B_k†}`.
pub fn tilde_map(c: &ChoiMatrix) -> ChoiMatrix {
    let (n_in, n_out) = (c.in_dim, c.out_dim);
    // new layout: first factor has n_out levels, second n_in
    let data = ComplexMatrix::from_fn(n_in * n_out, n_in * n_out, |r, s| {
        let (x, y) = (r / n_in, r % n_in);
        let (z, w) = (s / n_in, s % n_in);
        c.data[(w * n_out + z, y * n_out + x)]
    });
    ChoiMatrix { in_dim: n_out, out_dim: n_in, data }
}

/// `Tr(C_R · C̃_A) / d_L²`.
pub fn choi_fidelity(recovery: &ChoiMatrix, composed: &ChoiMatrix) -> Result<f64> {
    let target = tilde_map(composed);
    if recovery.in_dim != target.in_dim || recovery.out_dim != target.out_dim {
        return Err(Error::DimensionMismatch("recovery does not invert the composed channel".into()));
    }
    let d = composed.in_dim as f64;
    Ok(recovery.data.inner(&target.data) / (d * d))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    pub min_eigenvalue: f64,
    /// `‖Tr_out C − I‖_F`.
    pub tp_residual: f64,
    pub is_cptp: bool,
}

pub fn validate_cptp(c: &ChoiMatrix, tol: f64) -> Result<CptpReport> {
    let min_eigenvalue = herm_eig(&c.data)?.min_eigenvalue();
    let tp = &c.trace_out() - &ComplexMatrix::identity(c.in_dim);
    let tp_residual = crate::hilbert::frobenius_norm(&tp);
    Ok(CptpReport { min_eigenvalue, tp_residual, is_cptp: min_eigenvalue >= -tol && tp_residual <= tol })
}

/// Choi matrix of the transpose channel of `A`, computed from `C_A` alone:
/// Kraus operators `A_k† A(I)^{−1/2}`, completed on the kernel of `A(I)` so
/// that the result is trace preserving.
pub fn transpose_channel_choi(c_a: &ChoiMatrix) -> Result<ChoiMatrix> {
    let (d_l, n) = (c_a.in_dim, c_a.out_dim);
    // A(I) = Σ_k A_k A_k† = Σ_a C[[a i],[a j]]
    let a_of_i = ComplexMatrix::from_fn(n, n, |i, j| (0..d_l).map(|a| c_a.data[(a * n + i, a * n + j)]).sum());
    let s = ComplexMatrix::identity(d_l).kron(&psd_pinv_sqrt(&a_of_i.hermitian_part(), DEFAULT_CUTOFF)?);
    let conj = ChoiMatrix::new(d_l, n, (&(&s * &c_a.data) * &s).hermitian_part())?;
    let mut tc = tilde_map(&conj);
    let rest = &ComplexMatrix::identity(n) - &tc.trace_out();
    let mut vac = ComplexMatrix::zeros(d_l, d_l);
    vac[(0, 0)] = c64(1.0, 0.0);
    tc.data = &tc.data + &rest.hermitian_part().kron(&vac);
    Ok(tc)
}

#[derive(Clone, Debug)]
pub struct SdpOptions {
    /// Bound on `‖C − Z‖_F` between the affine and PSD iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Required objective stability over `window` iterations.
    pub objective_tol: f64,
    pub window: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 50_000, objective_tol: 1e-9, window: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct SdpResult {
    pub f_opt: f64,
    pub choi_recovery: ChoiMatrix,
    pub iterations: usize,
    pub primal_residual: f64,
    pub converged: bool,
    /// Fidelity of the transpose-channel warm start.
    pub warm_start_fidelity: f64,
    /// Upper bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    /// Best feasible objective after each iteration.
    pub objective_history: Vec<f64>,
}

fn project_affine(y: &ComplexMatrix, n_in: usize, n_out: usize) -> ComplexMatrix {
    let excess = &trace_out(y, n_in, n_out) - &ComplexMatrix::identity(n_in);
    y - &excess.kron(&ComplexMatrix::identity(n_out)).scale(1.0 / n_out as f64)
}

fn project_psd(y: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(herm_eig(&y.hermitian_part())?.apply_fn(|l| l.max(0.0)))
}

/// Maps a PSD matrix to a nearby CPTP Choi matrix:
/// `(W⊗I) Z (W⊗I) + Q⊗|0⟩⟨0|` with `W = (Tr_out Z)^{−1/2}` on its support
/// and `Q` the projector onto the rest.
fn repair(z: &ComplexMatrix, n_in: usize, n_out: usize) -> Result<ComplexMatrix> {
    let t = trace_out(z, n_in, n_out);
    let eig = herm_eig(&t.hermitian_part())?;
    let cut = 1e-9 * eig.max_eigenvalue().max(1e-300);
    let w = eig.apply_fn(|l| if l > cut { 1.0 / l.sqrt() } else { 0.0 });
    let q = eig.apply_fn(|l| if l > cut { 0.0 } else { 1.0 });
    let w_full = w.kron(&ComplexMatrix::identity(n_out));
    let mut vac = ComplexMatrix::zeros(n_out, n_out);
    vac[(0, 0)] = c64(1.0, 0.0);
    Ok(&(&(&w_full * z) * &w_full).hermitian_part() + &q.kron(&vac))
}

/// `min_Y Tr Y + n_in·λ_max(X − Y⊗I)⁺` evaluated at the two natural dual
/// estimates; any Hermitian `Y` gives a valid upper bound on `max Tr(XC)`.
fn dual_bound(x: &ComplexMatrix, u: &ComplexMatrix, rho: f64, n_in: usize, n_out: usize) -> Result<f64> {
    let mut best = f64::INFINITY;
    for sign in [-1.0, 1.0] {
        let y = trace_out(&(x + &u.scale(sign * rho)), n_in, n_out).scale(1.0 / n_out as f64).hermitian_part();
        let gap = x - &y.kron(&ComplexMatrix::identity(n_out));
        let lam = herm_eig(&gap.hermitian_part())?.max_eigenvalue().max(0.0);
        best = best.min(y.trace().re + n_in as f64 * lam);
    }
    Ok(best)
}

/// Maximizes `Tr(C_R C̃_A)/d_L²` over CPTP recoveries `C_R`.
pub fn solve_optimal_recovery(c_a: &ChoiMatrix, opts: &SdpOptions) -> Result<SdpResult> {
    let d_l = c_a.in_dim;
    let n = c_a.out_dim;
    if d_l * n > MAX_SDP_DIM {
        return Err(Error::TooLarge(d_l * n, MAX_SDP_DIM));
    }
    let x = tilde_map(c_a).data.hermitian_part();
    let (n_in, n_out) = (n, d_l);
    let norm = (d_l * d_l) as f64;
    let objective = |c: &ComplexMatrix| c.inner(&x) / norm;

    let warm = transpose_channel_choi(c_a)?.data;
    let warm_start_fidelity = objective(&warm);
    let mut best = warm.clone();
    let mut best_obj = warm_start_fidelity;

    let mut rho = 1.0;
    let mut z = warm;
    let mut u = ComplexMatrix::zeros(n_in * n_out, n_in * n_out);
    let mut history = Vec::new();
    let mut primal_residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        iterations = it + 1;
        let c = project_affine(&(&(&z - &u) + &x.scale(1.0 / rho)), n_in, n_out);
        let z_prev = z;
        z = project_psd(&(&c + &u))?;
        let r = &c - &z;
        u = &u + &r;
        primal_residual = crate::hilbert::frobenius_norm(&r);
        let dual_residual = rho * crate::hilbert::frobenius_norm(&(&z - &z_prev));

        let feasible = repair(&z, n_in, n_out)?;
        let obj = objective(&feasible);
        if obj > best_obj {
            best_obj = obj;
            best = feasible;
        }
        history.push(best_obj);

        if primal_residual < opts.tol
            && dual_residual < opts.tol.sqrt()
            && history.len() > opts.window
            && (best_obj - history[history.len() - 1 - opts.window]).abs() < opts.objective_tol
        {
            converged = true;
            break;
        }
        if it % 10 == 9 {
            if primal_residual > 10.0 * dual_residual {
                rho *= 2.0;
                u = u.scale(0.5);
            } else if dual_residual > 10.0 * primal_residual {
                rho /= 2.0;
                u = u.scale(2.0);
            }
        }
    }

    let dual = dual_bound(&x, &u, rho, n_in, n_out)? / norm;
    Ok(SdpResult {
        f_opt: best_obj.clamp(0.0, 1.0),
        choi_recovery: ChoiMatrix::new(n_in, n_out, best)?,
        iterations,
        primal_residual,
        converged,
        warm_start_fidelity,
        dual_bound: dual.max(best_obj),
        objective_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_qubit_code, trivial_code};
    use crate::fidelity::{channel_fidelity, near_optimal_fidelity, transpose_channel_kraus};
    use crate::noise::{amplitude_damping_qubit, tensor_noise, weight_one_pauli, Pauli};
    use crate::qecmat::build_qec_matrix;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    }

    fn random_kraus(n_ops: usize, rows: usize, cols: usize, seed: u64) -> Vec<ComplexMatrix> {
        let mut s = seed;
        (0..n_ops)
            .map(|_| ComplexMatrix::from_fn(rows, cols, |_, _| c64(lcg(&mut s), lcg(&mut s))))
            .collect()
    }

    #[test]
    fn identity_choi_is_maximally_entangled() {
        let c = choi_from_kraus(&[ComplexMatrix::identity(2)]).unwrap();
        assert!((c.data.trace().re - 2.0).abs() < 1e-15);
        let eig = herm_eig(&c.data).unwrap();
        assert!((eig.max_eigenvalue() - 2.0).abs() < 1e-14);
        assert!(eig.eigenvalues[..3].iter().all(|l| l.abs() < 1e-14));
        let report = validate_cptp(&c, 1e-12).unwrap();
        assert!(report.is_cptp && report.tp_residual == 0.0);
    }

    #[test]
    fn composed_damping_is_cptp_with_bounded_rank() {
        let code = build_qubit_code("repetition(3)").unwrap();
        let ch = tensor_noise(&amplitude_damping_qubit(0.3).unwrap(), 3, 3, 1e-14).unwrap();
        let c = choi_of_composed(&code, &ch).unwrap();
        assert!(validate_cptp(&c, 1e-10).unwrap().is_cptp);
        let eig = herm_eig(&c.data).unwrap();
        let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-12).count();
        assert!(rank <= ch.n_kraus());
    }

    #[test]
    fn tilde_is_hermitian_involution() {
        let c = choi_from_kraus(&random_kraus(3, 3, 2, 7)).unwrap();
        let t = tilde_map(&c);
        assert_eq!((t.in_dim, t.out_dim), (3, 2));
        assert!(t.data.hermiticity_defect() < 1e-15);
        let back = tilde_map(&t);
        assert_eq!((back.in_dim, back.out_dim), (2, 3));
        assert!((&back.data - &c.data).max_abs() == 0.0);
    }

    #[test]
    fn tilde_pairing_matches_kraus_fidelity() {
        for seed in 1..4 {
            let forward = random_kraus(2, 3, 2, seed);
            let recovery = random_kraus(3, 2, 3, seed + 100);
            let direct = channel_fidelity(&recovery, &forward, 2).unwrap();
            let via_choi = choi_fidelity(&choi_from_kraus(&recovery).unwrap(), &choi_from_kraus(&forward).unwrap()).unwrap();
            assert!((direct - via_choi).abs() < 1e-10 * direct.max(1.0));
        }
    }

    #[test]
    fn transpose_channel_choi_matches_kraus_route() {
        let code = build_qubit_code("leung4").unwrap();
        let ch = tensor_noise(&amplitude_damping_qubit(0.1).unwrap(), 4, 2, 1.0).unwrap();
        let m = build_qec_matrix(&code, &ch).unwrap();
        let kraus = transpose_channel_kraus(&m, &code, &ch).unwrap();
        let from_kraus = choi_from_kraus(&kraus).unwrap();
        let c_a = choi_of_composed(&code, &ch).unwrap();
        let tc = transpose_channel_choi(&c_a).unwrap();
        assert!(validate_cptp(&tc, 1e-9).unwrap().is_cptp);
        let f_tc = choi_fidelity(&tc, &c_a).unwrap();
        let f_kraus = choi_fidelity(&from_kraus, &c_a).unwrap();
        assert!((f_tc - f_kraus).abs() < 1e-10);
        assert!((f_tc - near_optimal_fidelity(&m).unwrap().near_optimal).abs() < 1e-10);
    }

    #[test]
    fn validate_flags_non_psd() {
        let h = ComplexMatrix::from_real_row_major(2, 2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        let c = ChoiMatrix::new(1, 2, h).unwrap();
        let report = validate_cptp(&c, 1e-9).unwrap();
        assert!(!report.is_cptp && report.min_eigenvalue < -0.9);
    }

    #[test]
    fn repair_produces_cptp() {
        let k = random_kraus(3, 2, 4, 11);
        let z = choi_from_kraus(&k).unwrap();
        let fixed = ChoiMatrix::new(4, 2, repair(&z.data, 4, 2).unwrap()).unwrap();
        let report = validate_cptp(&fixed, 1e-10).unwrap();
        assert!(report.is_cptp, "{report:?}");
    }

    #[test]
    fn exact_code_reaches_unit_fidelity() {
        let code = build_qubit_code("repetition(3)").unwrap();
        let ch = weight_one_pauli(3, Pauli::X, 0.1).unwrap();
        let res = solve_optimal_recovery(&choi_of_composed(&code, &ch).unwrap(), &SdpOptions::default()).unwrap();
        assert!((res.f_opt - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trivial_damping_within_bounds() {
        let p: f64 = 0.3;
        let code = trivial_code().unwrap();
        let ch = amplitude_damping_qubit(p).unwrap();
        let f_tilde = 0.25 * ((1.0 / (1.0 + p).sqrt() + (1.0 - p).sqrt()).powi(2) + p * p / (1.0 + p));
        let res = solve_optimal_recovery(&choi_of_composed(&code, &ch).unwrap(), &SdpOptions::default()).unwrap();
        assert!(res.converged, "iterations {}", res.iterations);
        assert!(f_tilde - 1e-9 <= res.f_opt && res.f_opt <= (1.0 + f_tilde) / 2.0);
        assert!(res.f_opt >= res.warm_start_fidelity);
        assert!(res.dual_bound - res.f_opt < 1e-5, "gap {}", res.dual_bound - res.f_opt);
        assert!(res.objective_history.windows(2).all(|w| w[1] >= w[0]));
        assert!(validate_cptp(&res.choi_recovery, 1e-9).unwrap().is_cptp);
    }

    #[test]
    fn size_guard() {
        let code = build_qubit_code("repetition(7)").unwrap();
        let ch = NoiseChannel::from_dense("id", vec![ComplexMatrix::identity(128)]).unwrap();
        let c = choi_of_composed(&code, &ch).unwrap();
        assert!(matches!(solve_optimal_recovery(&c, &SdpOptions::default()), Err(Error::TooLarge(256, 128))));
    }
}

use proptest::prelude::*;

use qecfid::codes::{Code, CodeFamily};
use qecfid::fidelity::{
    channel_fidelity, encoded_kraus, near_optimal_fidelity, near_optimal_fidelity_nonorthonormal,
    transpose_channel_kraus,
};
use qecfid::hilbert::{c64, herm_eig, psd_pinv_sqrt, psd_sqrt, ComplexMatrix, DEFAULT_CUTOFF};
use qecfid::noise::NoiseChannel;
use qecfid::qecmat::build_qec_matrix;
use qecfid::recovery_sdp::{choi_of_composed, solve_optimal_recovery, SdpOptions};
use qecfid::Complex64;

fn complex_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |i, j| {
        let k = 2 * (i * cols + j);
        c64(entries[k], entries[k + 1])
    })
}

/// `G (G†G)^{−1/2}`, an isometry when `G` has full column rank.
fn polar_isometry(g: &ComplexMatrix) -> ComplexMatrix {
    g * &psd_pinv_sqrt(&g.adjoint_mul(g), 1e-14).unwrap()
}

fn random_channel(d_in: usize, d_out: usize, n_kraus: usize, entries: &[f64]) -> NoiseChannel {
    let stacked = polar_isometry(&complex_matrix(n_kraus * d_out, d_in, entries));
    let kraus = (0..n_kraus)
        .map(|k| {
            let rows: Vec<usize> = (k * d_out..(k + 1) * d_out).collect();
            stacked.select(&rows, &(0..d_in).collect::<Vec<_>>())
        })
        .collect();
    NoiseChannel::from_dense("random", kraus).unwrap()
}

fn random_code(n: usize, d_l: usize, entries: &[f64]) -> Code {
    let iso = polar_isometry(&complex_matrix(n, d_l, entries));
    Code::new(CodeFamily::Custom { label: "random".into(), bosonic: false }, iso, 0.0).unwrap()
}

/// `(n, d_l, d_out, n_kraus)` with enough random numbers for a code and a channel.
fn instance() -> impl Strategy<Value = (usize, usize, usize, usize, Vec<f64>, Vec<f64>)> {
    (2usize..=4, 0usize..=1, 1usize..=4).prop_flat_map(|(n, extra, n_kraus)| {
        let d_l = 2;
        let d_out = n + extra;
        (
            Just(n),
            Just(d_l),
            Just(d_out),
            Just(n_kraus),
            prop::collection::vec(-1.0f64..1.0, 2 * n * d_l),
            prop::collection::vec(-1.0f64..1.0, 2 * n_kraus * d_out * n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qec_matrix_is_the_brute_force_contraction((n, d_l, d_out, nk, ce, ke) in instance()) {
        let code = random_code(n, d_l, &ce);
        let ch = random_channel(n, d_out, nk, &ke);
        let m = build_qec_matrix(&code, &ch).unwrap();
        let dense = ch.dense_kraus();
        for mu in 0..d_l {
            for nu in 0..d_l {
                for l in 0..nk {
                    for k in 0..nk {
                        let mut want = Complex64::new(0.0, 0.0);
                        for a in 0..d_out {
                            let left: Complex64 = (0..n).map(|i| dense[l][(a, i)] * code.isometry[(i, mu)]).sum();
                            let right: Complex64 = (0..n).map(|j| dense[k][(a, j)] * code.isometry[(j, nu)]).sum();
                            want += left.conj() * right;
                        }
                        prop_assert!((m.data[(mu * nk + l, nu * nk + k)] - want).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn near_optimal_fidelity_ignores_kraus_mixing((n, d_l, d_out, nk, ce, ke) in instance(), ue in prop::collection::vec(-1.0f64..1.0, 32)) {
        let code = random_code(n, d_l, &ce);
        let ch = random_channel(n, d_out, nk, &ke);
        let u = polar_isometry(&complex_matrix(nk, nk, &ue));
        let dense = ch.dense_kraus();
        let mixed: Vec<ComplexMatrix> = (0..nk)
            .map(|k| {
                let mut acc = ComplexMatrix::zeros(d_out, n);
                for (l, kl) in dense.iter().enumerate() {
                    acc = &acc + &kl.scale_complex(u[(l, k)]);
                }
                acc
            })
            .collect();
        let ch2 = NoiseChannel::from_dense("mixed", mixed).unwrap();
        let f1 = near_optimal_fidelity(&build_qec_matrix(&code, &ch).unwrap()).unwrap().near_optimal;
        let f2 = near_optimal_fidelity(&build_qec_matrix(&code, &ch2).unwrap()).unwrap().near_optimal;
        prop_assert!((f1 - f2).abs() < 1e-10, "{f1} vs {f2}");
        prop_assert!((0.0..=1.0).contains(&f1));
    }

    #[test]
    fn transpose_channel_attains_near_optimal_fidelity((n, d_l, d_out, nk, ce, ke) in instance()) {
        let code = random_code(n, d_l, &ce);
        let ch = random_channel(n, d_out, nk, &ke);
        let m = build_qec_matrix(&code, &ch).unwrap();
        let f = near_optimal_fidelity(&m).unwrap().near_optimal;
        let r = transpose_channel_kraus(&m, &code, &ch).unwrap();
        let a = encoded_kraus(&code, &ch).unwrap();
        let via_kraus = channel_fidelity(&r, &a, d_l).unwrap();
        prop_assert!((f - via_kraus).abs() < 1e-9, "{f} vs {via_kraus}");
    }

    #[test]
    fn overlap_formula_equals_orthonormalized_code((n, d_l, d_out, nk, _ce, ke) in instance(), raw in prop::collection::vec(-1.0f64..1.0, 16)) {
        let cols: Vec<Vec<Complex64>> = (0..d_l)
            .map(|mu| {
                let v: Vec<Complex64> = (0..n).map(|i| c64(raw[2 * (mu * n + i)], raw[2 * (mu * n + i) + 1])).collect();
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.iter().map(|z| z / norm).collect()
            })
            .collect();
        let iso = ComplexMatrix::from_columns(&cols).unwrap();
        let overlap = iso.adjoint_mul(&iso);
        prop_assume!(herm_eig(&overlap).unwrap().min_eigenvalue() > 0.05);
        let code = Code::new(CodeFamily::Custom { label: "skew".into(), bosonic: false }, iso, 0.0).unwrap();
        let ch = random_channel(n, d_out, nk, &ke);
        let f_overlap = near_optimal_fidelity_nonorthonormal(&build_qec_matrix(&code, &ch).unwrap(), &code.overlap)
            .unwrap()
            .near_optimal;
        let ortho = code.orthonormalized().unwrap();
        let f_ortho = near_optimal_fidelity(&build_qec_matrix(&ortho, &ch).unwrap()).unwrap().near_optimal;
        prop_assert!((f_overlap - f_ortho).abs() < 1e-10, "{f_overlap} vs {f_ortho}");
    }

    #[test]
    fn psd_square_root_squares_back(dim in 1usize..6, entries in prop::collection::vec(-1.0f64..1.0, 72)) {
        let a = complex_matrix(dim, dim, &entries);
        let h = a.adjoint_mul(&a);
        let root = psd_sqrt(&h, DEFAULT_CUTOFF).unwrap();
        prop_assert!(root.hermiticity_defect() < 1e-12);
        prop_assert!((&(&root * &root) - &h).max_abs() < 1e-10);
        prop_assert!(herm_eig(&root).unwrap().min_eigenvalue() > -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimal_recovery_lies_inside_the_bounds((n, d_l, d_out, nk, ce, ke) in instance()) {
        let code = random_code(n, d_l, &ce);
        let ch = random_channel(n, d_out, nk, &ke);
        let report = near_optimal_fidelity(&build_qec_matrix(&code, &ch).unwrap()).unwrap();
        let sdp = solve_optimal_recovery(&choi_of_composed(&code, &ch).unwrap(), &SdpOptions::default()).unwrap();
        prop_assert!(report.brackets(sdp.f_opt, 1e-6), "F̃ {} F_opt {}", report.near_optimal, sdp.f_opt);
        prop_assert!(sdp.f_opt <= sdp.dual_bound + 1e-9);
    }
}

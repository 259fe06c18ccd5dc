use qecfid::codes::{build_gkp_square, gkp_delta_for_mean, mean_excitation, Code, CodeFamily};
use qecfid::fidelity::{analyze, near_optimal_fidelity, near_optimal_fidelity_nonorthonormal, PerturbativeMode};
use qecfid::hilbert::{inner, ComplexMatrix};
use qecfid::noise::pure_loss_for_code;
use qecfid::qecmat::build_qec_matrix;
use qecfid::Complex64;

/// Classical Gram–Schmidt on the codeword columns.
fn gram_schmidt(code: &Code) -> Code {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for mu in 0..code.logical_dim() {
        let mut v = code.codeword(mu);
        for b in &basis {
            let c = inner(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        basis.push(v.iter().map(|z| z / norm).collect());
    }
    let iso = ComplexMatrix::from_columns(&basis).unwrap();
    Code::new(CodeFamily::Custom { label: "gkp-gs".into(), bosonic: true }, iso, code.truncation_loss).unwrap()
}

#[test]
fn overlap_corrected_fidelity_matches_gram_schmidt_basis() {
    for delta in [0.4, 0.5] {
        let raw = build_gkp_square(delta, None, None, false).unwrap();
        assert!(!raw.is_orthonormal(1e-6), "Δ={delta} codewords should overlap");
        let ch = pure_loss_for_code(0.1, &raw).unwrap();
        let corrected = near_optimal_fidelity_nonorthonormal(&build_qec_matrix(&raw, &ch).unwrap(), &raw.overlap)
            .unwrap()
            .near_optimal;
        let gs = gram_schmidt(&raw);
        let oracle = near_optimal_fidelity(&build_qec_matrix(&gs, &ch).unwrap()).unwrap().near_optimal;
        assert!((corrected - oracle).abs() < 1e-10, "Δ={delta}: {corrected} vs {oracle}");
        let naive = near_optimal_fidelity(&build_qec_matrix(&raw, &ch).unwrap()).unwrap().near_optimal;
        assert!((naive - oracle).abs() > 1e-6, "overlap correction should matter at Δ={delta}");
    }
}

#[test]
fn infidelity_under_loss_decreases_with_energy_and_matches_expansion() {
    let mut prev = f64::INFINITY;
    for nbar in [3.0, 5.0, 7.0, 10.0, 15.0, 20.0] {
        let delta = gkp_delta_for_mean(nbar).unwrap();
        let code = build_gkp_square(delta, None, None, false).unwrap();
        assert!((mean_excitation(&code).unwrap() - nbar).abs() < 1e-6);
        let ch = pure_loss_for_code(0.1, &code).unwrap();
        let report = analyze(&code, &ch, PerturbativeMode::DiagTruncation).unwrap();
        let infid = report.infidelity();
        let pert = report.perturbative_infidelity.unwrap();
        assert!(infid < 1e-2 && (pert - infid).abs() <= 0.1 * infid, "n̄={nbar}: exact {infid}, perturbative {pert}");
        assert!(infid < prev, "n̄={nbar}: {infid} not below {prev}");
        prev = infid;
    }
}

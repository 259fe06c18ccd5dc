use qecfid::analytic::{thermo_infidelity, thermo_near_optimal_l, thermo_two_erasure, ThermoParams};
use qecfid::codes::build_thermo;
use qecfid::fidelity::near_optimal_fidelity;
use qecfid::noise::erasure_first_l;
use qecfid::qecmat::build_qec_matrix;

fn pipeline_infidelity(n: u64, d: u64, l: u64, p: f64) -> f64 {
    let code = build_thermo(n as usize, d as usize, None).unwrap();
    let channel = erasure_first_l(n as usize, l as usize, p).unwrap();
    let m = build_qec_matrix(&code, &channel).unwrap();
    near_optimal_fidelity(&m).unwrap().infidelity()
}

fn valid(n: u64, d: u64, l: u64) -> bool {
    ThermoParams::new(n, d, l, 1.0).is_ok()
}

#[test]
fn closed_form_matches_hilbert_space_for_small_codes() {
    let mut checked = 0;
    for n in 3..=12u64 {
        for l in 1..=2u64 {
            for d in (l + 1)..=6 {
                if !valid(n, d, l) {
                    continue;
                }
                let closed = 1.0 - thermo_near_optimal_l(n, d, l).unwrap();
                let numeric = pipeline_infidelity(n, d, l, 1.0);
                assert!((closed - numeric).abs() < 1e-10, "N={n} d={d} l={l}: {closed} vs {numeric}");
                checked += 1;
            }
        }
    }
    assert!(checked >= 15, "only {checked} instances");
}

#[test]
fn closed_form_matches_hilbert_space_below_certain_erasure() {
    for (n, d, l) in [(7u64, 2u64, 1u64), (10, 4, 2), (10, 4, 1), (11, 6, 2)] {
        for p in [0.05, 0.4, 0.9] {
            let closed = thermo_infidelity(&ThermoParams::new(n, d, l, p).unwrap()).unwrap();
            let numeric = pipeline_infidelity(n, d, l, p);
            assert!((closed - numeric).abs() < 1e-10, "N={n} d={d} l={l} p={p}: {closed} vs {numeric}");
        }
    }
}

#[test]
fn two_erasure_formula_matches_hilbert_space() {
    for p in [0.1, 0.5, 1.0] {
        let dedicated = 1.0 - thermo_two_erasure(11, 6, p).unwrap();
        let numeric = pipeline_infidelity(11, 6, 2, p);
        assert!((dedicated - numeric).abs() < 1e-10, "p={p}: {dedicated} vs {numeric}");
    }
}

//! Checks `F̃ ≤ F_opt ≤ (1 + F̃)/2` on every point of a run.

use crate::config::{describe, ExperimentConfig, Method};
use crate::runner::RunOutput;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub point: String,
    pub near_optimal: f64,
    pub f_opt: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundSummary {
    pub checked: usize,
    pub skipped: Vec<(usize, String)>,
    pub violations: Vec<Violation>,
}

impl BoundSummary {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.skipped.is_empty() && self.checked > 0
    }

    pub fn report(&self) -> String {
        let mut lines = vec![format!(
            "checked {} point(s): {} violation(s), {} skipped",
            self.checked,
            self.violations.len(),
            self.skipped.len()
        )];
        for v in &self.violations {
            lines.push(format!(
                "  VIOLATION point {} [{}]: F~ = {:.9}, F_opt = {:.9}, allowed [{:.9}, {:.9}]",
                v.index,
                v.point,
                v.near_optimal,
                v.f_opt,
                v.near_optimal,
                (1.0 + v.near_optimal) / 2.0
            ));
        }
        for (i, why) in &self.skipped {
            lines.push(format!("  skipped point {i}: {why}"));
        }
        lines.push(if self.passed() { "PASS".into() } else { "FAIL".into() });
        lines.join("\n")
    }
}

pub fn require_methods(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if !(cfg.has(Method::Exact) && cfg.has(Method::Sdp)) {
        return Err(CliError::Config("verify-bounds needs both `exact` and `sdp` in experiment.methods".into()));
    }
    Ok(())
}

/// Bound check on computed rows, `tol` on either side.
pub fn check_bounds(run: &RunOutput, tol: f64) -> BoundSummary {
    let mut summary = BoundSummary::default();
    for r in &run.results {
        if let Some(err) = &r.error {
            summary.skipped.push((r.point.index, err.clone()));
            continue;
        }
        let (Some(f), Some(f_opt)) = (r.get(&run.columns, "near_optimal"), r.get(&run.columns, "f_opt")) else {
            summary.skipped.push((r.point.index, "missing near_optimal or f_opt".into()));
            continue;
        };
        summary.checked += 1;
        if !(f - tol <= f_opt && f_opt <= (1.0 + f) / 2.0 + tol) {
            summary.violations.push(Violation { index: r.point.index, point: describe(&r.point), near_optimal: f, f_opt });
        }
    }
    summary
}

pub fn verify_bounds(cfg: &ExperimentConfig, workers: Option<usize>, tol: f64) -> Result<(RunOutput, BoundSummary), CliError> {
    require_methods(cfg)?;
    let run = crate::runner::run_experiment(cfg, workers)?;
    let summary = check_bounds(&run, tol);
    Ok((run, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;
    use crate::runner::Cell;

    const REP3_FLIP: &str = r#"
[experiment]
name = "rep3"
methods = ["exact", "sdp"]
[code]
family = "repetition"
n = 3
[channel]
family = "flip"
pauli = "X"
q = [0.05, 0.2]
"#;

    #[test]
    fn exact_code_passes_with_unit_fidelity() {
        let cfg = parse(REP3_FLIP).unwrap();
        let (run, summary) = verify_bounds(&cfg, Some(2), 1e-6).unwrap();
        assert!(summary.passed(), "{}", summary.report());
        for r in &run.results {
            assert!((r.get(&run.columns, "near_optimal").unwrap() - 1.0).abs() < 1e-9);
            assert!((r.get(&run.columns, "f_opt").unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn corrupted_near_optimal_value_fails() {
        let cfg = parse(REP3_FLIP).unwrap();
        let (mut run, _) = verify_bounds(&cfg, Some(1), 1e-6).unwrap();
        let cols = run.columns.clone();
        run.results[1].set(&cols, "near_optimal", Cell::Float(0.5));
        let summary = check_bounds(&run, 1e-6);
        assert!(!summary.passed());
        assert_eq!(summary.violations.len(), 1);
        assert_eq!(summary.violations[0].index, 1);
        assert!(summary.report().contains("VIOLATION point 1"));
    }

    #[test]
    fn needs_both_methods() {
        let cfg = parse(&REP3_FLIP.replace("[\"exact\", \"sdp\"]", "[\"exact\"]")).unwrap();
        assert!(matches!(verify_bounds(&cfg, None, 1e-6), Err(CliError::Config(_))));
    }
}

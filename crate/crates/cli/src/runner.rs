//! Executes a sweep: one row per point, in sweep order.

use rayon::prelude::*;

use qecfid::analytic::{
    gkp_ad_infidelity, gkp_asymptotic_infidelity, thermo_infidelity, thermo_leading_order, ThermoParams,
};
use qecfid::codes::{
    build_binomial, build_cat, build_gkp_square, build_thermo, gkp_delta_for_mean, leung4, mean_excitation,
    repetition, shor9, steane7, trivial_code, Code,
};
use qecfid::fidelity::{
    near_optimal_fidelity, near_optimal_fidelity_nonorthonormal, perturbative_infidelity, perturbative_parts,
};
use qecfid::noise::{
    amplitude_damping_qubit, erasure_first_l, pauli_channel, pure_loss_for_code, tensor_noise, weight_one_pauli,
    NoiseChannel, Pauli,
};
use qecfid::qecmat::{build_qec_matrix, kl_check, overlap_symmetrized, QecMatrix};
use qecfid::recovery_sdp::{choi_of_composed, solve_optimal_recovery, SdpOptions, SdpResult};

use crate::config::{qubit_count, ExperimentConfig, Method, ParamValue, Point};
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Empty,
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }
}

impl From<&ParamValue> for Cell {
    fn from(v: &ParamValue) -> Self {
        match v {
            ParamValue::Int(i) => Cell::Int(*i),
            ParamValue::Float(x) => Cell::Float(*x),
            ParamValue::Bool(b) => Cell::Bool(*b),
            ParamValue::Text(s) => Cell::Text(s.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub point: Point,
    /// Aligned with [`result_columns`].
    pub values: Vec<Cell>,
    pub error: Option<String>,
}

impl PointResult {
    pub fn get(&self, columns: &[&str], name: &str) -> Option<f64> {
        let i = columns.iter().position(|c| *c == name)?;
        self.values[i].as_f64()
    }

    pub fn set(&mut self, columns: &[&str], name: &str, cell: Cell) {
        if let Some(i) = columns.iter().position(|c| *c == name) {
            self.values[i] = cell;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub columns: Vec<&'static str>,
    pub results: Vec<PointResult>,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Output columns for the requested methods, in a fixed order.
pub fn result_columns(cfg: &ExperimentConfig) -> Vec<&'static str> {
    let mut cols = vec!["d_phys", "n_kraus", "completeness_defect"];
    if cfg.is_bosonic() {
        cols.push("mean_excitation");
    }
    for m in &cfg.methods {
        match m {
            Method::Exact => cols.extend(["near_optimal", "infidelity", "bound_hi", "kl_residual", "dropped"]),
            Method::Perturbative => cols.push("perturbative_infidelity"),
            Method::Sdp => cols.extend([
                "f_opt",
                "sdp_infidelity",
                "sdp_dual_bound",
                "sdp_iterations",
                "sdp_converged",
                "warm_start_fidelity",
            ]),
            Method::Analytic => match cfg.code_family.as_str() {
                "gkp" => cols.extend(["asymptotic_infidelity", "ad_infidelity"]),
                _ => cols.extend(["analytic_infidelity", "leading_order"]),
            },
        }
    }
    cols
}

fn int(point: &Point, name: &str) -> Result<Option<i64>, String> {
    match point.get(name) {
        None => Ok(None),
        Some(ParamValue::Int(i)) => Ok(Some(*i)),
        Some(other) => Err(format!("{name} must be an integer, got {other:?}")),
    }
}

fn count(point: &Point, name: &str) -> Result<Option<usize>, String> {
    match int(point, name)? {
        Some(i) if i < 0 => Err(format!("{name} = {i} must be non-negative")),
        other => Ok(other.map(|i| i as usize)),
    }
}

fn float(point: &Point, name: &str) -> Result<Option<f64>, String> {
    Ok(point.get(name).and_then(ParamValue::as_f64))
}

fn need<T>(v: Result<Option<T>, String>, name: &str) -> Result<T, String> {
    v?.ok_or_else(|| format!("{name} missing"))
}

pub fn build_code(point: &Point) -> Result<Code, String> {
    let e = |err: qecfid::Error| err.to_string();
    match point.code_family.as_str() {
        "trivial" => trivial_code().map_err(e),
        "repetition" => repetition(need(count(point, "code.n"), "code.n")?).map_err(e),
        "leung4" => leung4().map_err(e),
        "shor9" => shor9().map_err(e),
        "steane7" => steane7().map_err(e),
        "cat" => build_cat(
            need(float(point, "code.alpha"), "code.alpha")?,
            need(count(point, "code.s"), "code.s")?,
            count(point, "code.cutoff")?,
        )
        .map_err(e),
        "binomial" => build_binomial(
            need(count(point, "code.s"), "code.s")?,
            need(count(point, "code.n_deph"), "code.n_deph")?,
            count(point, "code.cutoff")?,
        )
        .map_err(e),
        "gkp" => {
            let delta = match (float(point, "code.delta")?, float(point, "code.nbar")?) {
                (Some(d), _) => d,
                (None, Some(n)) => gkp_delta_for_mean(n).map_err(e)?,
                (None, None) => return Err("gkp needs delta or nbar".into()),
            };
            let ortho = matches!(point.get("code.orthonormalize"), Some(ParamValue::Bool(true)));
            build_gkp_square(delta, count(point, "code.cutoff")?, None, ortho).map_err(e)
        }
        "thermo" => build_thermo(
            need(count(point, "code.N"), "code.N")?,
            need(count(point, "code.d"), "code.d")?,
            int(point, "code.m0")?,
        )
        .map_err(e),
        other => Err(format!("unknown code family `{other}`")),
    }
}

pub fn build_channel(point: &Point, code: &Code) -> Result<NoiseChannel, String> {
    let e = |err: qecfid::Error| err.to_string();
    let qubits = || {
        qubit_count(&point.code_family, point)
            .ok_or_else(|| format!("{} noise needs a qubit code, not {}", point.channel_family, point.code_family))
    };
    let tensor = |single: NoiseChannel| -> Result<NoiseChannel, String> {
        let n = qubits()?;
        let w = count(point, "channel.max_weight")?.unwrap_or(n).min(n);
        let defect = float(point, "channel.max_defect")?.unwrap_or(1.0);
        if n == 1 {
            return Ok(single);
        }
        tensor_noise(&single, n, w, defect).map_err(e)
    };
    match point.channel_family.as_str() {
        "damping" => tensor(amplitude_damping_qubit(need(float(point, "channel.p"), "channel.p")?).map_err(e)?),
        "pauli" => tensor(
            pauli_channel(
                float(point, "channel.px")?.unwrap_or(0.0),
                float(point, "channel.py")?.unwrap_or(0.0),
                float(point, "channel.pz")?.unwrap_or(0.0),
            )
            .map_err(e)?,
        ),
        "flip" => {
            let pauli = match point.get("channel.pauli") {
                None => Pauli::X,
                Some(ParamValue::Text(s)) => match s.as_str() {
                    "X" | "x" => Pauli::X,
                    "Y" | "y" => Pauli::Y,
                    "Z" | "z" => Pauli::Z,
                    other => return Err(format!("unknown Pauli `{other}`")),
                },
                Some(other) => return Err(format!("channel.pauli must be X, Y or Z, got {other:?}")),
            };
            weight_one_pauli(qubits()?, pauli, need(float(point, "channel.q"), "channel.q")?).map_err(e)
        }
        "loss" => pure_loss_for_code(need(float(point, "channel.gamma"), "channel.gamma")?, code).map_err(e),
        "erasure" => erasure_first_l(
            qubits()?,
            need(count(point, "channel.l"), "channel.l")?,
            float(point, "channel.p")?.unwrap_or(1.0),
        )
        .map_err(e),
        other => Err(format!("unknown channel family `{other}`")),
    }
}

/// The QEC matrix with any codeword overlap removed, ready for the
/// orthonormal formulas.
pub fn effective_qec_matrix(code: &Code, m: &QecMatrix) -> Result<QecMatrix, String> {
    if code.is_orthonormal(1e-12) {
        Ok(m.clone())
    } else {
        overlap_symmetrized(m, &code.overlap).map_err(|e| e.to_string())
    }
}

pub fn sdp_options(cfg: &ExperimentConfig) -> SdpOptions {
    SdpOptions { tol: cfg.tolerances.sdp_tol, max_iter: cfg.tolerances.sdp_max_iter, ..SdpOptions::default() }
}

pub fn solve_sdp(cfg: &ExperimentConfig, code: &Code, channel: &NoiseChannel) -> Result<SdpResult, String> {
    let c_a = choi_of_composed(code, channel).map_err(|e| e.to_string())?;
    solve_optimal_recovery(&c_a, &sdp_options(cfg)).map_err(|e| e.to_string())
}

fn fill(cfg: &ExperimentConfig, point: &Point, columns: &[&'static str], row: &mut PointResult) -> Result<(), String> {
    let code = build_code(point)?;
    let channel = build_channel(point, &code)?;
    row.set(columns, "d_phys", Cell::Int(code.physical_dim() as i64));
    row.set(columns, "n_kraus", Cell::Int(channel.n_kraus() as i64));
    row.set(columns, "completeness_defect", Cell::Float(channel.completeness_defect));
    if cfg.is_bosonic() {
        row.set(columns, "mean_excitation", Cell::Float(mean_excitation(&code).map_err(|e| e.to_string())?));
    }

    let needs_matrix = cfg.has(Method::Exact) || cfg.has(Method::Perturbative);
    if needs_matrix {
        let m = build_qec_matrix(&code, &channel).map_err(|e| e.to_string())?;
        let sym = effective_qec_matrix(&code, &m)?;
        if cfg.has(Method::Exact) {
            let report = if code.is_orthonormal(1e-12) {
                near_optimal_fidelity(&m)
            } else {
                near_optimal_fidelity_nonorthonormal(&m, &code.overlap)
            }
            .map_err(|e| e.to_string())?;
            row.set(columns, "near_optimal", Cell::Float(report.near_optimal));
            row.set(columns, "infidelity", Cell::Float(report.infidelity()));
            row.set(columns, "bound_hi", Cell::Float(report.bound_hi));
            row.set(columns, "kl_residual", Cell::Float(kl_check(&sym, cfg.tolerances.kl_tol).residual));
            row.set(columns, "dropped", Cell::Int(report.dropped_subspaces as i64));
        }
        if cfg.has(Method::Perturbative) {
            let parts = perturbative_parts(&sym, cfg.perturbative_mode, cfg.tolerances.perturbative_cutoff)
                .map_err(|e| e.to_string())?;
            row.set(columns, "perturbative_infidelity", Cell::Float(perturbative_infidelity(&parts)));
        }
    }

    if cfg.has(Method::Sdp) {
        let sdp = solve_sdp(cfg, &code, &channel)?;
        row.set(columns, "f_opt", Cell::Float(sdp.f_opt));
        row.set(columns, "sdp_infidelity", Cell::Float(1.0 - sdp.f_opt));
        row.set(columns, "sdp_dual_bound", Cell::Float(sdp.dual_bound));
        row.set(columns, "sdp_iterations", Cell::Int(sdp.iterations as i64));
        row.set(columns, "sdp_converged", Cell::Bool(sdp.converged));
        row.set(columns, "warm_start_fidelity", Cell::Float(sdp.warm_start_fidelity));
    }

    if cfg.has(Method::Analytic) {
        match cfg.code_family.as_str() {
            "thermo" => {
                let n = need(count(point, "code.N"), "code.N")? as u64;
                let d = need(count(point, "code.d"), "code.d")? as u64;
                let l = need(count(point, "channel.l"), "channel.l")? as u64;
                let p = float(point, "channel.p")?.unwrap_or(1.0);
                let params = match int(point, "code.m0")? {
                    None => ThermoParams::new(n, d, l, p).map_err(|e| e.to_string())?,
                    Some(m0) => ThermoParams { n, d, l, p, m0 },
                };
                row.set(columns, "analytic_infidelity", Cell::Float(thermo_infidelity(&params).map_err(|e| e.to_string())?));
                row.set(columns, "leading_order", Cell::Float(p * thermo_leading_order(n, d, l)));
            }
            "gkp" => {
                let gamma = need(float(point, "channel.gamma"), "channel.gamma")?;
                row.set(columns, "asymptotic_infidelity", Cell::Float(gkp_asymptotic_infidelity(gamma).map_err(|e| e.to_string())?));
                row.set(columns, "ad_infidelity", Cell::Float(gkp_ad_infidelity(gamma).map_err(|e| e.to_string())?));
            }
            other => return Err(format!("no closed form for {other}")),
        }
    }
    Ok(())
}

pub fn run_point(cfg: &ExperimentConfig, point: &Point, columns: &[&'static str]) -> PointResult {
    let mut row = PointResult { point: point.clone(), values: vec![Cell::Empty; columns.len()], error: None };
    if let Err(msg) = fill(cfg, point, columns, &mut row) {
        row.error = Some(msg);
    }
    row
}

/// Runs every point on up to `workers` threads; rows come back in sweep
/// order whatever the completion order.
pub fn run_experiment(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let columns = result_columns(cfg);
    let points = cfg.points();
    let threads = workers.or(cfg.workers).unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Numeric(format!("cannot start worker pool: {e}")))?;
    let results = pool.install(|| points.par_iter().map(|p| run_point(cfg, p, &columns)).collect());
    Ok(RunOutput { columns, results })
}

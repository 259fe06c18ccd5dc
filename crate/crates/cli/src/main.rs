use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qecfid::analytic::{gkp_ad_infidelity, gkp_asymptotic_infidelity, thermo_infidelity, thermo_leading_order, ThermoParams};
use qecfid::qecmat::build_qec_matrix;
use qecfid_cli::config::{self, ExperimentConfig, Method};
use qecfid_cli::runner::{self, Cell, RunOutput};
use qecfid_cli::{svg, table, verify, CliError};

#[derive(Parser)]
#[command(name = "qecfid", version, about = "Near-optimal channel fidelity of quantum error correction codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single code/channel instance.
    Fidelity {
        #[command(flatten)]
        common: Common,
        /// Write the QEC matrix as `i,j,re,im` rows.
        #[arg(long)]
        dump_qec: Option<PathBuf>,
    },
    /// Run every point of a config's sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// SVG plot path; overrides `output.svg`.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Optimal recovery by semidefinite programming for a single instance.
    Sdp {
        #[command(flatten)]
        common: Common,
        /// Solver residual tolerance; overrides `tolerances.sdp_tol`.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the recovery Choi matrix as `i,j,re,im` rows.
        #[arg(long)]
        choi: Option<PathBuf>,
    },
    /// Closed-form thermodynamic-code infidelity under erasures.
    Thermo {
        #[arg(long, default_value_t = 6)]
        n_min: u64,
        #[arg(long, default_value_t = 14)]
        n_max: u64,
        #[arg(long, value_delimiter = ',', default_value = "2,4")]
        d: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        l: u64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// GKP infinite-energy and amplification-decoder infidelities under loss.
    GkpAsymptote {
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.2,0.3")]
        gamma: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check F~ <= F_opt <= (1 + F~)/2 on every point; exit 3 on violation.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        /// Slack on either side of the bounds; overrides `tolerances.bound_tol`.
        /// Negative values tighten the check.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// CSV path; overrides `output.csv`. Without either, CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_rows(m: &qecfid::ComplexMatrix) -> String {
    let header = ["i", "j", "re", "im"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let z = m[(i, j)];
            rows.push(vec![Cell::Int(i as i64), Cell::Int(j as i64), Cell::Float(z.re), Cell::Float(z.im)]);
        }
    }
    table::write_rows(&header, &rows)
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = config::load(&common.config)?;
    if common.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    if let Some(out) = &common.out {
        cfg.output.csv = Some(out.clone());
    }
    Ok(cfg)
}

fn single_point(cfg: &ExperimentConfig, command: &str) -> Result<config::Point, CliError> {
    let mut points = cfg.points();
    if points.len() != 1 {
        return Err(CliError::Config(format!(
            "`{command}` evaluates one instance but the config has {} points; use `sweep`",
            points.len()
        )));
    }
    Ok(points.remove(0))
}

fn first_error(run: &RunOutput) -> Option<String> {
    run.results.iter().find_map(|r| r.error.clone())
}

fn fidelity(common: &Common, dump_qec: Option<&Path>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let point = single_point(&cfg, "fidelity")?;
    let run = runner::run_experiment(&cfg, common.workers)?;
    write_text(cfg.output.csv.as_deref(), &table::render(&cfg, &run))?;
    if let Some(err) = first_error(&run) {
        return Err(CliError::Numeric(err));
    }
    if let Some(path) = dump_qec {
        let code = runner::build_code(&point).map_err(CliError::Numeric)?;
        let channel = runner::build_channel(&point, &code).map_err(CliError::Numeric)?;
        let m = build_qec_matrix(&code, &channel).map_err(|e| CliError::Numeric(e.to_string()))?;
        write_text(Some(path), &matrix_rows(&m.data))?;
    }
    Ok(())
}

fn sweep(common: &Common, svg_path: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = load(common)?;
    if let Some(p) = svg_path {
        cfg.output.svg = Some(p.to_path_buf());
    }
    let run = runner::run_experiment(&cfg, common.workers)?;
    write_text(cfg.output.csv.as_deref(), &table::render(&cfg, &run))?;
    if let Some(path) = &cfg.output.svg {
        let (spec, series) = svg::series_from_run(&cfg, &run);
        write_text(Some(path), &svg::render(&spec, &series))?;
    }
    let failed = run.failures();
    if failed > 0 {
        eprintln!("{failed} of {} point(s) failed; see the error column", run.results.len());
    }
    if failed == run.results.len() {
        return Err(CliError::Numeric(first_error(&run).unwrap_or_else(|| "no points".into())));
    }
    Ok(())
}

fn sdp(common: &Common, tol: Option<f64>, choi: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = load(common)?;
    if let Some(t) = tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Config(format!("--tol {t} must be positive")));
        }
        cfg.tolerances.sdp_tol = t;
    }
    for m in [Method::Exact, Method::Sdp] {
        if !cfg.has(m) {
            cfg.methods.push(m);
        }
    }
    cfg.methods.sort();
    let point = single_point(&cfg, "sdp")?;
    let run = runner::run_experiment(&cfg, common.workers)?;
    write_text(cfg.output.csv.as_deref(), &table::render(&cfg, &run))?;
    if let Some(err) = first_error(&run) {
        return Err(CliError::Numeric(err));
    }
    if let Some(path) = choi {
        let code = runner::build_code(&point).map_err(CliError::Numeric)?;
        let channel = runner::build_channel(&point, &code).map_err(CliError::Numeric)?;
        let result = runner::solve_sdp(&cfg, &code, &channel).map_err(CliError::Numeric)?;
        write_text(Some(path), &matrix_rows(&result.choi_recovery.data))?;
    }
    Ok(())
}

fn thermo(n_min: u64, n_max: u64, ds: &[u64], l: u64, p: f64, out: Option<&Path>) -> Result<(), CliError> {
    if n_min > n_max || ds.is_empty() {
        return Err(CliError::Config("empty thermo sweep".into()));
    }
    let header = ["N", "d", "l", "p", "analytic_infidelity", "leading_order", "error"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        for &d in ds {
            let mut row = vec![Cell::Int(n as i64), Cell::Int(d as i64), Cell::Int(l as i64), Cell::Float(p)];
            match ThermoParams::new(n, d, l, p).and_then(|params| thermo_infidelity(&params)) {
                Ok(v) => row.extend([Cell::Float(v), Cell::Float(p * thermo_leading_order(n, d, l)), Cell::Empty]),
                Err(e) => row.extend([Cell::Empty, Cell::Empty, Cell::Text(e.to_string())]),
            }
            rows.push(row);
        }
    }
    write_text(out, &table::write_rows(&header, &rows))
}

fn gkp_asymptote(gammas: &[f64], out: Option<&Path>) -> Result<(), CliError> {
    if gammas.is_empty() {
        return Err(CliError::Config("no loss rates given".into()));
    }
    let header = ["gamma", "asymptotic_infidelity", "ad_infidelity"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for &g in gammas {
        let a = gkp_asymptotic_infidelity(g).map_err(|e| CliError::Config(e.to_string()))?;
        let b = gkp_ad_infidelity(g).map_err(|e| CliError::Config(e.to_string()))?;
        rows.push(vec![Cell::Float(g), Cell::Float(a), Cell::Float(b)]);
    }
    write_text(out, &table::write_rows(&header, &rows))
}

fn verify_bounds(common: &Common, tol: Option<f64>) -> Result<(), CliError> {
    let cfg = load(common)?;
    let tol = tol.unwrap_or(cfg.tolerances.bound_tol);
    let (run, summary) = verify::verify_bounds(&cfg, common.workers, tol)?;
    if cfg.output.csv.is_some() {
        write_text(cfg.output.csv.as_deref(), &table::render(&cfg, &run))?;
    }
    println!("{}", summary.report());
    if !summary.violations.is_empty() {
        return Err(CliError::Bound(format!("{} point(s) outside the two-sided bound", summary.violations.len())));
    }
    if !summary.passed() {
        return Err(CliError::Numeric(format!("{} point(s) could not be checked", summary.skipped.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fidelity { common, dump_qec } => fidelity(common, dump_qec.as_deref()),
        Command::Sweep { common, svg } => sweep(common, svg.as_deref()),
        Command::Sdp { common, tol, choi } => sdp(common, *tol, choi.as_deref()),
        Command::Thermo { n_min, n_max, d, l, p, out } => thermo(*n_min, *n_max, d, *l, *p, out.as_deref()),
        Command::GkpAsymptote { gamma, out } => gkp_asymptote(gamma, out.as_deref()),
        Command::VerifyBounds { common, tol } => verify_bounds(common, *tol),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qecfid: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qecfid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qecfid")).args(args).output().unwrap()
}

fn recipe(name: &str) -> String {
    format!("{}/../../recipes/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SINGLE: &str = r#"
[experiment]
name = "one"
methods = ["exact"]
[code]
family = "repetition"
n = 3
[channel]
family = "damping"
p = 0.1
"#;

#[test]
fn empty_sweep_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SINGLE.replace("p = 0.1", "p = []"));
    let csv = dir.path().join("out.csv");
    let svg = dir.path().join("out.svg");
    let o = qecfid(&["sweep", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("channel.p"), "{}", stderr(&o));
    assert!(!csv.exists() && !svg.exists());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SINGLE.replace("p = 0.1", "p = \"high\""));
    let o = qecfid(&["fidelity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 10"), "{}", stderr(&o));
}

#[test]
fn fidelity_prints_one_row_and_dumps_the_qec_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SINGLE);
    let dump = dir.path().join("m.csv");
    let o = qecfid(&["fidelity", "--config", cfg.to_str().unwrap(), "--dump-qec", dump.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.lines().next().unwrap().starts_with("point,code.family,channel.family,code.n,channel.p"));
    // rep3 with full damping: 8 Kraus operators, M is 16 × 16
    let m = std::fs::read_to_string(dump).unwrap();
    assert_eq!(m.lines().count(), 1 + 16 * 16);
    assert!(m.starts_with("i,j,re,im\n0,0,"));
}

#[test]
fn single_instance_commands_refuse_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SINGLE.replace("p = 0.1", "p = [0.1, 0.2]"));
    let o = qecfid(&["fidelity", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("use `sweep`"));
}

#[test]
fn sdp_reports_f_opt_and_refuses_large_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SINGLE);
    let choi = dir.path().join("choi.csv");
    let o = qecfid(&["sdp", "--config", cfg.to_str().unwrap(), "--tol", "1e-8", "--choi", choi.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).lines().next().unwrap().contains("f_opt"));
    // recovery maps 8 → 2 dimensions: Choi is 16 × 16
    assert_eq!(std::fs::read_to_string(choi).unwrap().lines().count(), 1 + 16 * 16);

    let big = write(dir.path(), "big.toml", &SINGLE.replace("family = \"repetition\"\nn = 3", "family = \"shor9\""));
    let o = qecfid(&["sdp", "--config", big.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1024 > 128"), "{}", stderr(&o));
}

#[test]
fn verify_bounds_passes_and_negative_slack_trips_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &SINGLE.replace("[\"exact\"]", "[\"exact\", \"sdp\"]").replace("p = 0.1", "p = [0.05, 0.3]"));
    let o = qecfid(&["verify-bounds", "--config", cfg.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).trim_end().ends_with("PASS"));
    let o = qecfid(&["verify-bounds", "--config", cfg.to_str().unwrap(), "--tol=-0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("VIOLATION"));
}

#[test]
fn verify_bounds_needs_sdp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SINGLE);
    assert_eq!(qecfid(&["verify-bounds", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn failing_points_stay_in_the_table() {
    let o = qecfid(&["sweep", "--config", &recipe("fig2_thermo.toml")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1 + 18);
    let bad: Vec<&str> = out.lines().filter(|l| l.contains("not reachable")).collect();
    assert_eq!(bad.len(), 9);
    assert!(stderr(&o).contains("9 of 18"));
}

#[test]
fn all_points_failing_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[experiment]\nname = \"bad\"\nmethods = [\"exact\"]\n[code]\nfamily = \"thermo\"\nN = [6, 8]\nd = 2\n[channel]\nfamily = \"erasure\"\nl = 1\n";
    let cfg = write(dir.path(), "c.toml", text);
    let o = qecfid(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let svg = dir.path().join("g.svg");
    let o = qecfid(&["sweep", "--config", &recipe("fig1_leung4.toml"), "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 9);
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.contains("sdp_infidelity"));
    assert_eq!(plot.matches("<polyline").count(), 2);
}

#[test]
fn thermo_and_gkp_asymptote_tables() {
    let o = qecfid(&["thermo", "--n-min", "6", "--n-max", "7", "--d", "2,4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), "N,d,l,p,analytic_infidelity,leading_order,error");
    assert_eq!(out.lines().count(), 5);
    // N=6, d=4: ½(1 − √(1 − x²/4)), x = 2/3
    let row: Vec<&str> = out.lines().nth(2).unwrap().split(',').collect();
    let expected = 0.5 * (1.0 - (1.0f64 - 1.0 / 9.0).sqrt());
    assert!((row[4].parse::<f64>().unwrap() - expected).abs() < 1e-11);

    let o = qecfid(&["gkp-asymptote", "--gamma", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let row: Vec<f64> = stdout(&o).lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((7.0e-7..7.4e-7).contains(&row[1]) && (2.8e-2..3.0e-2).contains(&row[2]));
    assert_eq!(qecfid(&["gkp-asymptote", "--gamma", "1.5"]).status.code(), Some(1));
}

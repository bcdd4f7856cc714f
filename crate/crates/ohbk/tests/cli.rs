//! Black-box tests of the command-line interface: exit codes, output
//! shape, and replay lines that reproduce their own run.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ohbk"))
}

fn dataset() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/wdbc_standin.csv")
        .to_str()
        .unwrap()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Lines that are neither comments nor the header row.
fn data_lines(text: &str) -> Vec<&str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = run(&[flag]);
        assert_eq!(out.status.code(), Some(0), "{flag} should exit 0");
    }
    let help = run(&["--help"]);
    assert!(stdout_str(&help).contains("ohbk"));
}

#[test]
fn bad_usage_exits_one() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["--no-such-flag"],
        vec!["run", "--source", "csv"],
        vec!["run", "--source", "gaussian", "--lo", "0.5"],
        vec!["run", "--beta", "1.5"],
        vec!["theory"],
        vec!["theory", "--closed-form", "--mc-samples", "10"],
        vec!["sweep-beta", "--beta-steps", "0"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "args {args:?} should exit 1");
    }
}

#[test]
fn run_emits_manifest_header_and_every_step() {
    let out = run(&["run", "--n", "8", "--seed", "11", "--beta", "0.3", "--iters", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# ohbk "));
    assert!(lines.next().unwrap().starts_with("# replay: run"));
    assert!(text.contains("# consumed = 40"));
    assert!(text.contains("# skipped = 0"));
    assert!(text.lines().any(|l| l == "t,error"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 41, "t = 0 through t = 40");
    assert!(rows[0].starts_with("0,"));
    assert!(rows[40].starts_with("40,"));
}

#[test]
fn run_single_pass_consumes_each_dataset_row_once() {
    let ds = dataset();
    let out = run(&[
        "run", "--source", "csv", "--csv-path", &ds, "--row-mode", "once", "--seed", "3",
        "--beta", "0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.contains("# dataset: rows=699 cols=10 dropped=0"));
    assert!(text.contains("# consumed = 699"));
    assert_eq!(data_lines(&text).len(), 700);
}

#[test]
fn run_writes_identical_bytes_to_stdout_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let args = ["run", "--n", "6", "--seed", "4", "--iters", "25"];
    let piped = run(&args);
    let status = bin().args(args).arg("--out").arg(&path).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(piped.stdout, std::fs::read(&path).unwrap());
}

#[test]
fn sweep_beta_reports_ordered_quartiles_and_an_argmin() {
    let out = run(&[
        "sweep-beta", "--n", "10", "--seed", "2", "--beta-min", "0", "--beta-max", "0.4",
        "--beta-steps", "5", "--trials", "8", "--error-at", "60",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.lines().any(|l| l == "beta,median_error,p25_error,p75_error"));
    let rows = data_lines(&text);
    assert_eq!(rows.len(), 5);
    for row in &rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 4);
        let (median, p25, p75) = (cols[1], cols[2], cols[3]);
        assert!(p25 <= median && median <= p75, "quartiles out of order in {row}");
    }
    assert!(text.lines().any(|l| l.starts_with("# argmin beta = ")));
}

#[test]
fn sweep_eps_lists_every_grid_pair() {
    let out = run(&[
        "sweep-eps", "--n", "8", "--seed", "2", "--eps-min", "0", "--eps-max", "0.6",
        "--eps-steps", "4", "--betas", "0.0,0.2", "--trials", "3", "--iters", "150",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.lines().any(|l| l == "epsilon,beta,mean_log10_error"));
    assert_eq!(data_lines(&text).len(), 4 * 2);
}

#[test]
fn sweep_n_reports_one_argmin_per_dimension() {
    let out = run(&[
        "sweep-n", "--n-set", "5,10", "--beta-min", "0", "--beta-max", "0.2",
        "--beta-steps", "3", "--trials", "3", "--iters", "150", "--seed", "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.lines().any(|l| l == "n,beta,mean_log10_error"));
    assert_eq!(data_lines(&text).len(), 2 * 3);
    let argmins = text
        .lines()
        .filter(|l| l.starts_with("# argmin"))
        .count();
    assert_eq!(argmins, 2);
}

#[test]
fn sweep_n_rejects_dataset_sources() {
    let ds = dataset();
    let out = run(&["sweep-n", "--source", "csv", "--csv-path", &ds]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn theory_exit_code_tracks_admissibility() {
    let ok = run(&["theory", "--closed-form", "--n", "50", "--beta", "0.004"]);
    assert_eq!(ok.status.code(), Some(0));
    let text = stdout_str(&ok);
    assert!(text.contains("admissible = true"));
    assert!(text.contains("beta_max = 4.9752"));

    let too_big = run(&["theory", "--closed-form", "--n", "50", "--beta", "0.01"]);
    assert_eq!(too_big.status.code(), Some(2));
    assert!(stdout_str(&too_big).contains("admissible = false"));
}

#[test]
fn theory_monte_carlo_reports_the_spectrum() {
    let out = run(&[
        "theory", "--mc-samples", "5000", "--source", "sphere", "--n", "10", "--seed", "7",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    assert!(text.contains("w_source = monte-carlo"));
    assert!(text.contains("samples = 5000"));
    assert!(text.contains("dim = 10"));
    let sigma_min = extract(&text, "sigma_min = ");
    let sigma_max = extract(&text, "sigma_max = ");
    assert!(sigma_min > 0.05 && sigma_max < 0.2, "spectrum should hug 1/10");
    assert!((extract(&text, "trace = ") - 1.0).abs() <= 1e-12);
}

fn extract(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("missing `{key}` line"))
        .parse()
        .unwrap()
}

#[test]
fn replay_line_reproduces_the_run_byte_for_byte() {
    let originals = [
        vec!["run", "--n", "7", "--seed", "9", "--beta", "0.25", "--iters", "30"],
        vec!["sweep-beta", "--n", "6", "--trials", "4", "--beta-steps", "3", "--error-at", "40"],
        vec!["theory", "--closed-form", "--n", "20", "--beta", "0.005"],
    ];
    for args in originals {
        let first = run(&args);
        let text = stdout_str(&first);
        let replay = text
            .lines()
            .find_map(|l| l.strip_prefix("# replay: "))
            .expect("every report carries a replay line");
        let replay_args: Vec<&str> = replay.split_whitespace().collect();
        let second = run(&replay_args);
        assert_eq!(
            first.stdout, second.stdout,
            "replay `{replay}` diverged from the original {args:?}"
        );
    }
}

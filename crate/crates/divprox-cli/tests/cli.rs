//! End-to-end tests of the `divprox` binary: exit codes, output shape,
//! and report determinism.

use std::path::Path;
use std::process::{Command, Output};

fn divprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divprox"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn printed_price(output: &Output) -> f64 {
    stdout(output)
        .lines()
        .find_map(|line| line.strip_prefix("price=").map(|rest| rest.to_string()))
        .expect("price line")
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

const LOW_FREQ_5Y: &[&str] = &[
    "--spot",
    "100",
    "--rate",
    "0.03",
    "--vol",
    "0.30",
    "--strike",
    "100",
    "--maturity",
    "5",
    "--div-every",
    "1.0",
    "--div-amount",
    "3",
    "--div-start",
    "0.5",
];

#[test]
fn price_gs_reproduces_reference_cell() {
    let out = divprox(&[&["price", "--method", "gs"], LOW_FREQ_5Y].concat());
    assert!(out.status.success(), "{out:?}");
    assert!((printed_price(&out) - 24.42).abs() < 0.01);
    assert!(stdout(&out).contains("method=gs"));
}

#[test]
fn price_pde_agrees_with_gs_cell() {
    let out = divprox(&[&["price", "--method", "pde"], LOW_FREQ_5Y].concat());
    assert!(out.status.success());
    assert!((printed_price(&out) - 24.42).abs() < 0.02);
}

#[test]
fn price_mc_reports_standard_error() {
    let mut args = vec!["price", "--method", "mc"];
    args.extend_from_slice(LOW_FREQ_5Y);
    args.extend_from_slice(&["--paths", "100000", "--seed", "7"]);
    let out = divprox(&args);
    assert!(out.status.success());
    assert!(stdout(&out).contains("stderr="));
}

#[test]
fn zero_dividend_prices_agree_across_methods() {
    let prices: Vec<f64> = ["gs", "bv", "bgs", "mm", "taylor2", "taylor3"]
        .iter()
        .map(|method| {
            let out = divprox(&[
                "price",
                "--method",
                method,
                "--spot",
                "100",
                "--rate",
                "0.03",
                "--vol",
                "0.30",
                "--strike",
                "100",
                "--maturity",
                "5",
                "--div-every",
                "1.0",
                "--div-amount",
                "0",
                "--div-start",
                "0.5",
            ]);
            assert!(out.status.success());
            printed_price(&out)
        })
        .collect();
    for p in &prices {
        assert!((p - prices[0]).abs() < 1e-9, "{prices:?}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let out = divprox(&["price", "--method", "gs", "--spot", "100"]);
    assert_eq!(out.status.code(), Some(1));

    let out = divprox(&[
        "price",
        "--method",
        "gs",
        "--spot",
        "0",
        "--rate",
        "0.03",
        "--vol",
        "0.30",
        "--strike",
        "100",
        "--maturity",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn numerical_failures_exit_with_two() {
    // dividends larger than the escrowed spot can carry
    let out = divprox(&[
        "price",
        "--method",
        "bgs",
        "--spot",
        "100",
        "--rate",
        "0.03",
        "--vol",
        "0.30",
        "--strike",
        "100",
        "--maturity",
        "5",
        "--div-every",
        "1.0",
        "--div-amount",
        "40",
        "--div-start",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn help_exits_with_zero() {
    let out = divprox(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("bench.json");
    std::fs::write(
        &path,
        r#"{
            "market": {"spot": 100.0, "rate": 0.03, "vol": 0.30},
            "schedule": {"every": 1.0, "amount": 3.0, "start": 0.5},
            "strike_ratios": [0.5, 1.0],
            "maturities": [5.0],
            "methods": ["gs", "bv", "pde"]
        }"#,
    )
    .unwrap();
    path
}

/// Strips the wall-clock column so runs can be compared byte for byte.
fn without_runtime(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            line.rsplit_once(',')
                .map_or(line, |(rest, _)| rest)
                .to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn table_emits_sorted_deterministic_csv_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let md = dir.path().join("report.md");

    for (csv, with_md) in [(&csv_a, true), (&csv_b, false)] {
        let mut args = vec![
            "table",
            "--config",
            config.to_str().unwrap(),
            "--csv-out",
            csv.to_str().unwrap(),
        ];
        if with_md {
            args.extend_from_slice(&["--md-out", md.to_str().unwrap()]);
        }
        let out = divprox(&args);
        assert!(out.status.success(), "{out:?}");
    }

    let a = std::fs::read_to_string(&csv_a).unwrap();
    let b = std::fs::read_to_string(&csv_b).unwrap();
    assert_eq!(without_runtime(&a), without_runtime(&b));

    let mut lines = a.lines();
    assert_eq!(
        lines.next().unwrap(),
        "maturity,strike_ratio,method,price,rel_err_pct,runtime_ms"
    );
    // rows sorted by (maturity, strike ratio, method)
    let keys: Vec<(f64, f64, String)> = lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].to_string(),
            )
        })
        .collect();
    assert_eq!(keys.len(), 6);
    let mut sorted = keys.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(keys, sorted);
    // pde reference rows carry zero error by definition
    let body = a.lines().skip(1).collect::<Vec<_>>();
    for line in &body {
        if line.contains(",pde,") {
            assert!(line.contains(",0.0000,"), "{line}");
        }
    }

    let md_text = std::fs::read_to_string(&md).unwrap();
    assert!(md_text.contains("## Maturity 5 years"));
    assert!(md_text.contains("Relative error (%)"));
}

#[test]
fn table_rejects_config_without_pde() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
            "market": {"spot": 100.0, "rate": 0.03, "vol": 0.30},
            "schedule": {"every": 1.0, "amount": 3.0, "start": 0.5},
            "strike_ratios": [1.0],
            "maturities": [5.0],
            "methods": ["gs"]
        }"#,
    )
    .unwrap();
    let out = divprox(&["table", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn figure_emits_plot_ready_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("fig.csv");
    let out = divprox(&[
        "figure",
        "--maturity",
        "5",
        "--max-amount",
        "1.0",
        "--step",
        "0.5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "dividend_amount,method,rel_err_pct");
    // 3 amounts x 3 methods
    assert_eq!(lines.count(), 9);
    assert!(text.contains("0,gs,"));
    assert!(text.contains("1,taylor3,"));
}

#[test]
fn sens_check_prints_bump_comparison() {
    let out = divprox(&[
        "sens",
        "--spot",
        "100",
        "--rate",
        "0.03",
        "--vol",
        "0.30",
        "--strike",
        "100",
        "--maturity",
        "10",
        "--times",
        "5",
        "--check",
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = stdout(&out);
    assert!(text.contains("sensitivity="));
    assert!(text.contains("pde_bump="));
}

#[test]
fn sens_rejects_too_many_times() {
    let out = divprox(&[
        "sens",
        "--spot",
        "100",
        "--rate",
        "0.03",
        "--vol",
        "0.30",
        "--strike",
        "100",
        "--maturity",
        "10",
        "--times",
        "1,2,3,4",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

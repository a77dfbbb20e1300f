use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use lrdlab::arfima_figarch::{simulate, ArfimaFigarchParams};
use serde_json::Value;

fn lrdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrdlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn params(d_m: f64) -> ArfimaFigarchParams {
    ArfimaFigarchParams {
        mu: 4e-4,
        phi: 0.0,
        theta: 0.0,
        d_m,
        omega: 2e-6,
        alpha: 0.2,
        beta: 0.5,
        d_v: 0.4,
        nu: 6.0,
    }
}

/// Business-day price CSV driven by simulated returns.
fn write_prices(path: &Path, n: usize, seed: u64) {
    let r = simulate(&params(0.1), n - 1, 200, seed, 200).unwrap();
    let mut date = NaiveDate::from_ymd_opt(2003, 1, 6).unwrap();
    let mut price = 1000.0;
    let mut text = String::from("date,close\n");
    for i in 0..n {
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date + Days::new(1);
        }
        if i > 0 {
            price *= r.values[i - 1].exp();
        }
        text.push_str(&format!("{date},{price:.6}\n"));
        date = date + Days::new(1);
    }
    fs::write(path, text).unwrap();
}

fn schema_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn assert_valid(schema: &str, file: &Path) {
    let schema: Value =
        serde_json::from_str(&fs::read_to_string(schema_root().join(schema)).unwrap()).unwrap();
    let instance: Value = serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(&instance)
        .map(|e| e.to_string())
        .collect();
    assert!(
        errors.is_empty(),
        "{} fails schema: {errors:?}",
        file.display()
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn outputs_validate_against_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("idx.csv");
    write_prices(&data, 1200, 1);
    let out = dir.path().join("out");
    let base = ["--out-dir", s(&out)];
    let run = |extra: &[&str]| {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        lrdlab(&args)
    };

    let o = run(&["ingest", "--data", s(&data), "--frequency", "weekly"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_valid("ingest.schema.json", &out.join("idx_weekly_ingest.json"));

    let o = run(&["diagnose", "--data", s(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_valid("moments.schema.json", &out.join("idx_daily_moments.json"));
    assert!(out.join("idx_daily_histogram.csv").exists());
    assert!(out.join("idx_daily_qq.csv").exists());

    for method in ["rs", "dfa"] {
        let o = run(&["hurst", "--data", s(&data), "--method", method]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_valid(
            "hurst.schema.json",
            &out.join(format!("idx_daily_{method}.json")),
        );
        let loglog =
            fs::read_to_string(out.join(format!("idx_daily_{method}_loglog.csv"))).unwrap();
        assert!(loglog.starts_with("ln_n,ln_stat,fitted\n"));
    }

    let o = run(&["fit", "--data", s(&data), "--truncation-lag", "200"]);
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
    assert_valid("fit.schema.json", &out.join("idx_daily_fit.json"));
    assert!(out.join("idx_daily_fit_trace.csv").exists());

    let o = run(&[
        "simulate",
        "--seed",
        "3",
        "--n",
        "1199",
        "--truncation-lag",
        "200",
        "--paths",
        "6",
        "--frequency",
        "daily",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_valid(
        "simulation.schema.json",
        &out.join("simulated_returns.json"),
    );

    let ensemble = out.join("simulated_ensemble.csv");
    let o = run(&[
        "evaluate",
        "--data",
        s(&data),
        "--ensemble",
        s(&ensemble),
        "--truncation-lag",
        "200",
    ]);
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
    assert_valid("evaluation.schema.json", &out.join("idx_daily_eval.json"));

    let o = run(&[
        "report-all",
        "--data",
        s(&data),
        "--truncation-lag",
        "200",
        "--ensemble",
        s(&ensemble),
    ]);
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
    let report = out.join("idx_daily_report.json");
    assert_valid("report.schema.json", &report);
    let v = read_json(&report);
    for key in ["moments", "rs", "dfa", "arfima_figarch", "evaluation"] {
        assert!(v[key].get("ok").is_some(), "{key}: {}", v[key]);
    }
    assert!(out.join("idx_daily_report.csv").exists());
}

#[test]
fn short_series_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tiny.csv");
    let mut text = String::from("date,close\n");
    for i in 0..15 {
        text.push_str(&format!("2021-03-{:02},{}\n", i + 1, 100 + i));
    }
    fs::write(&data, text).unwrap();
    let out = dir.path().join("out");
    let o = lrdlab(&[
        "--out-dir",
        s(&out),
        "hurst",
        "--method",
        "dfa",
        "--data",
        s(&data),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("series too short"), "{}", stderr(&o));
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let o = lrdlab(&[
                "--out-dir",
                s(&out),
                "simulate",
                "--seed",
                "7",
                "--n",
                "2000",
                "--truncation-lag",
                "300",
                "--paths",
                "3",
            ]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
            (dir_contents(&out), o.stdout)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].0.len(), 3);

    let other = dir.path().join("c");
    let o = lrdlab(&[
        "--out-dir",
        s(&other),
        "simulate",
        "--seed",
        "8",
        "--n",
        "2000",
    ]);
    assert_eq!(code(&o), 0);
    assert_ne!(
        fs::read(other.join("simulated_returns.csv")).unwrap(),
        fs::read(dir.path().join("a/simulated_returns.csv")).unwrap()
    );
}

#[test]
fn bad_flags_exit_one() {
    let o = lrdlab(&["hurst", "--bogus"]);
    assert_eq!(code(&o), 1);
    let o = lrdlab(&["hurst", "--method", "wavelet"]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("rs") && stderr(&o).contains("dfa"),
        "{}",
        stderr(&o)
    );
    let o = lrdlab(&["fit", "--method", "rs"]);
    assert_eq!(code(&o), 1);
    let o = lrdlab(&["simulate", "--ensemble", "e.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--paths"), "{}", stderr(&o));
    let o = lrdlab(&["ingest", "--frequency", "hourly", "--data", "x.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("weekly"), "{}", stderr(&o));
}

#[test]
fn missing_data_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = lrdlab(&[
        "--out-dir",
        s(dir.path()),
        "ingest",
        "--data",
        s(&dir.path().join("absent.csv")),
    ]);
    assert_eq!(code(&o), 1);
    let o = lrdlab(&["--out-dir", s(dir.path()), "ingest"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--data"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("idx.csv");
    write_prices(&data, 600, 2);
    let cfg_out = dir.path().join("cfg_out");
    let config = dir.path().join("lrdlab.toml");
    fs::write(
        &config,
        format!(
            "data = {:?}\nfrequency = \"weekly\"\nlabel = \"cfg\"\nout_dir = {:?}\nformat = \"csv\"\n",
            s(&data),
            s(&cfg_out)
        ),
    )
    .unwrap();

    let o = lrdlab(&["--config", s(&config), "ingest"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(cfg_out.join("cfg_weekly_ingest.json").exists());
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("label,frequency,"));

    let flag_out = dir.path().join("flag_out");
    let o = lrdlab(&[
        "--config",
        s(&config),
        "--out-dir",
        s(&flag_out),
        "--format",
        "json",
        "ingest",
        "--frequency",
        "monthly",
        "--label",
        "flag",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(flag_out.join("flag_monthly_ingest.json").exists());
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed["frequency"], "monthly");

    let sim_cfg = dir.path().join("sim.toml");
    fs::write(&sim_cfg, "seed = 5\n[params]\nd_m = 0.05\nnu = 7.5\n").unwrap();
    let sim_out = dir.path().join("sim_out");
    let o = lrdlab(&[
        "--config",
        s(&sim_cfg),
        "--out-dir",
        s(&sim_out),
        "simulate",
        "--n",
        "500",
        "--nu",
        "9",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let record = read_json(&sim_out.join("simulated_returns.json"));
    assert_eq!(record["seed"], 5);
    assert_eq!(record["params"]["d_m"], 0.05);
    assert_eq!(record["params"]["nu"], 9.0);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "colour = \"red\"\n").unwrap();
    let o = lrdlab(&["--config", s(&bad), "ingest"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn evaluate_end_to_end_with_binary_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("idx.csv");
    write_prices(&data, 1000, 3);
    let out = dir.path().join("out");
    let ensemble = dir.path().join("paths.bin");
    let o = lrdlab(&[
        "--out-dir",
        s(&out),
        "simulate",
        "--seed",
        "40",
        "--n",
        "999",
        "--truncation-lag",
        "200",
        "--paths",
        "12",
        "--ensemble",
        s(&ensemble),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(&fs::read(&ensemble).unwrap()[..4], b"LMP1");

    let o = lrdlab(&[
        "--out-dir",
        s(&out),
        "--format",
        "csv",
        "evaluate",
        "--data",
        s(&data),
        "--ensemble",
        s(&ensemble),
        "--truncation-lag",
        "200",
        "--label",
        "eval",
    ]);
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
    let row = String::from_utf8(o.stdout).unwrap();
    assert!(
        row.contains("selected_index") && row.contains("fit_d_m"),
        "{row}"
    );

    let report = read_json(&out.join("eval_daily_eval.json"));
    assert_eq!(report["ensemble_size"], 12);
    assert_eq!(report["path_length"], 1000);
    let selected = report["selected_index"].as_u64().unwrap();
    assert!(selected < 12);

    let overlay = fs::read_to_string(out.join("eval_daily_eval_overlay.csv")).unwrap();
    let mut lines = overlay.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..3], &["date", "real", "selected"]);
    assert_eq!(header.len(), 3 + 12);
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(first
        .iter()
        .all(|&p| (p - first[0]).abs() < 1e-9 * first[0]));
    assert_eq!(overlay.lines().count(), 1 + 1000);
    assert!(out.join("eval_daily_eval_selected_returns.csv").exists());
    assert!(out.join("eval_daily_eval_dfa_loglog.csv").exists());
}

#[test]
fn ensemble_length_mismatch_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("idx.csv");
    write_prices(&data, 300, 4);
    let ensemble = dir.path().join("e.csv");
    fs::write(&ensemble, format!("{}\n", vec!["0"; 20].join(","))).unwrap();
    let o = lrdlab(&[
        "--out-dir",
        s(&dir.path().join("out")),
        "evaluate",
        "--data",
        s(&data),
        "--ensemble",
        s(&ensemble),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

use std::process::{Command, Output};

fn betacoal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betacoal"))
        .args(args)
        .env_remove("BETACOAL_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn rates_table_csv() {
    let text = stdout(&betacoal(&["rates", "table", "--alpha", "1.5", "--b", "4"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,lambda_bk,binom_weight,pmf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // λ_{4,2} = 0.625, λ_{4,3} = λ_{4,4} = 0.125
    for (row, rate) in rows.iter().zip([0.625, 0.125, 0.125]) {
        assert!((row[1] - rate).abs() < 1e-13);
    }
    let total: f64 = rows.iter().map(|r| r[3]).sum();
    assert!((total - 1.0).abs() < 1e-12);
    // at least 15 significant digits
    let first = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    let digits = first
        .split('e')
        .next()
        .unwrap()
        .chars()
        .filter(char::is_ascii_digit)
        .count();
    assert!(digits >= 15, "{first}");
}

#[test]
fn simulate_json_record() {
    let text = stdout(&betacoal(&[
        "simulate",
        "--n",
        "50",
        "--alpha",
        "1.3",
        "--seed",
        "7",
        "--store-trajectory",
    ]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["n"], 50);
    assert_eq!(v["seed"], 7);
    let tau = v["tau"].as_u64().unwrap();
    assert_eq!(v["x"].as_array().unwrap().len() as u64, tau + 1);
    assert_eq!(v["u"].as_array().unwrap().len() as u64, tau);
    assert_eq!(v["dt"].as_array().unwrap().len() as u64, tau);
    assert!(v["ell"].as_f64().unwrap() <= v["L"].as_f64().unwrap());

    let again = stdout(&betacoal(&[
        "simulate", "--n", "50", "--alpha", "1.3", "--seed", "7",
    ]));
    let w: serde_json::Value = serde_json::from_str(&again).unwrap();
    assert_eq!(w["L"], v["L"]);
    assert!(w.get("x").is_none());
}

#[test]
fn oracle_matches_record_schema() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("h.json");
    let text = stdout(&betacoal(&[
        "oracle",
        "--n",
        "8",
        "--alpha",
        "1.5",
        "--reps",
        "4",
        "--seed",
        "1",
        "--store-history",
        "--history-out",
        history.to_str().unwrap(),
    ]));
    let records = betacoal::harness::read_records_csv(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 4);
    let runs: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&history).unwrap()).unwrap();
    assert_eq!(runs.as_array().unwrap().len(), 4);
}

#[test]
fn stable_samples_one_per_line() {
    let text = stdout(&betacoal(&[
        "stable", "sample", "--alpha", "1.7", "--count", "25", "--seed", "3",
    ]));
    let values: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 25);
    assert!(values.iter().all(|v| v.is_finite()));
}

#[test]
fn constants_json() {
    let text = stdout(&betacoal(&["constants", "--alpha", "1.5"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["gamma"], 2.0);
    assert!((v["c1"].as_f64().unwrap() - 0.664_670).abs() < 1e-6);
    assert!((v["alpha0"].as_f64().unwrap() - 1.618_033_988_7).abs() < 1e-10);
}

#[test]
fn experiment_writes_csv_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let path = dir.path().join(format!("ratio-{workers}.csv"));
        let out = betacoal(&[
            "experiment",
            "ratio",
            "--alpha",
            "1.4",
            "--n-grid",
            "30,60",
            "--reps",
            "20",
            "--seed",
            "11",
            "--workers",
            workers,
            "--out",
            path.to_str().unwrap(),
        ]);
        stdout(&out);
        outputs.push(std::fs::read_to_string(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let records = betacoal::harness::read_records_csv(outputs[0].as_bytes()).unwrap();
    assert_eq!(records.len(), 40);
    assert!(records.iter().all(|r| r.stats.contains_key("ell_over_L")));
}

#[test]
fn worker_count_from_environment() {
    let run = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_betacoal"));
        cmd.args([
            "experiment",
            "fig1",
            "--alpha",
            "1.5",
            "--n",
            "40",
            "--reps",
            "6",
            "--seed",
            "2",
        ]);
        match env {
            Some(w) => cmd.env("BETACOAL_WORKERS", w),
            None => cmd.env_remove("BETACOAL_WORKERS"),
        };
        stdout(&cmd.output().unwrap())
    };
    assert_eq!(run(Some("2")), run(None));
}

#[test]
fn experiment_json_output() {
    let text = stdout(&betacoal(&[
        "experiment",
        "lemma1",
        "--alpha",
        "1.5",
        "--n",
        "200",
        "--reps",
        "10",
        "--reference-size",
        "200",
        "--format",
        "json",
    ]));
    let batch: betacoal::harness::ReplicateBatch = serde_json::from_str(&text).unwrap();
    assert_eq!(batch.records.len(), 10);
    assert_eq!(batch.ks.len(), 1);
}

#[test]
fn invalid_inputs_exit_nonzero() {
    for args in [
        &["simulate", "--n", "10", "--alpha", "2.0"][..],
        &["simulate", "--n", "0", "--alpha", "1.5"],
        &["rates", "table", "--alpha", "1.5", "--b", "1"],
        &[
            "experiment",
            "theorem9",
            "--alpha",
            "1.5",
            "--n",
            "10",
            "--reps",
            "1",
        ],
        &[
            "experiment",
            "lemma1",
            "--alpha",
            "1.5",
            "--n",
            "10",
            "--reps",
            "0",
        ],
        &[
            "experiment",
            "ratio",
            "--alpha",
            "1.5",
            "--n",
            "10",
            "--reps",
            "2",
            "--format",
            "xml",
        ],
        &[
            "experiment",
            "ratio",
            "--alpha",
            "1.5",
            "--n",
            "10",
            "--reps",
            "2",
            "--out",
            "/nonexistent/x.csv",
        ],
    ] {
        let out = betacoal(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty(), "{args:?} printed no diagnostic");
    }
}

use std::process::{Command, Output};

use serde_json::Value;

fn balloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is one JSON document")
}

#[test]
fn simulate_inline_rows() {
    let o = balloc(&[
        "simulate", "--n", "16", "--d", "2", "--balls", "16", "--trials", "10", "--seed", "7",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("trial,balls,gap,phi,psi,gamma,max_load"));
    assert_eq!(lines.count(), 10);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mean gap"));
}

#[test]
fn simulate_is_byte_reproducible_across_workers() {
    let args = [
        "simulate",
        "--n",
        "64",
        "--balls",
        "64,640,6400",
        "--trials",
        "12",
        "--seed",
        "3",
        "--measure",
        "potentials",
    ];
    let a = Command::new(env!("CARGO_BIN_EXE_balloc"))
        .args(args)
        .env("BALLOC_WORKERS", "1")
        .output()
        .unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_balloc"))
        .args(args)
        .env("BALLOC_WORKERS", "6")
        .output()
        .unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, balloc(&args).stdout);
}

#[test]
fn simulate_usage_errors_exit_two() {
    let o = balloc(&["simulate", "--config", "x.json", "--n", "16"]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
    assert_eq!(code(&balloc(&["simulate", "--n", "16"])), 2);
    assert_eq!(
        code(&balloc(&["simulate", "--n", "16", "--balls", "10,5"])),
        2
    );
    assert_eq!(
        code(&balloc(&[
            "simulate", "--n", "16", "--balls", "10", "--d", "0.5"
        ])),
        2
    );
    assert_eq!(
        code(&balloc(&[
            "simulate", "--n", "6", "--balls", "10", "--rule", "left", "--d", "4"
        ])),
        2
    );
}

#[test]
fn simulate_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let out = dir.path().join("out.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"process": {{"rule": "greedy", "d": 2}}, "n": 16, "checkpoints": [16, 160],
                "trials": 3, "seed": 0, "output": {{"format": "json", "path": {:?}}}}}"#,
            out.to_str().unwrap()
        ),
    )
    .unwrap();
    let o = balloc(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let records: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 6);

    std::fs::write(&config, r#"{"process": {"rule": "greedy", "d": 2}, "n": 16, "checkpoints": [10, 10], "trials": 1, "seed": 0}"#).unwrap();
    let o = balloc(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoints not strictly increasing"));
}

#[test]
fn simulate_json_summary() {
    let o = balloc(&[
        "simulate", "--n", "32", "--balls", "32,320", "--trials", "4", "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["summary"].as_array().unwrap().len(), 2);
    assert_eq!(v["records"].as_array().unwrap().len(), 8);
}

#[test]
fn one_choice_gap_exceeds_two_choice() {
    let run = |rule: &str| {
        let o = balloc(&[
            "simulate", "--n", "1024", "--rule", rule, "--balls", "1000000", "--trials", "4",
            "--json",
        ]);
        assert_eq!(code(&o), 0);
        json(&o)["summary"][0]["mean_gap"].as_f64().unwrap()
    };
    let (one, two) = (run("one-choice"), run("greedy"));
    assert!(one > two, "{one} vs {two}");
}

#[test]
fn drift_random_states_pass() {
    let o = balloc(&[
        "drift",
        "--states",
        "random:1000",
        "--n",
        "64",
        "--d",
        "2",
        "--quiet",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("states=1000 failed=0"));
}

#[test]
fn drift_rejects_non_zero_sum_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("states.txt");
    std::fs::write(&path, "# x vectors\n1 0 -1 0\n2 0 0 0\n").unwrap();
    let arg = format!("file:{}", path.display());
    assert_eq!(code(&balloc(&["drift", "--states", &arg])), 2);
    std::fs::write(&path, "1, 0, -1, 0\n-3 1 1 1\n").unwrap();
    let o = balloc(&["drift", "--states", &arg, "--json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["states"], 2);
}

#[test]
fn drift_manual_alpha_is_flagged() {
    let o = balloc(&[
        "drift",
        "--alpha",
        "0.9",
        "--states",
        "random:50",
        "--n",
        "16",
        "--json",
    ]);
    assert!(matches!(code(&o), 0 | 1));
    let v = json(&o);
    assert_eq!(v["manual_alpha"], true);
    assert_eq!(v["note"], "manual α: lemma preconditions not guaranteed");
    let o = balloc(&[
        "drift", "--alpha", "0.9", "--states", "random:5", "--n", "16",
    ]);
    assert!(stdout(&o).contains("manual α: lemma preconditions not guaranteed"));
}

#[test]
fn drift_needs_alpha_for_one_choice_and_rejects_left() {
    assert_eq!(
        code(&balloc(&[
            "drift",
            "--rule",
            "one-choice",
            "--states",
            "random:5"
        ])),
        2
    );
    assert_eq!(
        code(&balloc(&[
            "drift", "--rule", "left", "--states", "random:5"
        ])),
        2
    );
}

#[test]
fn dominance_verdicts() {
    let o = balloc(&[
        "dominance",
        "--n",
        "64",
        "--t-early",
        "1",
        "--t-late",
        "10",
        "--trials",
        "400",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["pass"], true);
    assert_eq!(
        code(&balloc(&["dominance", "--t-early", "10", "--t-late", "1"])),
        2
    );
}

#[test]
fn induction_schedule_and_identity() {
    let o = balloc(&[
        "induction",
        "--L",
        "2",
        "--d",
        "2",
        "--n",
        "64",
        "--trials",
        "50",
    ]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("1\t0.015625\t")), "{out}");

    assert_eq!(code(&balloc(&["induction", "--L", "8", "--n", "64"])), 2);

    let o = balloc(&[
        "induction",
        "--n",
        "64",
        "--d",
        "2",
        "--t",
        "16",
        "--L",
        "8",
        "--schedule-L",
        "2",
        "--trials",
        "200",
        "--json",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["violations"], 0);
    assert_eq!(v["schedule"]["beta"][0]["beta"], 0.015625);
}

#[test]
fn scalar_subcommands() {
    assert_eq!(
        stdout(&balloc(&["fib-base", "--d", "2"])).trim(),
        "1.618033989"
    );
    assert_eq!(
        stdout(&balloc(&[
            "quantile", "--dist", "const1", "--s", "10", "--n", "1024"
        ]))
        .trim(),
        "1"
    );
    let v = json(&balloc(&[
        "quantile", "--dist", "exp", "--s", "3", "--n", "4096", "--json",
    ]));
    let target = v["target"].as_f64().unwrap();
    assert!((v["m_s"].as_f64().unwrap() + target.ln()).abs() < 1e-12);
    assert_eq!(code(&balloc(&["fib-base", "--d", "1"])), 2);
    assert_eq!(
        code(&balloc(&[
            "quantile", "--dist", "exp", "--s", "1", "--n", "8"
        ])),
        2
    );
}

#[test]
fn every_subcommand_takes_seed_and_json() {
    let cases: [&[&str]; 6] = [
        &["simulate", "--n", "8", "--balls", "8"],
        &["drift", "--states", "random:3", "--n", "8"],
        &[
            "dominance",
            "--n",
            "16",
            "--t-early",
            "1",
            "--t-late",
            "2",
            "--trials",
            "50",
        ],
        &[
            "induction",
            "--n",
            "16",
            "--L",
            "2",
            "--t",
            "1",
            "--trials",
            "5",
        ],
        &["fib-base", "--d", "3"],
        &[
            "quantile",
            "--dist",
            "uniform-two:1,2",
            "--s",
            "1",
            "--n",
            "64",
        ],
    ];
    for args in cases {
        let mut full = args.to_vec();
        full.extend(["--seed", "5", "--json"]);
        let o = balloc(&full);
        assert_eq!(
            code(&o),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        json(&o);
    }
}

#[test]
fn help_runs_no_work() {
    for sub in [
        "simulate",
        "drift",
        "dominance",
        "induction",
        "fib-base",
        "quantile",
    ] {
        let o = balloc(&[sub, "--help"]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains("--seed"));
    }
    assert_eq!(code(&balloc(&["frobnicate"])), 2);
}

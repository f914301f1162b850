use balloc_core::experiment::{
    emit, load_config, load_config_file, mean_gap_by_checkpoint, parse_json, render,
    run_experiment, ExperimentConfig, Measurement, OutputFormat, CSV_HEADER,
};
use balloc_core::process::run;
use balloc_core::{ProcessSpec, RngContract, WeightDistribution};

fn weighted_config(trials: u64) -> ExperimentConfig {
    load_config(&format!(
        r#"{{
        "process": {{"rule": "greedy", "d": 2,
                     "weights": {{"kind": "uniform-two", "params": {{"low": 1, "high": 2}}}}}},
        "n": 64, "checkpoints": [64, 640, 6400], "trials": {trials}, "seed": 17,
        "measurements": ["gap", "potentials"]
    }}"#
    ))
    .unwrap()
}

#[test]
fn same_config_gives_identical_bytes() {
    let c = weighted_config(4);
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let a = render(&run_experiment(&c, 0).unwrap(), format).unwrap();
        let b = render(&run_experiment(&c, 0).unwrap(), format).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn worker_count_is_irrelevant() {
    let c = weighted_config(8);
    let one = render(&run_experiment(&c, 1).unwrap(), OutputFormat::Csv).unwrap();
    let eight = render(&run_experiment(&c, 8).unwrap(), OutputFormat::Csv).unwrap();
    assert_eq!(one, eight);
}

#[test]
fn adding_trials_keeps_earlier_ones() {
    let few = run_experiment(&weighted_config(3), 2).unwrap();
    let many = run_experiment(&weighted_config(7), 2).unwrap();
    assert_eq!(few[..], many[..3]);
}

#[test]
fn checkpoints_match_independent_runs() {
    let spec = ProcessSpec::greedy(3.0)
        .unwrap()
        .with_weights(WeightDistribution::Exponential);
    let c = ExperimentConfig::new(spec.clone(), 50, vec![10, 500, 5000], 3, 99).unwrap();
    let results = run_experiment(&c, 3).unwrap();
    let contract = RngContract::new(99);
    for t in &results {
        for r in &t.records {
            let state = run(&spec, 50, r.balls, &mut contract.stream(t.trial)).unwrap();
            assert_eq!(r.gap, state.gap());
            assert_eq!(r.max_load, state.max_load());
        }
    }
}

#[test]
fn json_file_round_trip() {
    let results = run_experiment(&weighted_config(3), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    emit(&results, OutputFormat::Json, &path).unwrap();
    let parsed = parse_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let records: Vec<_> = results.iter().flat_map(|t| &t.records).collect();
    assert_eq!(parsed.len(), records.len());
    for (p, r) in parsed.iter().zip(records) {
        let pot = r.potentials.unwrap();
        assert_eq!((p.trial, p.balls), (r.trial, r.balls));
        assert_eq!(p.gap, r.gap);
        assert_eq!(p.phi, Some(pot.phi));
        assert_eq!(p.psi, Some(pot.psi));
        assert_eq!(p.gamma, Some(pot.gamma));
        assert_eq!(p.max_load, r.max_load);
    }
}

#[test]
fn csv_file_parses_back() {
    let results = run_experiment(&weighted_config(2), 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    emit(&results, OutputFormat::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let records: Vec<_> = results.iter().flat_map(|t| &t.records).collect();
    for (line, r) in lines.zip(records) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[2].parse::<f64>().unwrap(), r.gap);
        assert_eq!(
            fields[5].parse::<f64>().unwrap(),
            r.potentials.unwrap().gamma
        );
    }
}

#[test]
fn config_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"process": {"rule": "left", "d": 2}, "n": 32, "checkpoints": [32, 320],
            "trials": 2, "seed": 1, "measurements": ["gap", "left_layers", "nu"],
            "output": {"format": "json"}}"#,
    )
    .unwrap();
    let c = load_config_file(&path).unwrap();
    assert!(c.measures(Measurement::LeftLayers));
    let results = run_experiment(&c, 0).unwrap();
    let r = &results[1].records[1];
    assert_eq!(r.left_layers.as_ref().unwrap().d, 2);
    assert!(r.nu.is_some());
}

#[test]
fn smoke_run_emits_1100_rows() {
    let checkpoints: Vec<u64> = (10..=20).map(|e| 1u64 << e).collect();
    let c = ExperimentConfig::new(ProcessSpec::greedy(2.0).unwrap(), 1024, checkpoints, 100, 3)
        .unwrap();
    let results = run_experiment(&c, 0).unwrap();
    let csv = render(&results, OutputFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 1100);
    let summary = mean_gap_by_checkpoint(&results);
    assert_eq!(summary.len(), 11);
    assert!(summary.iter().all(|(_, g)| *g > 0.0 && *g < 10.0));
}

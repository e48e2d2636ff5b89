use lasso_sse::harness::*;

fn small_batch() -> ExperimentConfig {
    ExperimentConfig {
        n: 4,
        p: 8,
        s: 1,
        trials: 6,
        methods: vec![Method::Lasso, Method::Exact, Method::EtpgLike, Method::EtpgResidual],
        ..Default::default()
    }
}

fn without_timing(records: &[RunRecord]) -> Vec<RunRecord> {
    records.iter().map(|r| RunRecord { solve_time_seconds: 0.0, ..*r }).collect()
}

#[test]
fn batch_runs_are_reproducible_and_ordered() {
    let first = run_batch_experiment(&small_batch()).unwrap();
    let again = run_batch_experiment(&ExperimentConfig { workers: Some(3), ..small_batch() }).unwrap();
    assert_eq!(without_timing(&first), without_timing(&again));
    assert_eq!(first.len(), 6 * 4);
    let order: Vec<(usize, Method)> = first.iter().map(|r| (r.trial, r.method)).collect();
    let mut sorted = order.clone();
    sorted.sort_by_key(|&(t, _)| t);
    assert_eq!(order, sorted);
    let exact_errors: Vec<f64> = first.iter().filter(|r| r.method == Method::Exact).map(|r| r.state_error).collect();
    assert!(exact_errors.iter().all(|e| *e < 1e-8), "{exact_errors:?}");
}

#[test]
fn records_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    let records = run_batch_experiment(&ExperimentConfig { output_path: Some(path.clone()), ..small_batch() }).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(RECORDS_HEADER));
    assert_eq!(read_records(&path).unwrap(), records);
}

#[test]
fn sweeps_cover_every_point_and_persist_instances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        sweep: Sweep::S { values: vec![1, 2] },
        trials: 2,
        methods: vec![Method::Lasso],
        persist_dir: Some(dir.path().to_path_buf()),
        ..small_batch()
    };
    let records = run_batch_experiment(&cfg).unwrap();
    let summary = summarize(&records, &[GroupKey::Method, GroupKey::S]).unwrap();
    assert_eq!(summary.iter().map(|r| (r.s, r.count)).collect::<Vec<_>>(), vec![(Some(1), 2), (Some(2), 2)]);
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, 2 * 2 * 2);
    let inst = lasso_sse::Instance::read(dir.path().join("point1-trial0.instance.json")).unwrap();
    assert_eq!(inst.scenario.support.len(), 2);
}

#[test]
fn invalid_configs_are_rejected() {
    for bad in [
        ExperimentConfig { trials: 0, ..small_batch() },
        ExperimentConfig { methods: vec![], ..small_batch() },
        ExperimentConfig { s: 9, ..small_batch() },
        ExperimentConfig { lambda_scale: 2.0, ..small_batch() },
        ExperimentConfig { noise_bound: -1.0, ..small_batch() },
    ] {
        assert!(run_batch_experiment(&bad).is_err(), "{bad:?}");
    }
}

#[test]
fn observer_experiment_emits_per_step_means() {
    let cfg = ExperimentConfig {
        n: 4,
        p: 8,
        s: 1,
        trials: 3,
        horizon: 40,
        methods: vec![Method::SoftObserver, Method::BlockObserver, Method::BlockResidualObserver],
        ..Default::default()
    };
    let exp = run_observer_experiment(&cfg).unwrap();
    for (tau, method) in [(4, Method::SoftObserver), (1, Method::BlockObserver), (4, Method::BlockResidualObserver)] {
        let trace = exp.trace(tau, method);
        assert_eq!(trace.len(), 40 - tau + 1);
        assert_eq!(trace.first().unwrap().k, tau - 1);
        assert_eq!(trace.last().unwrap().k, 39);
        let finals = exp.finals_for(tau, method);
        assert_eq!(finals.len(), 3);
        let mean = finals.iter().map(|f| f.state_error).sum::<f64>() / 3.0;
        assert!((mean - trace.last().unwrap().state_error).abs() <= 1e-12);
    }
}

#[test]
fn long_format_is_written_with_header() {
    let records = run_batch_experiment(&ExperimentConfig { trials: 2, ..small_batch() }).unwrap();
    let summary = summarize(&records, &[GroupKey::Method, GroupKey::P]).unwrap();
    let mut buf = Vec::new();
    write_long_format(&long_format(&summary, GroupKey::P), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(LONG_HEADER));
    assert_eq!(lines.next(), Some("x,series,value"));
    assert_eq!(text.lines().count(), 2 + 4 * 3);
    assert!(text.contains("8.0,lasso/state_error,"));
}

use cascade_optomech::params::preset;
use cascade_optomech::sweep::{
    partial_path, read_csv, read_json, run_sweep, run_sweep_with, to_csv, to_json, write_result, Axis, Evaluator,
    Format, RunControl, SweepSpec,
};

fn spec(evaluator: Evaluator, jobs: usize) -> SweepSpec {
    SweepSpec {
        axes: vec![Axis::linear("eta", -1.0, 1.0, 21), Axis::linear("P_common", 0.0, 0.2, 11)],
        evaluator,
        base: preset("fig6").unwrap().params,
        parallelism: jobs,
    }
}

fn entanglement() -> Evaluator {
    Evaluator::Entanglement { paper_literal_d: false }
}

#[test]
fn thread_count_does_not_change_bytes() {
    for ev in [entanglement(), Evaluator::XiTable] {
        let one = run_sweep(&spec(ev.clone(), 1)).unwrap();
        let many = run_sweep(&spec(ev, 8)).unwrap();
        assert_eq!(to_csv(&one), to_csv(&many));
        assert_eq!(to_json(&one), to_json(&many));
    }
}

#[test]
fn interrupted_sweep_resumes_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let s = spec(entanglement(), 4);
    let stop = RunControl {
        checkpoint: Some(out.clone()),
        stop_after: Some(50),
        ..Default::default()
    };
    assert!(run_sweep_with(&s, &stop).is_err());
    assert!(partial_path(&out).exists());
    let resume = RunControl {
        checkpoint: Some(out.clone()),
        ..Default::default()
    };
    let resumed = run_sweep_with(&s, &resume).unwrap();
    write_result(&resumed, &out, Format::Csv).unwrap();
    assert!(!partial_path(&out).exists());
    let fresh = run_sweep(&s).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), to_csv(&fresh));
}

#[test]
fn checkpoint_from_another_spec_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.json");
    let control = RunControl {
        checkpoint: Some(out.clone()),
        stop_after: Some(30),
        ..Default::default()
    };
    let _ = run_sweep_with(&spec(Evaluator::XiTable, 1), &control);
    let s = spec(entanglement(), 1);
    let err = run_sweep_with(&s, &RunControl { checkpoint: Some(out.clone()), ..Default::default() }).unwrap_err();
    assert!(err.to_string().contains("different sweep"), "{err}");
    assert!(partial_path(&out).exists());
}

#[test]
fn csv_and_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_sweep(&spec(entanglement(), 2)).unwrap();
    let (csv_path, json_path) = (dir.path().join("r.csv"), dir.path().join("r.json"));
    write_result(&r, &csv_path, Format::Csv).unwrap();
    write_result(&r, &json_path, Format::Json).unwrap();
    let from_json = read_json(&json_path).unwrap();
    assert_eq!(from_json.cells, r.cells);
    // The thread count is a run-time knob and is not serialised.
    assert_eq!(from_json.spec, SweepSpec { parallelism: 1, ..r.spec.clone() });
    let (header, rows) = read_csv(&csv_path).unwrap();
    assert_eq!(header.last().map(String::as_str), Some("status"));
    assert_eq!(&header[..header.len() - 1], &r.columns[..]);
    assert_eq!(rows.len(), r.cells.len());
    let e_n = r.column("E_N").unwrap();
    for (row, cell) in rows.iter().zip(&r.cells) {
        assert_eq!(row.last().unwrap(), cell.status.as_str());
        if let Some(x) = cell.fields[e_n].as_f64() {
            assert_eq!(row[e_n].parse::<f64>().unwrap(), x);
        }
    }
}

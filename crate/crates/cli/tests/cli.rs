use std::fs;
use std::process::{Command, Output};

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn presets_carry_citations() {
    let o = cascade(&["presets"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fig2", "fig3", "fig5", "fig6", "fig66", "fig8", "fig9"] {
        let line = text.lines().find(|l| l.starts_with(name)).unwrap();
        assert!(line.len() > name.len() + 10, "{line}");
    }
}

#[test]
fn xi_table_has_four_rows() {
    let o = cascade(&["xi", "--preset", "fig2", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "coefficient,re,im");
    assert_eq!(rows.len(), 5);
    let xi11: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((xi11 - 8.656065e5).abs() < 1e-6 * 8.656065e5, "{xi11}");
}

#[test]
fn exit_codes_follow_error_kind() {
    assert_eq!(cascade(&["xi", "--preset", "nope"]).status.code(), Some(1));
    assert_eq!(cascade(&["xi", "--preset", "fig2", "--set", "atom.eta=2"]).status.code(), Some(1));
    assert_eq!(cascade(&["xi", "--preset", "fig2", "--set", "cavity.P1=3MHz"]).status.code(), Some(1));
    assert_eq!(cascade(&["no-such-command"]).status.code(), Some(1));
    // fig2's medium pushes mode 1 past threshold, which the RWA solver reports.
    let o = cascade(&["roots", "--preset", "fig2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("threshold"));
    assert_eq!(cascade(&["xi", "--preset", "fig2", "--config", "/nonexistent.json"]).status.code(), Some(3));
}

#[test]
fn coupled_roots_at_high_power() {
    let o = cascade(&["roots", "--preset", "fig3", "--frame", "beyond-rwa", "--set", "cavity.P1=30uW", "--format", "csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let stable: Vec<&str> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(stable, ["true", "false", "true"]);
}

#[test]
fn entangle_reports_effective_parameters() {
    let o = cascade(&["entangle", "--preset", "fig66", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["result"]["E_N"].as_f64().unwrap() > 0.0);
    assert!(v["effective"]["gamma1"].is_number());
    let literal = cascade(&["entangle", "--preset", "fig66", "--paper-literal-D", "--format", "json"]);
    let w: serde_json::Value = serde_json::from_slice(&literal.stdout).unwrap();
    assert_ne!(v["result"]["E_N"], w["result"]["E_N"]);
}

#[test]
fn sweep_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for jobs in ["1", "4"] {
        let out = dir.path().join(format!("s{jobs}.csv"));
        let o = cascade(&[
            "sweep",
            "--preset",
            "fig6",
            "--evaluator",
            "entanglement",
            "--axis",
            "eta=-1..1/9",
            "--axis",
            "P_common=0mW..200mW/7",
            "--jobs",
            jobs,
            "--quiet",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(!dir.path().join(format!("s{jobs}.csv.partial")).exists());
        files.push(fs::read(out).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files.swap_remove(0)).unwrap();
    assert!(text.starts_with("axis1,axis2,stable,E_N,Lambda,Gamma1,Gamma2,G12,G21,status\n"));
    assert_eq!(text.lines().count(), 1 + 63);
    assert!(text.contains(",unstable,"));
}

#[test]
fn sweep_reports_progress_on_stderr() {
    let o = cascade(&["sweep", "--preset", "fig2", "--evaluator", "xi-table", "--axis", "eta=-1..1/3", "--axis", "Omega=0..1e7/2"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim(), "6/6");
    assert_eq!(stdout(&o).lines().count(), 7);
}

#[test]
fn hysteresis_json_mirrors_trace() {
    let o = cascade(&[
        "hysteresis",
        "--preset",
        "fig3",
        "--p-min",
        "1uW",
        "--p-max",
        "1mW",
        "--steps",
        "100",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["turning_points"].as_array().unwrap().len(), 2);
    assert!(v["branches"].as_array().unwrap().len() >= 3);
    assert!(v["topology"].is_string());
}

#[test]
fn bad_axis_is_rejected() {
    let o = cascade(&["sweep", "--preset", "fig2", "--evaluator", "xi-table", "--axis", "eta=-1..1"]);
    assert_eq!(o.status.code(), Some(1));
}

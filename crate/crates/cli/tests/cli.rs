use std::path::Path;
use std::process::{Command, Output};

fn wzsafe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wzsafe")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn version_and_help_exit_zero() {
    let v = wzsafe(&["--version"]);
    assert_eq!(code(&v), 0);
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(code(&wzsafe(&["--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&wzsafe(&["no-such-command"])), 1);
    assert_eq!(code(&wzsafe(&["simulate"])), 1);
    let o = wzsafe(&["--json-errors", "simulate", "--preset", "2"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "usage");
}

#[test]
fn missing_input_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = wzsafe(&["analyze", "--tracks", s(&missing), "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));

    let o = wzsafe(&["--json-errors", "analyze", "--tracks", s(&missing), "--out", s(dir.path())]);
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["exit_code"], 1);
    assert!(v["message"].as_str().unwrap().contains("nope.csv"));
}

#[test]
fn invalid_scenario_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.json");
    std::fs::write(&scenario, r#"{"sim_duration": -5.0}"#).unwrap();
    let o = wzsafe(&["simulate", "--scenario", s(&scenario), "--out", s(&dir.path().join("t.csv"))]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));

    std::fs::write(&scenario, "{ not json").unwrap();
    let o = wzsafe(&["simulate", "--scenario", s(&scenario), "--out", s(&dir.path().join("t.csv"))]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    // the output path is an existing directory
    let o = wzsafe(&["simulate", "--preset", "2", "--duration", "30", "--out", s(dir.path())]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn simulate_analyze_assess_render() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    let sim = |out: &Path| {
        wzsafe(&[
            "simulate", "--preset", "2", "--seed", "9", "--duration", "400", "--out", s(out), "--detectors",
            s(&p("detectors.csv")),
        ])
    };
    assert_eq!(code(&sim(&p("a.csv"))), 0);
    assert_eq!(code(&sim(&p("b.csv"))), 0);
    let tracks = std::fs::read_to_string(p("a.csv")).unwrap();
    assert_eq!(tracks.lines().next(), Some("vehicle_id,class,t,x,y,v,lane"));
    assert_eq!(tracks, std::fs::read_to_string(p("b.csv")).unwrap());
    assert!(p("detectors.csv").exists());

    let analysis = p("analysis");
    let o = wzsafe(&["analyze", "--tracks", s(&p("a.csv")), "--out", s(&analysis)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(analysis.join("segments.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(analysis.join("report.json")).unwrap()).unwrap();
    assert!(report["rows"].is_array());

    let seq = p("analysis_seq");
    let o = wzsafe(&["--sequential", "analyze", "--tracks", s(&p("a.csv")), "--out", s(&seq)]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(analysis.join("report.json")).unwrap(),
        std::fs::read(seq.join("report.json")).unwrap()
    );

    let o = wzsafe(&["assess", "--density", s(&analysis), "--out", s(&p("assessment.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("assessment.json")).unwrap()).unwrap();
    assert!(a["safe"].is_boolean());

    let density = std::fs::read_dir(&analysis)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("density_"))
        .expect("at least one density field");
    let o = wzsafe(&["render", "--density", s(&density), "--out", s(&p("map"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read(p("map.pgm")).unwrap().starts_with(b"P5"));
    assert!(std::fs::read_to_string(p("map.svg")).unwrap().contains("<svg"));
}

#[test]
fn train_classifier_writes_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.txt");
    let o = wzsafe(&["train-classifier", "--per-class", "40", "--out", s(&model)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read_to_string(model).unwrap().starts_with("wzsafe-classifier v2"));
}

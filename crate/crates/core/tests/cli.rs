use std::path::Path;
use std::process::{Command, Output};

fn gml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gml"))
        .args(args)
        .env_remove("GML_DEPTH_CAP")
        .output()
        .expect("spawn gml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const SPEC: &str = r#"{"schema":1,"bit_model":"uniform","target":"2:00,11","noise":"1/10","length":8}"#;

#[test]
fn bounds_prints_penalty() {
    let o = gml(&[
        "bounds",
        "--n",
        "1",
        "--m",
        "200",
        "--delta",
        "0.1",
        "--weights",
        "geometric",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("0.112641"), "{}", stdout(&o));

    let o = gml(&["bounds", "--n", "1,2", "--m", "200,1000", "--format", "csv"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "n,m,delta,w,penalty,epsilon_n,m_uc,m_agnostic");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,200,0.1,"));
}

#[test]
fn bounds_custom_weights() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(
        dir.path(),
        "w.json",
        r#"{"schema":1,"table":[0.5,0.25],"tail":{"geometric":0.5}}"#,
    );
    let o = gml(&["bounds", "--n", "1", "--m", "200", "--weights", &good]);
    assert!(stdout(&o).contains("0.112641"), "{}", stderr(&o));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"schema":1,"table":[0.9,0.9],"tail":"zero"}"#,
    );
    let o = gml(&["bounds", "--n", "1", "--m", "200", "--weights", &bad]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn measure_outputs() {
    let o = gml(&["measure", "--hypothesis", "2:00,11"]);
    assert_eq!(stdout(&o), "1/2\t0.5\n");
    let o = gml(&["measure", "--shrinking", "3"]);
    assert_eq!(stdout(&o), "1\t1/2\t0.5\n2\t1/4\t0.25\n3\t1/8\t0.125\n");
    let o = gml(&["measure", "--hypothesis", "2:00", "--shrinking", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_then_select_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", SPEC);
    let data = dir.path().join("d.jsonl");
    let data = data.to_str().unwrap();
    let o = gml(&["synth", "--spec", &spec, "--m", "2000", "--seed", "3", "--out", data]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(data).unwrap().lines().count(), 2000);

    let again = dir.path().join("e.jsonl");
    gml(&[
        "synth",
        "--spec",
        &spec,
        "--m",
        "2000",
        "--seed",
        "3",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(data).unwrap(), std::fs::read(&again).unwrap());

    let trace = dir.path().join("trace.csv");
    let o = gml(&[
        "select",
        "--data",
        data,
        "--n-min",
        "1",
        "--n-max",
        "4",
        "--trace-csv",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["rule"], "gml");
    assert_eq!(json["chosen"], "2:00,11");
    assert_eq!(json["chosen_n"], 2);
    assert_eq!(json["per_n_trace"].as_array().unwrap().len(), 4);
    let csv = std::fs::read_to_string(trace).unwrap();
    assert!(csv.starts_with("n,best_empirical_risk,penalty,objective\n"));

    for rule in ["union-erm", "holdout"] {
        let o = gml(&["select", "--data", data, "--rule", rule]);
        assert!(o.status.success(), "{rule}: {}", stderr(&o));
    }
}

#[test]
fn select_missing_file_is_io_error() {
    let o = gml(&["select", "--data", "/nonexistent/missing.jsonl"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/nonexistent/missing.jsonl"));
}

#[test]
fn select_bad_rows_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(
        dir.path(),
        "d.jsonl",
        "{\"x\":\"01\",\"y\":1}\n{\"x\":\"01\",\"y\":3}\n",
    );
    let o = gml(&["select", "--data", &data]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2"), "{}", stderr(&o));
}

#[test]
fn depth_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_gml"))
        .args(["measure", "--hypothesis", "3:000"])
        .env("GML_DEPTH_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn oracle_check_passes() {
    let o = gml(&["oracle-check", "--n", "3", "--samples", "100", "--seed", "7"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "PASS 100/100");
    let o = gml(&["oracle-check", "--n", "4"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn experiment_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{"schema":1,"distribution":{SPEC},"m_values":[50,100],"trials":20,"delta":0.1,
                "weights":"geometric","n_range":[1,3],"root_seed":1}}"#
        ),
    );
    let out = dir.path().join("out");
    let run = |sub: &str, format: &str| {
        let target = out.join(sub);
        let o = gml(&[
            "experiment",
            "--config",
            &cfg,
            "--out",
            target.to_str().unwrap(),
            "--format",
            format,
            "--paranoid",
            "--threads",
            "2",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        target
    };
    let a = run("a", "csv");
    let b = run("b", "csv");
    for f in ["violation.csv", "consistency.csv"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let v = std::fs::read_to_string(a.join("violation.csv")).unwrap();
    assert!(v.starts_with("n,m,trials,violations,rate,rate_ci_lo,rate_ci_hi\n"));
    assert_eq!(v.lines().filter(|l| l.starts_with("any,")).count(), 2);

    let j = run("j", "json");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(j.join("consistency.json")).unwrap()).unwrap();
    assert_eq!(parsed["schema"], 1);
}

#[test]
fn experiment_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{"distribution":{SPEC},"m_values":[50],"trials":0,"delta":0.1,
                "weights":"geometric","n_range":[1,3],"root_seed":1}}"#
        ),
    );
    let out = dir.path().join("o");
    let o = gml(&["experiment", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = gml(&[
        "experiment",
        "--config",
        "/nonexistent/c.json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(gml(&[]).status.code(), Some(1));
    assert_eq!(
        gml(&["bounds", "--n", "1", "--m", "2", "--bogus"]).status.code(),
        Some(1)
    );
    for sub in ["bounds", "measure", "synth", "select", "oracle-check", "experiment"] {
        let o = gml(&[sub, "--help"]);
        assert!(o.status.success(), "{sub}");
        assert!(stdout(&o).contains("Usage"), "{sub}");
    }
}

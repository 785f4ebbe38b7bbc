use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lowertail"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn missing_sparse_radius_exits_two_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"command":"estimate","regime":"sparse","a":0.5,"params":{"d":1,"n":100,"k0":2}}"#);
    let out = bin().arg("--config").arg(&cfg).arg("--out").arg(dir.path().join("o.csv")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r_n"));
}

#[test]
fn unknown_field_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"command":"sample","params":{"d":1,"n":10},"colour":"red"}"#);
    let out = bin().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn unreadable_config_exits_one() {
    let out = bin().args(["--config", "/nonexistent/cfg.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_is_byte_identical_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"command":"estimate","regime":"sparse","a":0.5,"seed":1,"replicates":200,"params":{"d":1,"n":100,"k0":2,"r_n":0.001}}"#,
    );
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = bin()
            .arg("--config")
            .arg(&cfg)
            .args(["--seed", "42", "--replicates", "300", "--threads", threads, "--out"])
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(summary["status"], "ok");
        std::fs::read_to_string(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "2");
    assert_eq!(a, b);
    assert!(a.contains("# seed: 42"));
    assert!(a.contains("\"replicates\":300"));
    let header = a.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "speed,a,p_hat,SE,normalized_log");
}

#[test]
fn verify_defaults_pass_and_write_bound_checks() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    let out = bin().arg("verify").arg("--out").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["name", "empirical", "bound", "SEs", "pass"]);
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert!(rows.len() > 50);
    assert!(rows.iter().all(|r| &r[4] == "true"));
}

#[test]
fn json_output_and_sample_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"command":"rate","regime":"dense","rate_grid":[0.25,0.5],"params":{"d":1,"n":100,"k":1,"a_n":3.0}}"#);
    let path = dir.path().join("r.json");
    let out = bin().arg("--config").arg(&cfg).args(["--format", "json", "--out"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let rate = doc["results"]["solutions"][0]["rate"].as_f64().unwrap();
    assert!((rate - 0.25).abs() < 1e-6);

    let pts = dir.path().join("p.csv");
    let out = bin().args(["sample", "--seed", "3", "--config"]).arg(&cfg).arg("--out").arg(&pts).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let phi = lowertail::geometry::read_points(std::fs::File::open(&pts).unwrap()).unwrap();
    assert_eq!(phi.dim(), 1);
}

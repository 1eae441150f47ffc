use std::process::Command;

fn snowprobe(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_snowprobe"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(snowprobe(&["--bogus"]).0, 1);
    assert_eq!(snowprobe(&["--space", "nonsense(", "exponent"]).0, 1);
    assert_eq!(snowprobe(&["--help"]).0, 0);
}

#[test]
fn non_metric_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "0,1,5\n1,0,1\n5,1,0\n").unwrap();
    let path = path.to_str().unwrap();
    assert_eq!(snowprobe(&["--in", path, "validate"]).0, 2);
    assert_eq!(snowprobe(&["--in", path, "exponent"]).0, 2);
}

#[test]
fn exponent_json_reports_the_snowflake_exponent() {
    let (code, out) = snowprobe(&[
        "--space",
        "snowflake(euclidean:2,0.5)",
        "--count",
        "40",
        "--json",
        "exponent",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let p = v["p_star"].as_f64().unwrap();
    assert!((p - 2.0).abs() < 1e-6, "p* = {p}");
}

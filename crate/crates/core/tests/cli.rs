use std::path::PathBuf;
use std::process::{Command, Output};

fn qtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtm")).args(args).output().unwrap()
}

fn machine(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("machines")
        .join(format!("{name}.qtm"))
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn validate_exit_codes() {
    assert_eq!(qtm(&["validate", &machine("two_phase")]).status.code(), Some(0));
    assert_eq!(qtm(&["validate", &machine("permutation"), "--window", "3"]).status.code(), Some(0));
    let o = qtm(&["validate", &machine("halt_violator")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("halt-violation"));
}

#[test]
fn malformed_file_reports_line() {
    let dir = std::env::temp_dir().join(format!("qtm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.qtm");
    std::fs::write(&path, "qtm 1\nalphabet 2\nstates 2\ninitial 0\nrule 0 0 0 -> 0 0 9 R 1 0\n").unwrap();
    let o = qtm(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("line=5"), "{}", stdout(&o));
    assert_eq!(qtm(&["validate", "/no/such/file.qtm"]).status.code(), Some(2));
    assert_eq!(qtm(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn compare_two_phase_agrees() {
    let o = qtm(&["compare", &machine("two_phase"), "--steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("row label=1 monitored=5.000000000000e-1"));
    assert!(text.contains("row label=26 monitored=5.000000000000e-1"));
}

#[test]
fn compare_violator_disagrees_when_forced() {
    assert_eq!(qtm(&["compare", &machine("halt_violator"), "--steps", "2"]).status.code(), Some(1));
    let o = qtm(&["compare", &machine("halt_violator"), "--steps", "2", "--force"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("max-diff=5.000000000000e-1"));
}

#[test]
fn qnd_truncation_error_exit_code() {
    let o = qtm(&["qnd", &machine("two_phase"), "--max-steps", "3", "--window", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("required-radius=12"));
}

#[test]
fn qnd_passes_on_a_unitary_walk() {
    let o = qtm(&["qnd", &machine("hadamard_walk"), "--max-steps", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn json_lines_are_valid() {
    let o = qtm(&["--format", "json", "sample", &machine("two_phase"), "--steps", "2", "--runs", "500", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("record").is_some());
    }
}

#[test]
fn sample_is_deterministic_per_seed() {
    let args = ["sample", &machine("two_phase"), "--steps", "2", "--runs", "2000", "--seed", "42"];
    let a = qtm(&args);
    let b = qtm(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = qtm(&["sample", &machine("two_phase"), "--steps", "2", "--runs", "2000", "--seed", "43"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn example_round_trips() {
    let o = qtm(&["example", "permutation"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(qtm::parse_machine(&stdout(&o)).is_ok());
    assert!(stdout(&qtm(&["example"])).contains("machine name=two_phase"));
}

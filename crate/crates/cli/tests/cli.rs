use std::path::Path;
use std::process::{Command, Output};

fn bcsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcsep"))
        .args(args)
        .env_remove("THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path) -> String {
    let out = bcsep(&["demo", "pja-nonstationary", "--print-config"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let first = text.split("\n# ").next().unwrap();
    let path = dir.join("ns.toml");
    std::fs::write(&path, first).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn oracle_recovers_every_generator_set() {
    let out = bcsep(&["oracle", "--instances", "5", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,alphabet,instances,recovered,min_cosine");
    assert_eq!(lines.len(), 7);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(3) == Some("5")));
}

#[test]
fn config_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let args = ["run", "--config", &config, "--trials", "2", "--seed", "9", "--threads", "1"];
    let a = bcsep(&args);
    let b = bcsep(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("snr_db,method,trials,failures,mean_dlpr_db,std_dlpr_db,mean_wall_ms"));
    assert_eq!(text.lines().count(), 1 + 5 * 3);
}

#[test]
fn outputs_are_written_to_the_requested_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = bcsep(&["run", "--config", &config, "--trials", "1", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.iter().any(|n| n.ends_with(".csv")), "{names:?}");
}

#[test]
fn configuration_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[scenario]\nantennas = 0\n").unwrap();
    assert_eq!(bcsep(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bcsep(&["run", "--config", "/nonexistent/x.toml"]).status.code(), Some(2));
    assert_eq!(bcsep(&["demo", "no-such-preset"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = bcsep(&["run", "--config", &config, "--trials", "1", "--out", blocker.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

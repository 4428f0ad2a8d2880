//! End-to-end runs of the `dcs` binary on the small linear problem.

use std::path::{Path, PathBuf};
use std::process::Command;

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dcs-bin-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn dcs(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dcs")).args(args).output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn converge_local_writes_table_and_manifest() {
    let out = scratch("local");
    let o = dcs(&["converge-local", "--problem", "linear2x2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(&out, "local.csv");
    assert!(table.starts_with("# dcs-csv v1 "));
    assert!(table.lines().nth(1).unwrap().starts_with("dt,k,error"));
    assert!(read(&out, "manifest.txt").contains("command=converge-local"));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn manifest_replay_reproduces_output() {
    let first = scratch("replay-a");
    let second = scratch("replay-b");
    let o = dcs(&[
        "run", "--problem", "linear2x2", "--scheme", "strang", "--eta", "1e-7", "--out", first.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = first.join("manifest.txt");
    let o = dcs(&["run", "--config", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["steps.csv", "trajectory.csv", "final_state.csv", "manifest.txt"] {
        assert_eq!(read(&first, name), read(&second, name), "{name} differs");
    }
    assert_eq!(
        std::fs::read(first.join("final_state.dcs1")).unwrap(),
        std::fs::read(second.join("final_state.dcs1")).unwrap()
    );
    std::fs::remove_dir_all(first).unwrap();
    std::fs::remove_dir_all(second).unwrap();
}

#[test]
fn bad_arguments_exit_with_usage_error() {
    let o = dcs(&["run", "--spatial-order", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dcs(&["run", "--problem", "lorenz"]);
    assert_eq!(o.status.code(), Some(2));
}

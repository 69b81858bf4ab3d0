use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn temple(args: &[&str], out: &Path) -> Output {
    let output = Command::new(env!("CARGO_BIN_EXE_temple"))
        .args(args)
        .env("TEMPLE_OUTPUT_DIR", out)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "temple {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

const SMALL: [&str; 8] = ["--episodes", "40", "--tasks", "3", "--seeds", "2", "--learners", "otemple,rmax-single"];

#[test]
fn run_writes_csv_and_libraries() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run", "--task", "two-goal"];
    args.extend(SMALL);
    let out = temple(&args, dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("otemple"));

    let tasks = fs::read_to_string(dir.path().join("tasks.csv")).unwrap();
    assert!(tasks.starts_with("# temple-metrics v1\nseed,task_index,learner,"));
    assert_eq!(tasks.lines().count(), 2 + 2 * 2 * 3);
    assert!(fs::read_to_string(dir.path().join("summary.csv")).unwrap().starts_with("# temple-summary v1"));
    let library = fs::read_to_string(dir.path().join("templates_otemple_seed1.txt")).unwrap();
    assert!(library.starts_with("# temple-templates v1"));

    // The written config reproduces the run byte for byte.
    let again = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    temple(&["run", "--config", config.to_str().unwrap()], again.path());
    assert_eq!(tasks, fs::read_to_string(again.path().join("tasks.csv")).unwrap());

    let lib_path = dir.path().join("templates_otemple_seed0.txt");
    let out = temple(&["inspect-templates", "--library", lib_path.to_str().unwrap()], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).contains("pooled visits"));
}

#[test]
fn sweep_writes_one_block_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--param", "user_gap", "--values", "0.05,0.15"];
    args.extend(SMALL);
    temple(&args, dir.path());
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("# temple-sweep v1\nparam,value,seed"));
    assert_eq!(sweep.lines().filter(|l| l.starts_with("user_gap,0.050000")).count(), 12);
    assert_eq!(sweep.lines().filter(|l| l.starts_with("user_gap,0.150000")).count(), 12);
}

#[test]
fn inspect_ice_maze() {
    let dir = tempfile::tempdir().unwrap();
    let out = temple(&["inspect-templates", "--task", "ice", "--size", "5", "--show-maze"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("size 5 5"));
    assert_eq!(text.lines().filter(|l| l.contains("probs [")).count(), 2);
}

#[test]
fn bad_flags_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_temple"))
        .args(["run", "--small", "900"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("small_threshold"));
}

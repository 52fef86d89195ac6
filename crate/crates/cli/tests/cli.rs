use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-grad"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn csv_header_and_rows() {
    let o = run(&[
        "estimate",
        "--alpha",
        "1.5",
        "--iters",
        "20",
        "--seeds",
        "0..2",
        "--methods",
        "vclip",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("study,method,setting,alpha,seed,iter,metric,value")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        &first[..7],
        ["estimate", "vclip", "fixed", "1.5", "0", "1", "rel_error"]
    );
    // 2 seeds × 20 iterations + 3 summary rows
    assert_eq!(text.lines().count(), 1 + 40 + 3);
}

#[test]
fn jsonl_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.jsonl");
    let o = run(&[
        "moments",
        "--trials",
        "100",
        "--n-samples",
        "1,3",
        "--alpha",
        "1.5",
        "--format",
        "jsonl",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2 * 2 * 3);
    for line in text.lines() {
        assert!(
            line.starts_with('{') && line.contains("\"study\":\"moments\""),
            "{line}"
        );
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"methods": ["l1-median"], "setting": "s1", "iters": 5, "seeds": [3], "dim": 2}"#,
    )
    .unwrap();
    let o = run(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--iters",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let last_loss = text.lines().rfind(|l| l.contains(",loss,")).unwrap();
    assert!(
        last_loss.starts_with("optimize,l1-median,s1,1.1,3,3,loss,"),
        "{last_loss}"
    );
}

#[test]
fn config_errors_exit_with_one() {
    for args in [
        &["nonsense"][..],
        &["estimate", "--alpha", "2.5"],
        &["estimate", "--methods", "adam"],
        &["optimize", "--setting", "s9"],
        &["estimate", "--format", "xml"],
        &["estimate", "--bogus-flag"],
        &["moments", "--trials", "0"],
        &["estimate", "--config", "/nonexistent/config.json"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"iterations": 5}"#).unwrap();
    let o = run(&["estimate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_reports_json_and_succeeds() {
    let o = run(&["check"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("\"passed\": true"));
    assert!(!text.contains("\"passed\": false"));
}

#[test]
fn help_exits_zero() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--n-samples"));
}

#[test]
fn byte_identical_across_reruns_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for (i, jobs) in ["1", "1", "3"].iter().enumerate() {
        let path = dir.path().join(format!("o{i}.csv"));
        let o = run(&[
            "optimize",
            "--iters",
            "50",
            "--seeds",
            "0..4",
            "--setting",
            "s1,s2",
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        bodies.push(fs::read(&path).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);
}

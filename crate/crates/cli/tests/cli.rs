use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prl"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn prl")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const CHAIN: &str = r#"{"n_objectives": 2, "edges": [[0, 1]]}"#;

#[test]
fn select_prunes_along_a_chain() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.json"), CHAIN).unwrap();
    // objective 0 cannot separate a0 and a1; a2 is far behind
    fs::write(d.path().join("q0.csv"), "tau,a0,a1,a2\n0.25,1,1,-5\n0.75,2,2,-4\n").unwrap();
    // objective 1 prefers a1 strongly, and would prefer a2 even more
    fs::write(d.path().join("q1.csv"), "tau,a0,a1,a2\n0.25,0,3,9\n0.75,0,3,9\n").unwrap();
    let o = prl(
        &["select", "--preorder", "p.json", "--out", "s.csv", "q0.csv", "q1.csv"],
        d.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(d.path().join("s.csv")).unwrap();
    assert_eq!(text, "objective,actions\n0,0 1\n1,1\nglobal,1\n");
}

#[test]
fn malformed_config_exits_with_2() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.json"), r#"{"schema_version": 7}"#).unwrap();
    assert_eq!(code(&prl(&["train", "--config", "c.json"], d.path())), 2);
    fs::write(d.path().join("cyc.json"), r#"{"n_objectives": 2, "edges": [[0, 1], [1, 0]]}"#).unwrap();
    fs::write(d.path().join("q.csv"), "tau,a0\n0.5,1\n").unwrap();
    assert_eq!(
        code(&prl(&["select", "--preorder", "cyc.json", "q.csv", "q.csv"], d.path())),
        2
    );
}

#[test]
fn missing_artifact_exits_with_3() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.json"), CHAIN).unwrap();
    assert_eq!(
        code(&prl(&["select", "--preorder", "p.json", "nope0.csv", "nope1.csv"], d.path())),
        3
    );
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/chain.json");
    let o = prl(&["evaluate", "--config", cfg.to_str().unwrap(), "--out", "empty"], d.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shape_mismatch_exits_with_4() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.json"), CHAIN).unwrap();
    fs::write(d.path().join("q0.csv"), "tau,a0,a1\n0.5,1,2\n").unwrap();
    fs::write(d.path().join("q1.csv"), "tau,a0,a1,a2\n0.5,1,2,3\n").unwrap();
    assert_eq!(code(&prl(&["select", "--preorder", "p.json", "q0.csv", "q1.csv"], d.path())), 4);
    // one file for two objectives
    assert_eq!(code(&prl(&["select", "--preorder", "p.json", "q0.csv"], d.path())), 4);
}

#[test]
fn stats_writes_summary_and_improvement_tables() {
    let d = tempfile::tempdir().unwrap();
    let mut s = String::from("algorithm,seed,run,score\n");
    for i in 0..8 {
        s.push_str(&format!("A,{i},0,{}\n", i + 1));
        s.push_str(&format!("B,{i},0,{}\n", i));
    }
    fs::write(d.path().join("scores.csv"), s).unwrap();
    let o = prl(&["stats", "--scores", "scores.csv", "--out", "st", "--resamples", "200"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(d.path().join("st/stats_summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("A,8,4.500000,4.500000,")), "{summary}");
    assert!(d.path().join("st/improvement.csv").exists());
    assert!(d.path().join("st/stats.svg").exists());
}

#[test]
fn chain_config_trains_and_compares() {
    let d = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/chain.json");
    let cfg = cfg.to_str().unwrap();
    let o = prl(&["train", "--config", cfg, "--out", "o", "--seeds", "0"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = prl(&["compare", "--config", cfg, "--out", "o", "--seeds", "0"], d.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["metrics.csv", "summary.csv", "scores.csv", "ablation.csv", "rewards.csv", "success_rate.svg"] {
        assert!(d.path().join("o").join(f).exists(), "{f}");
    }
}

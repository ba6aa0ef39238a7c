use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use focl::fixtures;

fn focl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_focl")).args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Setup {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Setup {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        std::fs::write(root.join("db.jsonl"), fixtures::CITATIONS_JSONL).unwrap();
        Setup { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn index(&self) -> PathBuf {
        let ix = self.path("c.fidx");
        let out = focl(&["precompute", "--db", p(&self.path("db.jsonl")), "--k", "1", "--q", "2", "--max-atoms", "2", "--index", p(&ix)]);
        assert!(out.status.success(), "{}", text(&out.stderr));
        let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert!(stats["stats"]["table_entries"].as_u64().unwrap() > 0);
        ix
    }
}

#[test]
fn learns_the_citation_example() {
    let s = Setup::new();
    let ix = s.index();
    let train = s.path("train.jsonl");
    std::fs::write(&train, "{\"tuple\":[\"a1\"],\"label\":3}\n{\"tuple\":[\"a2\"],\"label\":0}\n").unwrap();
    let h = s.path("h.json");
    let out = focl(&["learn", "--index", p(&ix), "--train", p(&train), "--out", p(&h)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(h.exists());

    let out = focl(&["evalh", "--index", p(&ix), "--hypothesis", p(&h), "--tuple", "a1", "--tuple", "a2"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let values: Vec<i64> = text(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["value"].as_i64().unwrap())
        .collect();
    assert_eq!(values, [3, 0]);
}

#[test]
fn contradictory_labels_exit_with_reject() {
    let s = Setup::new();
    let ix = s.index();
    let train = s.path("bad.jsonl");
    std::fs::write(&train, "{\"tuple\":[\"a1\"],\"label\":3}\n{\"tuple\":[\"a1\"],\"label\":2}\n").unwrap();
    let out = focl(&["learn", "--index", p(&ix), "--train", p(&train), "--out", p(&s.path("h.json"))]);
    assert_eq!(out.status.code(), Some(4));
    assert!(text(&out.stderr).contains("reject: contradictory labels"), "{}", text(&out.stderr));
    assert!(!s.path("h.json").exists());
}

#[test]
fn eval_prints_the_value() {
    let s = Setup::new();
    let out = focl(&["eval", "--db", p(&s.path("db.jsonl")), "--term", fixtures::CITATIONS_TERM, "--at", "x=a1"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 3);
}

#[test]
fn exit_codes_separate_usage_input_and_reject() {
    let s = Setup::new();
    assert_eq!(focl(&["learn"]).status.code(), Some(2));
    let db = s.path("db.jsonl");
    assert_eq!(focl(&["eval", "--db", p(&db), "--term", "#(z).(", "--at", "x=a1"]).status.code(), Some(3));
    assert_eq!(focl(&["eval", "--db", p(&s.path("missing.jsonl")), "--term", "1"]).status.code(), Some(3));
    let garbage = s.path("garbage.fidx");
    std::fs::write(&garbage, "not an index").unwrap();
    let out = focl(&["learn", "--index", p(&garbage), "--train", p(&db), "--out", p(&s.path("h.json"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_documents_the_grammar() {
    let out = focl(&["--help"]);
    assert!(out.status.success());
    let help = text(&out.stdout);
    assert!(help.contains("'#' '(' v"), "{help}");
    assert!(help.contains("4 reject"));
}

#[test]
fn check_is_reproducible_from_the_seed() {
    let args = ["check", "--seed", "9", "--eval-samples", "200", "--learn-runs", "3"];
    let a = focl(&args);
    assert!(a.status.success(), "{}", text(&a.stderr));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["eval"]["pass"], 200);
    assert_eq!(v["learn"]["fail"], 0);
    assert_eq!(a.stdout, focl(&args).stdout);
}

#[test]
fn bench_emits_csv() {
    let out = focl(&["bench", "--seed", "3", "--sizes", "200,400", "--examples", "4"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,d,s,phase,wall_time,oracle_calls"));
    let phases: Vec<&str> = lines.map(|l| l.split(',').nth(3).unwrap()).collect();
    assert_eq!(&phases[..2], ["precompute", "learn"]);
    assert!(phases.iter().filter(|&&p| p == "learn").count() == 2);
}

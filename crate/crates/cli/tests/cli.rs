use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn qp(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qp"))
        .arg("--store")
        .arg(store)
        .args(args)
        .env_remove("QP_STORE")
        .output()
        .expect("run qp")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_each_document_and_fails_on_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let good = fixtures().join("docs/01_direct.json");
    let bad = dir.path().join("bad.jsonl");
    let good_line = serde_json::to_string(&serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(&good).unwrap()).unwrap()).unwrap();
    std::fs::write(&bad, format!("{good_line}\n{{\"doc_id\": 3}}\n")).unwrap();

    let o = qp(dir.path(), &["validate", path(&good)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("1 files, 1 valid, 0 invalid"));

    let o = qp(dir.path(), &["validate", path(&good), path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("bad.jsonl: document 2:"), "{out}");
    assert!(out.contains("2 files, 2 valid, 1 invalid"), "{out}");
}

#[test]
fn annotate_is_idempotent_and_feeds_stats_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let docs = fixtures().join("docs");

    let o = qp(&store, &["annotate", path(&docs)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("annotated 10, unchanged 0, failed 0"), "{}", stderr(&o));

    let o = qp(&store, &["--jobs", "2", "annotate", path(&docs)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("annotated 0, unchanged 10, failed 0"), "{}", stderr(&o));

    let o = qp(&store, &["annotate", "--stdout", path(&docs.join("04_legault.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(line["doc_id"], "qt-04-legault");

    let o = qp(&store, &["stats", "--outlet", "Le Devoir"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("Outlet,% Men,% Women,% Unknown/Other,Total articles\n"), "{out}");
    assert!(out.contains("\nLe Devoir,"));
    assert!(!out.contains("\nLa Presse,"));
    assert!(out.contains("Month,Gender,Rank,Source,Quotes"));

    let o = qp(&store, &["stats", "--from", "1990-01-01", "--to", "1990-12-31"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("no annotated articles"));

    let out_dir = dir.path().join("report");
    let o = qp(&store, &["stats", "--out-dir", path(&out_dir)]);
    assert_eq!(o.status.code(), Some(0));
    for f in ["breakdown.csv", "top_sources.csv", "breakdown.json", "top_sources.json"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }

    let report = dir.path().join("eval.json");
    let gold = fixtures().join("gold");
    let o = qp(&store, &["evaluate", "--gold", path(&gold), "--docs", path(&docs), "--threshold", "0.3", "--output", path(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("references (gold_speakers): correct 7 / system 7 / gold 7"), "{}", stdout(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn evaluate_reads_system_directories_and_warns_on_unmatched_gold() {
    let dir = tempfile::tempdir().unwrap();
    let system = dir.path().join("system");
    std::fs::create_dir(&system).unwrap();
    std::fs::copy(fixtures().join("golden/01_direct.json"), system.join("01_direct.json")).unwrap();

    let o = qp(dir.path(), &["evaluate", "--gold", path(&fixtures().join("gold")), "--system", path(&system)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("articles: 1"), "{}", stdout(&o));
    assert!(stderr(&o).contains("no system annotation"), "{}", stderr(&o));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = qp(dir.path(), &["evaluate", "--gold", path(&empty), "--system", path(&system)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no gold annotations"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qp")).args(["stats"]).env_remove("QP_STORE").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no store given"));

    let o = qp(dir.path(), &["stats", "--from", "2022-05-01", "--to", "2022-01-01"]);
    assert_eq!(o.status.code(), Some(2));

    let o = qp(dir.path(), &["evaluate", "--gold", path(&fixtures().join("gold")), "--threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = qp(dir.path(), &["stats", "--from", "not-a-date"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn store_location_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qp"))
        .args(["annotate", path(&fixtures().join("src/10_pleut.conllu"))])
        .env("QP_STORE", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("annotated 1,"));
}

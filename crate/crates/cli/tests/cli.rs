mod common;

use common::{fplfix, ok, SIX_SCORES};

#[test]
fn workload_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &["workload", "--sizes", "32,512,2048", "--baseline", "2048"],
    );
    assert_eq!(
        out,
        "N,ops,percent\n32,63,1.5385\n512,1023,24.9817\n2048,4095,100.0000\n"
    );
}

#[test]
fn eval_verify_on_six_scores() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), SIX_SCORES).unwrap();
    ok(
        dir.path(),
        &["eval-verify", "--scores", "s.csv", "--out", "report.json"],
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["eer"].as_f64().unwrap(), 1.0 / 3.0);
    assert_eq!(report["mated_count"], 3);
    assert!(dir.path().join("det.csv").exists());
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = fplfix(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn errors_are_single_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = fplfix(
        dir.path(),
        &["eval-verify", "--scores", "missing.csv", "--out", "r.json"],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    let last = err.lines().last().unwrap();
    assert!(last.starts_with("error: io: "), "{err}");

    let out = fplfix(dir.path(), &["workload", "--nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: usage: "));
}

#[test]
fn concat_requires_both_archives() {
    let dir = tempfile::tempdir().unwrap();
    let out = fplfix(
        dir.path(),
        &[
            "extract",
            "--branch",
            "concat",
            "--out",
            "a.fpeb",
            "--texture-archive",
            "t.fpeb",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.lines().last().unwrap().starts_with("error: invalid-argument: "),
        "{err}"
    );
}

#[test]
fn config_is_echoed_with_defaulted_seed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.csv"), SIX_SCORES).unwrap();
    let out = fplfix(dir.path(), &["compare", "--input", "none.fpeb", "--out", "x.csv"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.lines().next().unwrap().starts_with("config: "));
    assert!(err.contains("\"seed\":0"));
}

#[test]
fn sweep_cache_gives_identical_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "--identities",
            "6",
            "--samples",
            "3",
            "--seed",
            "5",
            "--out",
            "c",
        ],
    );
    let args = |out: &'static str, cache: bool| {
        let mut v = vec!["sweep", "--manifest", "c/manifest.csv", "--dims", "4,8", "--out", out];
        if cache {
            v.extend(["--cache", "raw.fpeb"]);
        }
        v
    };
    ok(d, &args("plain.csv", false));
    ok(d, &args("first.csv", true));
    ok(d, &args("cached.csv", true));
    let read = |f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read("plain.csv"), read("first.csv"));
    assert_eq!(read("plain.csv"), read("cached.csv"));
    let text = String::from_utf8(read("plain.csv")).unwrap();
    assert!(text.starts_with("N,ops,fnmr,eer\n4,7,"));
}

use std::path::Path;
use std::process::{Command, Output};

fn spvp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spvp")).current_dir(dir).arg("--quiet").args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = spvp(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read(dir: &Path, p: &str) -> Vec<u8> {
    std::fs::read(dir.join(p)).unwrap_or_else(|e| panic!("{p}: {e}"))
}

fn corpus(dir: &Path) {
    ok(
        dir,
        &[
            "synth",
            "--out",
            "corpus",
            "--grid-rows",
            "3",
            "--grid-cols",
            "3",
            "--query-count",
            "12",
            "--repetitive-fraction",
            "0.6",
            "--viewpoint-shift",
            "0.2",
            "--seed",
            "4",
        ],
    );
}

const RUN: &[&str] = &["run", "--manifest", "corpus/manifest.csv", "--sample-size", "5000", "--seed", "3"];

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for sub in [
        "synth",
        "sample",
        "train-codebook",
        "fit-pca",
        "encode",
        "index",
        "search",
        "evaluate",
        "sweep",
        "validate-manifest",
        "inspect-features",
        "run",
    ] {
        let out = spvp(dir.path(), &[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
    assert_eq!(code(&spvp(dir.path(), &["--version"])), 0);
}

#[test]
fn bad_flags_fail_before_touching_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for args in [
        &["run", "--pca", "patch", "--work-dir", "w"][..],
        &["run", "--method", "nope", "--work-dir", "w"],
        &["run", "--top-n", "0", "--work-dir", "w"],
        &["synth", "--out", "w", "--repetitive-fraction", "2"],
        &["search", "--index", "a", "--queries", "b", "--out", "w", "--top-n", "0"],
        &["sample", "--manifest", "m.csv", "--out", "w", "--size", "0"],
    ] {
        assert_eq!(code(&spvp(d, args)), 1, "{args:?}");
    }
    assert_eq!(std::fs::read_dir(d).unwrap().count(), 0);
}

#[test]
fn data_errors_exit_with_2_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&spvp(d, &["run", "--manifest", "missing.csv"])), 2);
    corpus(d);
    std::fs::write(d.join("corpus/features/q0003.pvfm"), b"PVFM garbage").unwrap();
    let out = spvp(d, &["validate-manifest", "corpus/manifest.csv"]);
    assert_eq!(code(&out), 2);
    let out = spvp(d, &["run", "--manifest", "corpus/manifest.csv", "--method", "spoc"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("load") && err.contains("q0003.pvfm"), "{err}");
    assert_eq!(code(&spvp(d, &["inspect-features", "corpus/features/q0003.pvfm"])), 2);
}

#[test]
fn runs_are_reproducible_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(d, &["validate-manifest", "corpus/manifest.csv", "--dim", "40"]);
    ok(d, &[RUN, &["--work-dir", "a", "--k", "16"]].concat());
    ok(d, &[RUN, &["--work-dir", "b", "--k", "16"]].concat());
    for f in ["report.jsonl", "sweep.jsonl", "ranks.tsv", "sweep_ranks.tsv", "results.tsv", "database.pvix"] {
        assert_eq!(read(d, &format!("a/spvp/{f}")), read(d, &format!("b/spvp/{f}")), "{f}");
    }
    let before = read(d, "a/spvp/report.jsonl");
    ok(d, &[RUN, &["--work-dir", "a", "--k", "16"]].concat());
    assert_eq!(read(d, "a/spvp/report.jsonl"), before);
    assert_eq!(code(&spvp(d, &[RUN, &["--work-dir", "a", "--k", "8"]].concat())), 1);
    ok(d, &[RUN, &["--work-dir", "a", "--k", "8", "--force"]].concat());

    let sweep = String::from_utf8(read(d, "b/spvp/sweep.jsonl")).unwrap();
    assert_eq!(sweep.lines().count(), 5 * 4);
}

#[test]
fn staged_commands_match_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    ok(d, &[RUN, &["--work-dir", "w", "--method", "vlad", "--k", "16"]].concat());
    let m = "corpus/manifest.csv";
    ok(d, &["sample", "--manifest", m, "--out", "s.pvfm", "--size", "5000", "--seed", "3"]);
    assert_eq!(read(d, "s.pvfm"), read(d, "w/samples.pvfm"));
    ok(d, &["train-codebook", "--samples", "s.pvfm", "--out", "c.pvcb", "--k", "16", "--seed", "3"]);
    assert_eq!(read(d, "c.pvcb"), read(d, "w/codebook.pvcb"));
    for (split, out) in [("database", "db.pvix"), ("query", "q.pvix")] {
        ok(d, &["encode", "--manifest", m, "--split", split, "--method", "vlad", "--codebook", "c.pvcb", "--out", out]);
    }
    assert_eq!(read(d, "db.pvix"), read(d, "w/vlad/database.pvix"));
    ok(d, &["index", "--descriptors", "db.pvix", "--out", "i.pvix"]);
    ok(d, &["search", "--index", "i.pvix", "--queries", "q.pvix", "--out", "r.tsv"]);
    assert_eq!(read(d, "r.tsv"), read(d, "w/vlad/results.tsv"));
    ok(d, &["evaluate", "--manifest", m, "--results", "r.tsv", "--out", "e.jsonl", "--ranks", "e.tsv"]);
    assert_eq!(read(d, "e.jsonl"), read(d, "w/vlad/report.jsonl"));
    assert_eq!(read(d, "e.tsv"), read(d, "w/vlad/ranks.tsv"));
    ok(d, &["sweep", "--manifest", m, "--results", "r.tsv", "--out", "s.jsonl"]);
    assert_eq!(read(d, "s.jsonl"), read(d, "w/vlad/sweep.jsonl"));
}

#[test]
fn pca_and_baseline_methods_complete() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    for extra in [
        &["--method", "mac"][..],
        &["--method", "gem", "--gem-p", "4"],
        &["--method", "bovw"],
        &["--pca", "patch", "--pca-dim", "32", "--work-dir", "p"],
        &["--pca", "global", "--pca-dim", "16", "--whiten", "--work-dir", "g"],
    ] {
        ok(d, &[RUN, &["--k", "16"], extra].concat());
    }
    let m = "corpus/manifest.csv";
    ok(
        d,
        &[
            "fit-pca",
            "--manifest",
            m,
            "--codebook",
            "p/codebook.pvcb",
            "--pca",
            "patch",
            "--pca-dim",
            "32",
            "--seed",
            "3",
            "--out",
            "pca.pvpc",
        ],
    );
    assert_eq!(read(d, "pca.pvpc"), read(d, "p/spvp/pca.pvpc"));
    let report = String::from_utf8(read(d, "work/mac/report.jsonl")).unwrap();
    assert!(report.starts_with("{\"threshold_m\":25.0,\"n\":1,"));
}

#[test]
fn run_reads_a_config_file_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    std::fs::write(
        d.join("run.toml"),
        "manifest = \"corpus/manifest.csv\"\nwork_dir = \"cfg\"\nmethod = \"spoc\"\nthresholds = [15.0, 35.0]\nn_values = [1, 3]\n",
    )
    .unwrap();
    ok(d, &["run", "--config", "run.toml", "--top-n", "3"]);
    let sweep = String::from_utf8(read(d, "cfg/spoc/sweep.jsonl")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    ok(d, &["run", "--config", "run.toml", "--method", "mac"]);
    assert!(d.join("cfg/mac/report.jsonl").exists());
    std::fs::write(d.join("bad.toml"), "colour = 3\n").unwrap();
    assert_eq!(code(&spvp(d, &["run", "--config", "bad.toml"])), 1);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_onionprint");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, fingers: u32, impressions: u32, images: bool) -> PathBuf {
    let out = dir.join(if images { "img" } else { "min" });
    let (f, i) = (fingers.to_string(), impressions.to_string());
    let mut args = vec![
        "synth",
        "--out",
        s(&out),
        "--seed",
        "7",
        "--fingers",
        &f,
        "--impressions",
        &i,
    ];
    if images {
        args.push("--images");
    }
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|r| r.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn extract_writes_a_minutiae_file() {
    let dir = tempfile::tempdir().unwrap();
    let img = synth(dir.path(), 1, 1, true).join("001_1.pgm");
    let out = dir.path().join("a.min");
    let o = run(&["extract", s(&img), "-o", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# onionprint-minutiae v1"));
    assert!(text.lines().count() > 3);
}

#[test]
fn truncated_image_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P5\n10 10\n255\n\x00\x01\x02").unwrap();
    let o = run(&["extract", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.pgm"), "{}", stderr(&o));
}

#[test]
fn blank_image_has_no_minutiae() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pgm");
    let mut bytes = b"P5\n64 64\n255\n".to_vec();
    bytes.extend(std::iter::repeat_n(230u8, 64 * 64));
    std::fs::write(&blank, bytes).unwrap();
    let o = run(&["extract", s(&blank)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "# onionprint-minutiae v1");
}

#[test]
fn self_match_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), 1, 1, false).join("001_1.min");
    let o = run(&["match", s(&a), s(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "final score"), "1.000000");
}

#[test]
fn match_output_formats() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 2, 2, false);
    let (a, b) = (db.join("001_1.min"), db.join("001_2.min"));
    let pairs = dir.path().join("pairs.csv");

    let o = run(&["match", s(&a), s(&b), "--json", "--pairs", s(&pairs)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let k = v["k"].as_u64().unwrap();
    assert!(k > 0);
    let rows = std::fs::read_to_string(&pairs).unwrap();
    assert!(rows.starts_with("i,j,xi,yi,xj,yj,sd,dd"));
    assert_eq!(rows.lines().count() as u64, k + 1);

    let o = run(&["match", s(&a), s(&b), "--csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("idA,idB,k,"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    let final_csv: f64 = lines[1].split(',').nth(11).unwrap().parse().unwrap();
    assert!((final_csv - v["final_score"].as_f64().unwrap()).abs() < 1e-6);

    assert_eq!(
        run(&["match", s(&a), s(&b), "--csv", "--json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn image_and_extracted_file_score_alike() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 1, 2, true);
    let (a, b) = (db.join("001_1.pgm"), db.join("001_2.pgm"));
    let a_min = dir.path().join("a.min");
    assert!(run(&["extract", s(&a), "-o", s(&a_min)]).status.success());
    let from_image = stdout(&run(&["match", s(&a), s(&b)]));
    let from_file = stdout(&run(&["match", s(&a_min), s(&b)]));
    assert_eq!(from_image, from_file);
}

#[test]
fn unreadable_match_input() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.txt");
    std::fs::write(&junk, "hello").unwrap();
    let missing = dir.path().join("missing.min");
    assert_eq!(run(&["match", s(&junk), s(&junk)]).status.code(), Some(2));
    assert_eq!(
        run(&["match", s(&missing), s(&junk)]).status.code(),
        Some(2)
    );
}

#[test]
fn bad_parameters_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), 1, 1, false).join("001_1.min");
    for args in [["--r0", "-1"], ["--sim", "abc"], ["--binarize", "median"]] {
        let o = run(&["match", s(&a), s(&a), args[0], args[1]]);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

fn evaluate(dataset: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["evaluate", s(dataset), "--out", s(out)];
    args.extend_from_slice(extra);
    run(&args)
}

fn labels(scores: &Path) -> (usize, usize) {
    let text = std::fs::read_to_string(scores).unwrap();
    let g = text.lines().filter(|l| l.ends_with(",genuine")).count();
    let i = text.lines().filter(|l| l.ends_with(",impostor")).count();
    (g, i)
}

#[test]
fn evaluate_protocols_on_a_toy_set() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 2, 2, false);
    let fvc = dir.path().join("fvc");
    let o = evaluate(&db, &fvc, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(labels(&fvc.join("scores.csv")), (2, 1));
    for f in ["curves.csv", "summary.txt"] {
        assert!(fvc.join(f).is_file());
    }
    let all = dir.path().join("all");
    assert!(evaluate(&db, &all, &["--mode", "all-pairs"])
        .status
        .success());
    assert_eq!(labels(&all.join("scores.csv")), (2, 4));
}

#[test]
fn evaluate_is_reproducible_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 3, 2, false);
    let outs: Vec<PathBuf> = (0..3).map(|i| dir.path().join(format!("r{i}"))).collect();
    assert!(evaluate(&db, &outs[0], &["--mode", "all-pairs"])
        .status
        .success());
    assert!(
        evaluate(&db, &outs[1], &["--mode", "all-pairs", "--threads", "1"])
            .status
            .success()
    );
    assert!(
        evaluate(&db, &outs[2], &["--mode", "all-pairs", "--threads", "4"])
            .status
            .success()
    );
    for f in ["scores.csv", "curves.csv", "summary.txt"] {
        let first = std::fs::read(outs[0].join(f)).unwrap();
        for o in &outs[1..] {
            assert_eq!(first, std::fs::read(o.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn manifest_with_missing_file_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 2, 1, false);
    let manifest = dir.path().join("list.csv");
    std::fs::write(
        &manifest,
        format!(
            "finger_id,impression_id,path\n1,1,{}\n2,1,{}\n",
            s(&db.join("001_1.min")),
            s(&db.join("nope.min"))
        ),
    )
    .unwrap();
    let o = evaluate(&manifest, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));
}

#[test]
fn empty_dataset_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let o = evaluate(&empty, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn sweep_writes_one_directory_per_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 2, 2, false);
    let out = dir.path().join("sweep");
    let o = run(&[
        "sweep",
        s(&db),
        "--out",
        s(&out),
        "--sim",
        "0.1,0.2",
        "--diff",
        "1,inf",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let index = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(index.lines().count(), 5);
    for i in 0..4 {
        assert!(out
            .join(format!("config_{i:03}"))
            .join("scores.csv")
            .is_file());
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let db = synth(dir.path(), 2, 2, false);
    let cfg = dir.path().join("match.cfg");
    std::fs::write(&cfg, "sim = 0.9\nr0 = 12\n").unwrap();
    let out = dir.path().join("out");
    let o = evaluate(&db, &out, &["--config", s(&cfg), "--sim", "0.05"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(
        summary.lines().any(|l| l.replace(' ', "") == "sim=0.05"),
        "{summary}"
    );
    assert!(
        summary.lines().any(|l| l.replace(' ', "") == "r0=12"),
        "{summary}"
    );
}

use std::path::Path;
use std::process::{Command, Output};

fn qjl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qjl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qjl(args);
    assert!(
        out.status.success(),
        "qjl {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn buffon_pmf_csv() {
    let out = ok(&["buffon", "pmf", "--a", "0.5", "--n", "3"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "k,p");
    let p: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(p.len(), 2);
    assert!((p[0] - 0.75).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12);
}

#[test]
fn buffon_moment_and_mc() {
    let out = ok(&["buffon", "moment", "--a", "0.7", "--n", "5", "--q", "3"]);
    let row: Vec<f64> = out
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[1] - qjl::tau(5).unwrap() * 0.7).abs() < 1e-12);

    let mc = qjl(&[
        "buffon", "mc", "--a", "2.5", "--n", "3", "--count", "20000", "--seed", "3",
    ]);
    assert!(mc.status.success());
    assert!(String::from_utf8_lossy(&mc.stderr).contains("total variation distance"));
    assert_eq!(String::from_utf8_lossy(&mc.stdout).lines().count(), 5);
}

#[test]
fn embed_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "0,0,0\n3,4,0\n0,0,1\n").unwrap();
    let bjls = dir.path().join("s.bjls");
    ok(&[
        "embed",
        "--points",
        s(&pts),
        "--m",
        "4096",
        "--delta",
        "0.1",
        "--seed",
        "9",
        "--out",
        s(&bjls),
    ]);
    assert_eq!(std::fs::read(&bjls).unwrap().len(), 39 + 3 * 4096 * 8);

    for metric in ["l1", "l2"] {
        let dists = dir.path().join(format!("{metric}.csv"));
        ok(&[
            "estimate",
            "--sketches",
            s(&bjls),
            "--metric",
            metric,
            "--out",
            s(&dists),
        ]);
        let text = std::fs::read_to_string(&dists).unwrap();
        let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(&first[..2], &["0", "1"]);
        let d: f64 = first[2].parse().unwrap();
        assert!((d - 5.0).abs() < 0.5, "{metric}: {d}");
    }
    let wrong = qjl(&["estimate", "--sketches", s(&bjls), "--metric", "hamming"]);
    assert!(!wrong.status.success());

    let bits = dir.path().join("b.bjls");
    ok(&[
        "embed",
        "--points",
        s(&pts),
        "--m",
        "2048",
        "--delta",
        "1",
        "--binary",
        "--out",
        s(&bits),
    ]);
    let ham = ok(&["estimate", "--sketches", s(&bits), "--metric", "hamming"]);
    assert_eq!(ham.lines().count(), 4);
}

#[test]
fn gdelta_table_rows() {
    let out = ok(&[
        "gdelta", "table", "--n", "4", "--delta", "0.5", "--points", "64",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "lambda,g,lower_bound,upper_bound");
    assert_eq!(lines.len(), 65);
    assert!(
        qjl(&["gdelta", "table", "--n", "4", "--delta", "0.5", "--points", "10"])
            .status
            .code()
            != Some(0)
    );
}

#[test]
fn experiment_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "points = 5\ndim = 6\nm_sweep = [32, 64]\ntrials = 2\nseed = 4\n\
         delta = { value = 0.5, relative_to = \"mean_dist\" }\n",
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["experiment", "l2", "--config", s(&cfg), "--out", s(&a)]);
    ok(&[
        "experiment",
        "replay",
        "--manifest",
        s(&a.join("manifest.json")),
        "--out",
        s(&b),
    ]);
    for f in [
        "records.csv",
        "aggregates.csv",
        "summary.csv",
        "manifest.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }

    let eq = qjl(&[
        "experiment",
        "equivalence",
        "--a",
        "0.5",
        "--n",
        "2",
        "--samples",
        "100000",
    ]);
    assert!(eq.status.success());

    std::fs::write(
        &cfg,
        "points = 5\ndim = 6\nm_sweep = []\ntrials = 2\nseed = 4\ndelta = { value = 0.5 }\n",
    )
    .unwrap();
    assert!(!qjl(&[
        "experiment",
        "distortion",
        "--config",
        s(&cfg),
        "--out",
        s(&a)
    ])
    .status
    .success());
}

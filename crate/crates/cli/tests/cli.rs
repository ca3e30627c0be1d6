use std::path::Path;
use std::process::Command;

use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetbandit"))
}

fn run(args: &[&str]) -> std::process::Output {
    bin().args(args).output().expect("spawn hetbandit")
}

/// Data rows of a results CSV with the wall-clock column dropped.
fn body_without_wall(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema_version=1"));
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(rest.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let wall = header.iter().position(|h| h == "wall_ms").unwrap();
    rdr.records()
        .map(|r| {
            r.unwrap()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != wall)
                .map(|(_, f)| f.to_string())
                .collect()
        })
        .collect()
}

fn read_table(path: &Path) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(path).unwrap();
    let rest = text.split_once('\n').unwrap().1.to_string();
    csv::Reader::from_reader(rest.as_bytes()).records().map(|r| r.unwrap()).collect()
}

const INTRO: &[&str] = &["run", "--preset", "intro", "--kappa", "5", "--reps", "3", "--seed", "7"];

#[test]
fn identical_config_gives_identical_rows() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out_a = run(&[INTRO, &["--jobs", "1", "--out", a.to_str().unwrap()]].concat());
    assert!(out_a.status.success(), "{}", String::from_utf8_lossy(&out_a.stderr));
    let out_b = run(&[INTRO, &["--jobs", "2", "--out", b.to_str().unwrap()]].concat());
    assert!(out_b.status.success());
    let rows = body_without_wall(&a);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows, body_without_wall(&b));
    let seeds: Vec<&str> = rows.iter().step_by(4).map(|r| r[2].as_str()).collect();
    let mut distinct = seeds.clone();
    distinct.dedup();
    assert_eq!(distinct.len(), 3);
    for chunk in rows.chunks(4) {
        let algs: Vec<&str> = chunk.iter().map(|r| r[1].as_str()).collect();
        assert_eq!(algs, ["hrage", "rage", "oracle-het", "oracle-hom"]);
        assert!(chunk.iter().all(|r| r[0] == "intro" && r[3] == "total_pulls" && r[8] == "ok"));
    }
}

#[test]
fn summary_recomputes_from_rows() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("res.csv");
    assert!(run(&[INTRO, &["--out", out.to_str().unwrap()]].concat()).status.success());
    let rows = read_table(&out);
    let summary = read_table(&dir.path().join("res_summary.csv"));
    assert_eq!(summary.len(), 4);
    for s in &summary {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| &r[1] == &s[0] && &r[3] == &s[1])
            .map(|r| r[4].parse().unwrap())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert_eq!(s[2].parse::<usize>().unwrap(), vals.len());
        let got_mean: f64 = s[4].parse().unwrap();
        let got_sem: f64 = s[5].parse().unwrap();
        assert!((got_mean - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        assert!((got_sem - sd / n.sqrt()).abs() <= 1e-9 * got_sem.abs().max(1.0));
        let correct = rows.iter().filter(|r| &r[1] == &s[0] && &r[5] == "true").count();
        assert_eq!(s[6].parse::<usize>().unwrap(), correct);
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "# variance comparison\npreset = varest\nreps = 2\nd = 3\nn_unit = 10\nn_small = 10\ngammas = 400\n",
    )
    .unwrap();
    let out = dir.path().join("v.csv");
    let res = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "algorithms=head,separate",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = read_table(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| &r[3] == "mae@400" && &r[9] == "ok"));
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn failed_runs_are_rows_not_aborts() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("f.csv");
    // 4 pulls cannot cover the stage designs, so every estimator errors.
    let res = run(&[
        "run", "--preset", "varest", "--reps", "2", "--set", "d=3", "--set", "n_unit=10", "--set", "n_small=10",
        "--set", "gammas=4", "--set", "algorithms=head", "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let rows = read_table(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[9].starts_with("error:") && r[4].is_empty()));
    assert!(String::from_utf8_lossy(&res.stdout).contains("failed=2"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["run", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--preset", "intro", "--set", "kappa=0.5"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--preset", "intro", "--set", "bogus"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--preset", "example1", "--set", "kappa=3"]).status.code(), Some(2));
    assert_eq!(run(&["complexity", "--preset", "varest"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--config", "/nonexistent/x.cfg"]).status.code(), Some(2));
    let dir = tempdir().unwrap();
    let bad = dir.path().join("missing").join("out.csv");
    let res = run(&["run", "--preset", "intro", "--reps", "1", "--out", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("missing"));
}

#[test]
fn design_table_for_intro() {
    let dir = tempdir().unwrap();
    let out = dir.path().join("design.csv");
    let res = run(&["design", "--preset", "intro", "--kappa", "20", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let rows = read_table(&out);
    assert_eq!(rows.len(), 3);
    let w = |i: usize, c: usize| rows[i][c].parse::<f64>().unwrap();
    assert!(w(0, 3) + w(2, 3) >= 0.9);
    assert!(w(1, 4) >= 0.5);
    let total: f64 = (0..3).map(|i| w(i, 3)).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert_eq!(&rows[1][2], "20");
}

#[test]
fn design_table_for_example1_has_every_arm() {
    let res = run(&["design", "--preset", "example1"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 9);
}

#[test]
fn complexity_printout() {
    let res = run(&["complexity", "--preset", "intro", "--kappa", "1"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let ratio: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("psi*/rho* = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((ratio - 1.0).abs() < 1e-9);
    assert!(text.contains("lower bound"));
}

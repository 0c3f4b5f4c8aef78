use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bcd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcd")).args(args).output().expect("binary runs")
}

fn write_plan(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn run_plan(plan: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--plan", plan.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bcd(&args)
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect()
}

/// `name = value` lines of a constants block.
fn constant(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` line"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

const TOEPLITZ: &str = r#"{
  "problem": {"kind": "toeplitz", "blocks": 10},
  "runs": [{"algorithm": "exact_bcd", "order": "cyclic", "max_cycles": 50}],
  "bounds": ["thm2_scalar", "gd"]
}"#;

#[test]
fn toeplitz_plan_writes_one_trajectory_and_one_bound_csv() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "plan.json", TOEPLITZ);
    let out = dir.path().join("out");
    let o = run_plan(&plan, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let written = files(&out);
    let csvs: Vec<_> = written.keys().filter(|k| k.ends_with(".csv")).collect();
    assert_eq!(csvs, ["bounds.csv", "trajectory_00_exact_bcd_block_lk_cyclic.csv"]);
    assert!(written.contains_key("summary.txt"));
    let bounds = String::from_utf8(written["bounds.csv"].clone()).unwrap();
    let lines: Vec<_> = bounds.lines().collect();
    assert_eq!(lines[0], "r,thm2_scalar,gd");
    assert_eq!(lines.len(), 51);
    let traj = String::from_utf8(written["trajectory_00_exact_bcd_block_lk_cyclic.csv"].clone()).unwrap();
    assert_eq!(traj.lines().count(), 52);
    let summary = stdout(&o);
    assert!(summary.contains("statement L <= 18"));
    assert!(summary.contains("bound thm2_scalar numerator"));
}

#[test]
fn mismatched_pairing_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        "plan.json",
        r#"{"problem": {"kind": "toeplitz", "blocks": 10},
            "runs": [{"algorithm": "exact_bcd", "max_cycles": 10, "envelopes": ["thm2_scalar", "gd"]}]}"#,
    );
    let out = dir.path().join("out");
    let o = run_plan(&plan, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("runs[0].envelopes[1]"), "{err}");
    assert!(err.contains("`gd` does not cover `exact_bcd`"), "{err}");
    assert!(!out.exists());
}

#[test]
fn invalid_plans_report_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    for (text, path) in [
        (r#"{"problem": {"kind": "toeplitz", "blocks": 10}, "runs": [{"algorithm": "bcpg", "max_cycles": "many"}]}"#, "runs[0].max_cycles"),
        (r#"{"problem": {"kind": "toeplitz", "blocks": 10}, "runs": [{"algorithm": "newton", "max_cycles": 3}]}"#, "runs[0].algorithm"),
        (r#"{"problem": {"kind": "toeplitz", "blocks": 10}, "runs": [], "colour": 1}"#, "colour"),
        (r#"{"problem": {"kind": "lasso", "rows": 5, "blocks": 3}, "runs": []}"#, "problem."),
        (r#"{"problem": {"kind": "toeplitz", "blocks": 10}, "runs": [{"algorithm": "bcpg", "max_cycles": 0}]}"#, "runs[0].max_cycles"),
    ] {
        let plan = write_plan(dir.path(), "bad.json", text);
        let o = run_plan(&plan, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(stderr(&o).contains(path), "{text}: {}", stderr(&o));
    }
}

#[test]
fn table1_summary_reads_back_the_bcpg_constants() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        "plan.json",
        r#"{"problem": {"kind": "table1_full", "blocks": 100, "lipschitz": 2.0},
            "runs": [{"algorithm": "bcpg", "stepsizes": "global_l", "max_cycles": 20, "envelopes": ["thm1_uniform"]},
                     {"algorithm": "bcpg", "stepsizes": "block_lk", "max_cycles": 20, "envelopes": ["thm1_blockwise"]}],
            "bounds": ["thm1_uniform", "thm1_blockwise"]}"#,
    );
    let out = dir.path().join("out");
    let o = run_plan(&plan, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = fs::read_to_string(out.join("summary.txt")).unwrap();
    let (l, lmax, lmin) = (constant(&s, "L"), constant(&s, "L_max"), constant(&s, "L_min"));
    let read = |run: &str, kind: &str| -> f64 {
        let section = s.split("run ").find(|b| b.starts_with(run)).expect("run section");
        let line = section
            .lines()
            .find(|l| l.trim_start().starts_with(&format!("bound {kind} ")))
            .expect("bound line");
        line.split("constant = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap()
    };
    assert_eq!(read("00_bcpg_global_l", "thm1_uniform"), l);
    let blockwise = read("01_bcpg_block_lk", "thm1_blockwise");
    assert!((blockwise / (lmax + l * l / lmin) - 1.0).abs() < 1e-14);
    assert!(blockwise > 50.0 * l);
    assert!(s.contains("checks: 2 of 2 passed"));
}

#[test]
fn identical_plan_and_seed_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(
        dir.path(),
        "plan.json",
        r#"{"problem": {"kind": "lasso", "rows": 20, "blocks": 12, "seed": 4},
            "runs": [{"algorithm": "bcpg", "order": "random_permutation", "max_cycles": 40, "envelopes": ["thm1_blockwise"]},
                     {"algorithm": "bcpg", "order": "sampled_with_replacement", "max_cycles": 40},
                     {"algorithm": "exact_bcd", "order": "random_permutation", "max_cycles": 40, "envelopes": ["thm2_case3"]},
                     {"algorithm": "bcpg", "stepsizes": "global_l", "max_cycles": 40}],
            "bounds": ["thm1_uniform", "thm1_blockwise", "thm2_case3", "prior_cyclic"]}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (out, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = run_plan(&plan, out, &["--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(files(&a), files(&b));
    let (fa, fc) = (files(&a), files(&c));
    assert_ne!(fa["trajectory_00_bcpg_block_lk_permuted.csv"], fc["trajectory_00_bcpg_block_lk_permuted.csv"]);
    assert_eq!(fa["trajectory_03_bcpg_global_l_cyclic.csv"], fc["trajectory_03_bcpg_global_l_cyclic.csv"]);
}

#[test]
fn problem_files_resolve_relative_to_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    write_plan(dir.path(), "problem.json", r#"{"kind": "toeplitz", "blocks": 6}"#);
    let plan = write_plan(
        dir.path(),
        "plan.json",
        r#"{"problem": {"file": "problem.json"}, "runs": [{"algorithm": "cgd", "max_cycles": 10, "envelopes": ["thm3"]}],
            "bounds": ["thm3", "coro1"]}"#,
    );
    let out = dir.path().join("out");
    let o = run_plan(&plan, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("problem toeplitz_k6"));
    assert!(out.join("checks.csv").exists());
}

#[test]
fn verify_truncation_passes_and_writes_report_twins() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = bcd(&["verify", "--suite", "truncation", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = fs::read_to_string(out.join("verify_truncation.txt")).unwrap();
    let csv = fs::read_to_string(out.join("verify_truncation.csv")).unwrap();
    assert_eq!(csv.lines().count(), text.lines().count() + 1);
    assert!(text.lines().all(|l| l.contains(" PASS ")));
}

#[test]
fn tightness_prints_the_ratio_table_and_fails_only_the_stated_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t");
    let o = bcd(&["tightness", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    let failed: Vec<_> = s.lines().filter(|l| l.contains(" FAIL ")).collect();
    assert_eq!(failed.len(), 4);
    assert!(failed.iter().all(|l| l.contains("_objective_stated ")));
    let table = fs::read_to_string(out.join("tightness_ratio.csv")).unwrap();
    let ks: Vec<_> = table.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    assert_eq!(ks, ["5", "10", "25", "50"]);
    for line in table.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(v[5] >= v[6], "ratio below bound: {line}");
        assert!((v[1] - v[3]).abs() < 1e-12, "rowwise objective: {line}");
    }
    assert!(s.contains(&table));
    let alias = bcd(&["verify", "--suite", "tightness"]);
    assert_eq!(stdout(&alias), s);
}

#[test]
fn bounds_on_two_coordinates_leave_theorem_columns_empty() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_plan(
        dir.path(),
        "p.json",
        r#"{"kind": "explicit", "rows": 2, "blocks": 2, "entries": [1.0, 0.5, 0.0, 1.0], "b": [1.0, 0.0]}"#,
    );
    let out = dir.path().join("b");
    let o = bcd(&["bounds", "--problem", problem.to_str().unwrap(), "--rmax", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("notice: K N = 2"));
    let csv = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for (i, name) in header.iter().enumerate().skip(1) {
        let empty = rows.iter().all(|r| r[i].is_empty());
        assert_eq!(empty, name.starts_with("thm1") || name.starts_with("thm2"), "{name}");
    }
}

#[test]
fn bounds_on_table1_diagonal_compare_thm1_uniform_with_gd() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_plan(dir.path(), "p.json", r#"{"kind": "table1_diag", "blocks": 10, "lipschitz": 2.0}"#);
    let out = dir.path().join("b");
    let o = bcd(&["bounds", "--problem", problem.to_str().unwrap(), "--rmax", "200", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ell = constant(&stdout(&o), "log(2NK)");
    let csv = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
    let (u, g) = (col("thm1_uniform"), col("gd"));
    for line in lines {
        let v: Vec<&str> = line.split(',').collect();
        let r: f64 = v[0].parse().unwrap();
        let ratio = v[u].parse::<f64>().unwrap() / v[g].parse::<f64>().unwrap();
        let want = 3.0 * 4.0 * ell * ell / 2.0 * (r + 4.0) / r;
        assert!((ratio / want - 1.0).abs() < 1e-12, "r={r}");
    }
}

#[test]
fn bounds_accepts_a_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "plan.json", TOEPLITZ);
    let out = dir.path().join("b");
    let o = bcd(&["bounds", "--plan", plan.to_str().unwrap(), "--rmax", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = fs::read_to_string(out.join("constants.txt")).unwrap();
    assert!(s.contains("statement L <= 18: L = ") && s.contains(" holds"));
    assert!(constant(&s, "L") <= 18.0);
}

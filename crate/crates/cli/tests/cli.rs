use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn nhbdi(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nhbdi"));
    cmd.arg("run").args(args).env("RUST_LOG", "warn");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = nhbdi(args, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn deterministic_peak_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("running_example.toml");
    let d = dir.path().to_str().unwrap();
    let stdout = run_ok(&["--scenario", sc.to_str().unwrap(), "--command", "deterministic", "--delay-d", "10", "--out-dir", d]);
    assert!(stdout.contains("at t = 57.32"), "{stdout}");

    let rows = read_csv(&dir.path().join("deterministic.csv"));
    assert_eq!(rows[0], ["t", "i_bar", "a_bar", "b_bar", "r_bar"]);
    let series: Vec<(f64, f64)> = rows[1..].iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    let (t_peak, peak) = series.iter().copied().fold((0.0, 0.0), |b, x| if x.1 > b.1 { x } else { b });
    assert!((t_peak - 57.32).abs() <= 0.02);
    let at_300 = series.iter().find(|x| x.0 == 300.0).unwrap().1;
    assert!(at_300 / peak < 1e-4, "{at_300}");

    let daily = read_csv(&dir.path().join("daily.csv"));
    assert_eq!(daily[0], ["day", "i_new", "r_new"]);
    assert_eq!(daily.len(), 501);
}

#[test]
fn pmf_zero_entry_near_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario("running_example.toml");
    run_ok(&["--scenario", sc.to_str().unwrap(), "--command", "pmf", "--t", "150", "--out-dir", dir.path().to_str().unwrap()]);
    let rows = read_csv(&dir.path().join("pmf_t150.csv"));
    assert_eq!(rows[0], ["k", "p"]);
    let p0: f64 = rows[1][1].parse().unwrap();
    assert!((p0 - 1.0 / 3.0).abs() < 0.01, "{p0}");
    let total: f64 = rows[1..].iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-8);
}

#[test]
fn table_moments_mesh_and_oracle_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let sc = scenario("running_example_d5.toml");
    let sc = sc.to_str().unwrap();
    run_ok(&["--scenario", sc, "--command", "table", "--t-end", "100", "--out-dir", d, "--svg"]);
    assert_eq!(read_csv(&dir.path().join("table.csv"))[0], ["t", "s", "sigma", "n", "l", "m"]);
    for svg in ["rates.svg", "s.svg", "sigma.svg", "lm.svg"] {
        assert!(std::fs::read_to_string(dir.path().join(svg)).unwrap().starts_with("<svg"));
    }

    run_ok(&["--scenario", sc, "--command", "moments", "--t-end", "100", "--out-dir", d]);
    let m = read_csv(&dir.path().join("moments.csv"));
    assert_eq!(m[0], ["t", "mean", "variance", "cv"]);
    assert_eq!(m.len(), 102);

    run_ok(&["--scenario", sc, "--command", "mesh", "--t-end", "20", "--k-max", "50", "--k-stride", "5", "--out-dir", d, "--svg"]);
    let mesh = read_csv(&dir.path().join("mesh.csv"));
    assert_eq!(mesh[0][0], "k");
    assert_eq!(mesh[0].len(), 22);
    assert_eq!(mesh.len(), 12);
    assert_eq!(mesh[2][0], "5");
    assert!(dir.path().join("mesh.svg").exists());

    let bdi = scenario("running_example_bdi.toml");
    run_ok(&["--scenario", bdi.to_str().unwrap(), "--command", "oracle", "--t", "8", "--k-max", "400", "--out-dir", d]);
    let q = read_csv(&dir.path().join("oracle_t8.csv"));
    assert_eq!(q[0], ["k", "q"]);
    assert_eq!(q.last().unwrap()[0], "leaked");
    assert_eq!(q.len(), 403);
}

#[test]
fn simulate_is_reproducible_across_thread_counts() {
    let sc = scenario("running_example_bdi.toml");
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let args = [
            "--scenario",
            sc.to_str().unwrap(),
            "--command",
            "simulate",
            "--t-end",
            "20",
            "--reps",
            "500",
            "--seed",
            "42",
            "--paths",
            "2",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ];
        let out = nhbdi(&args, &[("NHBDI_THREADS", threads)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
        files.push((read("snapshots.csv"), read("daily_stats.csv"), read("paths.csv")));
    }
    assert_eq!(files[0], files[1]);
    for text in [&files[0].0, &files[0].1, &files[0].2] {
        assert!(text.starts_with("# master_seed=42\n"));
    }
    assert!(files[0].2.lines().nth(1).unwrap() == "path_id,time,kind,population_after");
}

#[test]
fn validate_shipped_scenarios() {
    for name in ["running_example.toml", "running_example_d0.toml", "running_example_d5.toml", "running_example_d10.toml", "running_example_bdi.toml"] {
        let sc = scenario(name);
        let stdout = run_ok(&["--scenario", sc.to_str().unwrap(), "--command", "validate", "--only", "1,2,3,4,5,6,7,8,11,12"]);
        assert!(stdout.contains("10 of 10 criteria passed"), "{name}: {stdout}");
    }
}

#[test]
fn full_validate_exits_zero() {
    let sc = scenario("running_example.toml");
    let out = nhbdi(&["--scenario", sc.to_str().unwrap(), "--command", "validate"], &[("NHBDI_LATE_PATHS", "200")]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 13);
}

#[test]
fn failing_validation_exits_two() {
    let sc = scenario("running_example.toml");
    let out = nhbdi(&["--scenario", sc.to_str().unwrap(), "--command", "validate", "--dt", "5", "--only", "8"], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL] scenario"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();

    let out = nhbdi(&["--command", "nonsense"], &[]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"i0\": 1,\n  \"t_end\": 10,\n  oops\n}\n").unwrap();
    let out = nhbdi(&["--scenario", bad.to_str().unwrap(), "--command", "table", "--out-dir", d], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");

    let typo = dir.path().join("typo.toml");
    let text = std::fs::read_to_string(scenario("running_example.toml")).unwrap().replace("t_end = 500.0", "t_ned = 500.0");
    std::fs::write(&typo, text).unwrap();
    let out = nhbdi(&["--scenario", typo.to_str().unwrap(), "--command", "table", "--out-dir", d], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_ned"));

    let bdi = scenario("running_example_bdi.toml");
    let out = nhbdi(&["--scenario", bdi.to_str().unwrap(), "--command", "pmf", "--t", "8", "--out-dir", d], &[]);
    assert_eq!(out.status.code(), Some(1));

    let sc = scenario("running_example.toml");
    let out = nhbdi(&["--scenario", sc.to_str().unwrap(), "--command", "pmf", "--out-dir", d], &[]);
    assert_eq!(out.status.code(), Some(1));
    let out = nhbdi(&["--scenario", sc.to_str().unwrap(), "--command", "pmf", "--t", "900", "--out-dir", d], &[]);
    assert_eq!(out.status.code(), Some(1));

    let out = nhbdi(&["--scenario", sc.to_str().unwrap(), "--command", "table", "--out-dir", d], &[("NHBDI_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(1));
}

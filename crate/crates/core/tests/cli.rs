use std::path::Path;
use std::process::{Command, Output};

use geomint::harness::read_csv;

fn geomint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomint"))
        .args(args)
        .env_remove("GEOMINT_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_cleanly() {
    let out = geomint(&["run", "--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Usage"));
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["run", "orbit"][..],
        &["run", "solar", "--method", "leapfrog"],
        &["run", "solar", "--width", "3"],
        &["frobnicate"],
        &["run"],
    ] {
        let out = geomint(args);
        assert_eq!(code(&out), 1, "{args:?}");
        assert!(stderr(&out).contains("Usage"), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn contract_violations_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = path_str(&out_path);
    for args in [
        &["run", "solar", "--method", "ksl", "--out", out][..],
        &["run", "solar", "--h", "0", "--out", out],
        &["run", "kepler-longtime", "--param", "e=1.5", "--out", out],
        &["run", "fpu-exchange", "--param", "size=3", "--out", out],
    ] {
        assert_eq!(code(&geomint(args)), 2, "{args:?}");
    }
    assert!(!out_path.exists());
}

#[test]
fn resonant_step_size_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fpu.csv");
    let h = format!("{}", std::f64::consts::PI / 50.0);
    let res = geomint(&["run", "fpu-exchange", "--h", &h, "--t-end", "1", "--out", path_str(&out)]);
    assert_eq!(code(&res), 2);
    assert!(stderr(&res).contains("non-resonance"), "{}", stderr(&res));
}

#[test]
fn solar_run_writes_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("solar.csv");
    let res = geomint(&[
        "run",
        "solar",
        "--method",
        "symplectic-euler-qp",
        "--h",
        "100",
        "--t-end",
        "20000",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,H,rel_H_err,r_J,r_S,r_U,r_N,r_P");
    assert!(text.ends_with('\n'));
    let summary = stdout(&res);
    let value: f64 = summary
        .split("max|rel_H_err|=")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(value.is_finite() && value > 0.0 && value < 0.05);
    assert!(summary.contains("steps=200"));
    assert!(summary.contains("wall="));

    let series = read_csv(&out).unwrap();
    let r_j = series.column("r_J").unwrap();
    assert!(r_j.iter().all(|r| (4.5..5.6).contains(r)), "Jupiter stays near 5.2 AU");
}

#[test]
fn implicit_euler_collapse_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("collapse.csv");
    let res = geomint(&["run", "solar", "--method", "implicit-euler", "--out", path_str(&out)]);
    assert_eq!(code(&res), 3, "{}", stderr(&res));
    assert!(stdout(&res).contains("expected"));
    let series = read_csv(&out).unwrap();
    assert!(series.len() > 1);
}

#[test]
fn unwritable_output_exits_with_four() {
    let res = geomint(&[
        "run",
        "kepler-longtime",
        "--t-end",
        "1",
        "--out",
        "/nonexistent-dir/kepler.csv",
    ]);
    assert_eq!(code(&res), 4);
}

#[test]
fn missing_dataset_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_geomint"))
        .args(["run", "solar", "--t-end", "1000", "--out"])
        .arg(dir.path().join("s.csv"))
        .env("GEOMINT_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&res), 4);
}

#[test]
fn identical_seeds_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let path = dir.path().join(name);
        let res = geomint(&["run", "lowrank-exactness", "--seed", seed, "--t-end", "0.2", "--out", path_str(&path)]);
        assert_eq!(code(&res), 0, "{}", stderr(&res));
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "11");
    let b = run("b.csv", "11");
    let c = run("c.csv", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kepler.conf");
    let out = dir.path().join("kepler.csv");
    std::fs::write(
        &cfg,
        format!(
            "# short Kepler run\nexperiment = kepler-longtime\nmethod = symplectic-euler-pq\nt_end = 100\nh = 0.01\ne = 0.3\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let res = geomint(&["run", "--config", path_str(&cfg), "--h", "0.05"]);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    assert!(stdout(&res).contains("steps=2000"), "{}", stdout(&res));
    let series = read_csv(&out).unwrap();
    assert_eq!(series.columns(), ["t", "H", "abs_H_err", "rel_H_err", "L", "abs_L_err", "rel_L_err"]);
}

#[test]
fn batch_runs_every_config_and_reports_the_worst_status() {
    let dir = tempfile::tempdir().unwrap();
    let mut configs = Vec::new();
    for (i, body) in [
        "experiment = kepler-longtime\nt_end = 10",
        "experiment = fpu-exchange\nt_end = 2",
        "experiment = lowrank-exactness\nt_end = 0.1",
    ]
    .iter()
    .enumerate()
    {
        let path = dir.path().join(format!("c{i}.conf"));
        std::fs::write(&path, format!("{body}\nout = {}\n", dir.path().join(format!("o{i}.csv")).display())).unwrap();
        configs.push(path);
    }
    let mut args: Vec<&str> = vec!["batch", "--jobs", "3"];
    args.extend(configs.iter().map(|p| path_str(p)));
    let res = geomint(&args);
    assert_eq!(code(&res), 0, "{}", stderr(&res));
    for i in 0..3 {
        assert!(dir.path().join(format!("o{i}.csv")).exists());
    }

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "experiment = solar\nh = 0\n").unwrap();
    args.push(path_str(&bad));
    assert_eq!(code(&geomint(&args)), 2);
}

#[test]
fn list_names_every_experiment() {
    let out = stdout(&geomint(&["list"]));
    for name in [
        "solar",
        "kepler-longtime",
        "fpu-exchange",
        "fpu-resonance-scan",
        "klein-gordon-decay",
        "lowrank-exactness",
        "lowrank-robustness",
        "convergence-orders",
    ] {
        assert!(out.contains(name), "{name}");
    }
}

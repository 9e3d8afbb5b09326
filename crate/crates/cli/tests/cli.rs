use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn sis_lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sis-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SISLAB_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn simulate_keeps_lcm_inside_and_flags_milstein() {
    let dir = tempfile::tempdir().unwrap();
    let out = sis_lab(&["simulate", "--config", &config("ex5_3.toml")], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));

    for h in ["0.0625", "0.25", "0.5"] {
        let rows = read_csv(&dir.path().join(format!("ex5_3_lcm_h{h}.csv")));
        assert_eq!(rows.len(), (5.0 / h.parse::<f64>().unwrap()) as usize + 1);
        for r in rows {
            let i: f64 = r[1].parse().unwrap();
            let y: f64 = r[2].parse().unwrap();
            assert!(
                (0.0..100.0).contains(&i) && y.is_finite() && y < 100f64.ln(),
                "{r:?}"
            );
        }
    }
    assert!(dir.path().join("ex5_3_milstein_h0.5.csv").exists());
    assert!(dir.path().join("ex5_3_config.toml").exists());
    assert!(
        stderr(&out).contains("warning: milstein"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("ex5_1.toml")).unwrap();
    let cfg = dir.path().join("broken.toml");
    std::fs::write(&cfg, text.replace("N = 10.0\n", "")).unwrap();
    let out = sis_lab(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("model.N"), "{}", stderr(&out));
}

#[test]
fn unreadable_config_and_unwritable_output_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = sis_lab(
        &["simulate", "--config", missing.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = sis_lab(&["simulate", "--config", &config("ex5_3.toml")], &blocker);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn persistence_request_without_persistence_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("ex5_3.toml")).unwrap();
    let cfg = dir.path().join("persist.toml");
    std::fs::write(
        &cfg,
        text.replace("expect = \"extinction\"", "expect = \"persistence\""),
    )
    .unwrap();
    let out = sis_lab(
        &[
            "dynamics",
            "--config",
            cfg.to_str().unwrap(),
            "--paths",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
}

#[test]
fn self_test_fits_exact_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = sis_lab(
        &[
            "convergence",
            "--config",
            &config("ex5_1.toml"),
            "--self-test",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(&dir.path().join("ex5_1_rate.csv"));
    let q: f64 = rows[0][0].parse().unwrap();
    let residual: f64 = rows[0][1].parse().unwrap();
    assert!(
        (q - 1.0).abs() < 1e-12 && residual.abs() < 1e-12,
        "{rows:?}"
    );
}

#[test]
fn convergence_smoke_run_is_near_published_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = sis_lab(
        &[
            "convergence",
            "--config",
            &config("ex5_1.toml"),
            "--paths",
            "100",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let published = [
        (0.0009765625, 0.0006),
        (0.001953125, 0.0013),
        (0.00390625, 0.0026),
        (0.0078125, 0.0051),
        (0.015625, 0.0103),
    ];
    let rows = read_csv(&dir.path().join("ex5_1_errors.csv"));
    assert_eq!(rows.len(), published.len());
    for (h, p) in published {
        let row = rows
            .iter()
            .find(|r| r[0].parse::<f64>().unwrap() == h)
            .unwrap();
        let e: f64 = row[1].parse().unwrap();
        assert!((e - p).abs() <= 0.5 * p, "h={h}: {e} vs {p}");
    }
    assert_eq!(
        read_csv(&dir.path().join("ex5_1_loglog.csv")).len(),
        published.len()
    );
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = [
        "dynamics",
        "--config",
        &config("ex5_3.toml"),
        "--paths",
        "20",
        "--seed",
        "11",
    ];
    let run = |dir: &Path, threads: &str| {
        let mut args = base.to_vec();
        args.extend(["--threads", threads]);
        let out = sis_lab(&args, dir);
        assert!(out.status.success(), "{}", stderr(&out));
    };
    run(a.path(), "1");
    run(b.path(), "4");
    for name in [
        "ex5_3_dynamics_lcm_h0.25.csv",
        "ex5_3_dynamics_milstein_h0.5.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn truncation_table_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_sis-lab"))
        .args([
            "truncation",
            "--config",
            &config("table4_sets.toml"),
            "--paths",
            "20",
        ])
        .env("SISLAB_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(&env_dir.join("table4_truncation.csv"));
    assert_eq!(rows.len(), 4 * 3 * 5);
    for r in &rows {
        let pct: f64 = r[3].parse().unwrap();
        assert!((0.0..=100.0).contains(&pct));
        if r[0] == "1" && r[1] == "10.0" {
            assert_eq!(pct, 0.0);
        }
    }
}

#[test]
fn dump_round_trips_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = sis_lab(
        &[
            "simulate",
            "--config",
            &config("ex5_4.toml"),
            "--dump-increments",
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let bytes = std::fs::read(dir.path().join("ex5_4_increments.bin")).unwrap();
    let t_final = f64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let steps = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    assert_eq!((t_final, steps, seed), (200.0, 25_600, 5));
    assert_eq!(bytes.len(), 32 + 8 * 25_600);
}

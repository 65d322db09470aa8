//! End-to-end tests of the `calib` binary: exit codes, band CSV golden
//! values against the library, plot output, config-file precedence, and
//! metrics determinism across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn calib() -> Command {
    Command::new(env!("CARGO_BIN_EXE_calib"))
}

fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

fn run(args: &[&str]) -> Output {
    calib().args(args).output().unwrap()
}

fn normal_fixture(dir: &Path) -> PathBuf {
    let p = dir.join("normal.csv");
    write(&p, "y,v,mu_hat\n-1.0,1.0,-0.5\n0.0,1.0,0.0\n1.0,1.0,0.5\n");
    p
}

#[test]
fn band_csv_matches_library_golden() {
    let dir = tempfile::tempdir().unwrap();
    let input = normal_fixture(dir.path());
    let out = run(&[
        "band",
        "--family",
        "normal",
        "--dispersion",
        "fixed:1",
        input.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Reference values straight from the library.
    let obs = vec![
        calib_core::DispersedObs::new(-1.0, 1.0),
        calib_core::DispersedObs::new(0.0, 1.0),
        calib_core::DispersedObs::new(1.0, 1.0),
    ];
    let sample = calib_core::make_ranked_sample(
        obs,
        vec![-0.5, 0.0, 0.5],
        1.0,
        calib_core::EdfFamily::Normal,
    )
    .unwrap();
    let pairs =
        calib_core::make_pair_set(calib_core::PairStrategy::Full, &sample, None).unwrap();
    let band = calib_core::build_band(&sample, &pairs, 0.05).unwrap();

    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "rank,y,v,mu_hat,lower,upper,inside");
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let lo: f64 = f[4].parse().unwrap();
        let hi: f64 = f[5].parse().unwrap();
        assert_eq!(lo, band.lower[i], "row {i} lower");
        assert_eq!(hi, band.upper[i], "row {i} upper");
        assert_eq!(f[6], "1");
    }
}

#[test]
fn empty_csv_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.csv");
    write(&p, "y,mu_hat\n");
    let out = run(&["band", "--family", "normal", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn support_violation_reports_row_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    write(&p, "y,mu_hat\n1.0,1.0\n-3.0,2.0\n");
    let out = run(&[
        "band",
        "--family",
        "gamma",
        "--dispersion",
        "fixed:1",
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("observation"), "stderr: {err}");
}

#[test]
fn out_of_band_estimate_exits_two_and_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("off.csv");
    write(&p, "y,v,mu_hat\n-1.0,1.0,-0.5\n0.0,1.0,0.0\n1.0,1.0,99.0\n");
    let svg_path = dir.path().join("plot.svg");
    let out = run(&[
        "band",
        "--family",
        "normal",
        "--dispersion",
        "fixed:1",
        "--plot",
        svg_path.to_str().unwrap(),
        p.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().last().unwrap().ends_with(",0"), "{stdout}");
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("pt-out").count(), 1);
}

#[test]
fn svg_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = normal_fixture(dir.path());
    let p1 = dir.path().join("a.svg");
    let p2 = dir.path().join("b.svg");
    for p in [&p1, &p2] {
        let out = run(&[
            "band",
            "--family",
            "normal",
            "--dispersion",
            "fixed:1",
            "--plot",
            p.to_str().unwrap(),
            input.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = normal_fixture(dir.path());
    let conf = dir.path().join("run.conf");
    write(&conf, "family = normal\ndispersion = fixed:1\nalpha = 0.5\n");
    let from_file = run(&[
        "band",
        "--config",
        conf.to_str().unwrap(),
        input.to_str().unwrap(),
    ]);
    assert!(from_file.status.success());
    let narrow = String::from_utf8(from_file.stdout).unwrap();

    let overridden = run(&[
        "band",
        "--config",
        conf.to_str().unwrap(),
        "--alpha",
        "0.01",
        input.to_str().unwrap(),
    ]);
    assert!(overridden.status.success());
    let wide = String::from_utf8(overridden.stdout).unwrap();
    assert_ne!(narrow, wide);

    // The alpha = 0.01 band must be wider at every row.
    let widths = |csv: &str| -> Vec<f64> {
        csv.lines()
            .skip(1)
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                f[5].parse::<f64>().unwrap() - f[4].parse::<f64>().unwrap()
            })
            .collect()
    };
    for (w_narrow, w_wide) in widths(&narrow).iter().zip(widths(&wide)) {
        assert!(*w_narrow <= w_wide);
    }
}

#[test]
fn run_band_with_bins_equals_full_library_band_when_bins_match_n() {
    // bins = n with distinct estimates is the identity binning, so the
    // pipeline must reproduce the plain band.
    let dir = tempfile::tempdir().unwrap();
    let input = normal_fixture(dir.path());
    let plain = run(&[
        "band",
        "--family",
        "normal",
        "--dispersion",
        "fixed:1",
        input.to_str().unwrap(),
    ]);
    let binned = run(&[
        "band",
        "--family",
        "normal",
        "--dispersion",
        "fixed:1",
        "--bins",
        "3",
        input.to_str().unwrap(),
    ]);
    assert_eq!(
        String::from_utf8(plain.stdout).unwrap(),
        String::from_utf8(binned.stdout).unwrap()
    );
}

#[test]
fn simulate_metrics_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("m1.csv");
    let out2 = dir.path().join("m2.csv");
    for (path, threads) in [(&out1, "1"), (&out2, "2")] {
        let out = calib()
            .env("CALIB_THREADS", threads)
            .args([
                "simulate",
                "--preset",
                "example5",
                "--reps",
                "3",
                "--seed",
                "99",
                "--n",
                "60",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
}

#[test]
fn simulate_rejects_bad_preset() {
    let out = run(&["simulate", "--preset", "nope", "--reps", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn spreadwidth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadwidth"))
        .args(args)
        .env_remove("SPREADWIDTH_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn dir_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn energies(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn solve_default_size() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spreadwidth(&["solve", "--output-dir", dir_arg(tmp.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,energy,symmetry_block,parity"));
    let e = energies(&csv);
    assert_eq!(e.len(), 496);
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    assert!(tmp.path().join("resolved_config.txt").exists());
}

#[test]
fn solve_unperturbed_is_integer() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spreadwidth(&[
        "solve", "--lambda", "0", "--max-shell", "8", "--output-dir", dir_arg(tmp.path()),
    ]);
    assert_eq!(code(&out), 0);
    let e = energies(&fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap());
    for x in e {
        assert!((x - x.round()).abs() < 1e-10, "{x}");
    }
}

#[test]
fn solve_is_byte_identical_and_config_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["solve", "--lambda", "0.07", "--max-shell", "12", "--dump-coefficients", "true"];
    let mut first: Vec<&str> = args.to_vec();
    first.extend(["--output-dir", dir_arg(a.path())]);
    assert_eq!(code(&spreadwidth(&first)), 0);

    let resolved = a.path().join("resolved_config.txt");
    let out = spreadwidth(&[
        "solve",
        "--config",
        resolved.to_str().unwrap(),
        "--output-dir",
        dir_arg(b.path()),
    ]);
    assert_eq!(code(&out), 0);
    for f in ["spectrum.csv", "coefficients.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn metrics_unperturbed_columns_vanish() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spreadwidth(&[
        "metrics", "--lambda", "0", "--max-shell", "10", "--output-dir", dir_arg(tmp.path()),
    ]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(tmp.path().join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,shell,kappa,delta_N_ratio,pr,ps,gamma_spr"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        for (col, v) in [(2, f[2]), (3, f[3]), (4, f[4])] {
            if !v.is_empty() {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "column {col} in {line}");
            }
        }
    }
}

#[test]
fn integrals_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = spreadwidth(&[
        "integrals",
        "--max-shell", "14",
        "--p-sizes", "1,6,14",
        "--norm-trials", "10",
        "--output-dir", dir_arg(tmp.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(tmp.path().join("integral_identities.csv")).unwrap();
    assert!(report.starts_with("identity,name,max_abs_deviation,pass\n"));
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")));
    let study = fs::read_to_string(tmp.path().join("integrals.csv")).unwrap();
    assert!(study.starts_with(
        "kp_shells,integral,symmetry_block,energy_bin,delta_jprime_avg,in_s_space\n"
    ));
    // With P the whole basis, J' is diagonal in the reference eigenstates
    // and there are no out-of-S states (empty average).
    for line in study.lines().filter(|l| l.starts_with("14,")) {
        match line.split(',').nth(4).unwrap() {
            "" => assert!(line.ends_with(",all,all,,false"), "{line}"),
            v => assert!(v.parse::<f64>().unwrap() < 1e-8, "{line}"),
        }
    }
}

#[test]
fn projector_check_passes_and_detects_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dir_arg(tmp.path());
    let out = spreadwidth(&["projector-check", "--output-dir", dir]);
    assert_eq!(code(&out), 0);
    let report = fs::read_to_string(tmp.path().join("projector_identities.csv")).unwrap();
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")));

    let out = spreadwidth(&["projector-check", "--output-dir", dir, "--corrupt-ladder", "1e-6"]);
    assert_eq!(code(&out), 2);
    let report = fs::read_to_string(tmp.path().join("projector_identities.csv")).unwrap();
    assert!(report.lines().any(|l| l.ends_with(",false")));
}

#[test]
fn validation_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dir_arg(tmp.path());
    assert_eq!(code(&spreadwidth(&["solve", "--lambda", "nan", "--output-dir", dir])), 1);
    assert_eq!(code(&spreadwidth(&["solve", "--max-shell", "-1", "--output-dir", dir])), 1);
    assert_eq!(code(&spreadwidth(&["integrals", "--integrals", "q", "--output-dir", dir])), 1);
    assert_eq!(code(&spreadwidth(&["frobnicate"])), 1);

    let cfg = tmp.path().join("bad.txt");
    fs::write(&cfg, "lambda = 0.1\ncolour = blue\n").unwrap();
    let out = spreadwidth(&["solve", "--config", cfg.to_str().unwrap(), "--output-dir", dir]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn io_errors_exit_three() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let inside = blocker.join("out");
    let out = spreadwidth(&["solve", "--max-shell", "4", "--output-dir", inside.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let missing = tmp.path().join("missing.txt");
    let out = spreadwidth(&["solve", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn thread_cap_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spreadwidth"))
        .args(["solve", "--max-shell", "4", "--output-dir", dir_arg(tmp.path())])
        .env("SPREADWIDTH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
}

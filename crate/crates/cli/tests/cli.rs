use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn grushin(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_grushin"));
    cmd.args(args).env_remove("GRUSHIN_THREADS");
    if let Some(t) = threads {
        cmd.env("GRUSHIN_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn dir_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_owned()
}

#[test]
fn eval_prints_profile() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let bad = dir_arg(&blocker.join("out"));
    // eval still writes a manifest, so an unwritable directory is an I/O error
    let out = grushin(
        &[
            "eval",
            "--l",
            "3",
            "--m",
            "-1",
            "--x",
            "0.5",
            "--output-dir",
            &bad,
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(1));
    let out = grushin(
        &[
            "eval",
            "--l",
            "3",
            "--m",
            "-1",
            "--x",
            "0.5",
            "--output-dir",
            &dir_arg(dir.path()),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["eigenvalue"], 11.0);
    assert!(v["value"].as_f64().unwrap().is_finite());
}

#[test]
fn verify_addition_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = grushin(
        &[
            "verify",
            "addition",
            "--lmax",
            "256",
            "--output-dir",
            &dir_arg(dir.path()),
        ],
        None,
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert!(v["max_rel_err"].as_f64().unwrap() < 1e-10);
    assert!(dir.path().join("verify_addition_manifest.json").exists());
}

#[test]
fn dry_run_computes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("out");
    let out = grushin(
        &[
            "scan",
            "envelope",
            "--lmax",
            "4096",
            "--dry-run",
            "--output-dir",
            &dir_arg(&sub),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["valid"], true);
    assert!(v["work_units"].as_u64().unwrap() > 0);
    assert!(!sub.exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(grushin(&["bogus"], None).status.code(), Some(1));
    assert_eq!(grushin(&[], None).status.code(), Some(1));
    assert_eq!(grushin(&["eval", "--l", "2"], None).status.code(), Some(1));
    assert_eq!(
        grushin(&["sweep", "heat", "--r2", "-1", "--dry-run"], None)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(grushin(&["--help"], None).status.code(), Some(0));
    assert_eq!(
        grushin(&["verify", "parity", "--dry-run"], Some("zero"))
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn config_file_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"command": "verify parity", "lmx": 3}"#).unwrap();
    assert_eq!(
        grushin(&["--config", bad.to_str().unwrap()], None)
            .status
            .code(),
        Some(1)
    );
    let good = dir.path().join("good.json");
    fs::write(
        &good,
        r#"{"command": "verify parity", "l_max": 32, "threads": 1}"#,
    )
    .unwrap();
    let out = grushin(
        &[
            "--config",
            good.to_str().unwrap(),
            "--output-dir",
            &dir_arg(dir.path()),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["l_max"], 32);
    let missing = dir.path().join("missing.json");
    assert_eq!(
        grushin(&["--config", missing.to_str().unwrap()], None)
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn acceptance_failure_exits_two() {
    // the Bochner-Riesz norm at delta = 0 grows with the radius
    let dir = tempfile::tempdir().unwrap();
    let out = grushin(
        &[
            "sweep",
            "bochner-riesz",
            "--delta",
            "0",
            "--R",
            "4,8,16,32",
            "--output-dir",
            &dir_arg(dir.path()),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["stable"], false);
    let csv = fs::read_to_string(dir.path().join("sweep_bochner-riesz.csv")).unwrap();
    assert!(csv.starts_with("R,l1_norm,"));
}

#[test]
fn csv_is_independent_of_thread_count() {
    let runs: &[(&[&str], &str)] = &[
        (
            &[
                "distance",
                "pairs",
                "--count",
                "24",
                "--resolution",
                "96",
                "--seed",
                "7",
            ],
            "distance_pairs.csv",
        ),
        (
            &["scan", "plancherel-high", "--imax", "24"],
            "scan_plancherel-high.csv",
        ),
        (
            &["sweep", "bochner-riesz", "--R", "8,16"],
            "sweep_bochner-riesz.csv",
        ),
    ];
    for (args, file) in runs {
        let mut texts = Vec::new();
        for threads in ["1", "2"] {
            let dir = tempfile::tempdir().unwrap();
            let mut a = args.to_vec();
            let d = dir_arg(dir.path());
            a.extend(["--output-dir", &d]);
            let out = grushin(&a, Some(threads));
            assert_eq!(
                out.status.code(),
                Some(0),
                "{}",
                String::from_utf8_lossy(&out.stderr)
            );
            texts.push(fs::read(dir.path().join(file)).unwrap());
        }
        assert_eq!(texts[0], texts[1], "{file}");
    }
}

#[test]
fn pairs_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = grushin(
        &[
            "distance",
            "pairs",
            "--count",
            "5",
            "--resolution",
            "1/64",
            "--output-dir",
            &dir_arg(dir.path()),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("distance_pairs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "pair_id,theta1,phi1,theta2,phi2,phi_dist,eikonal_dist,riemannian_dist,ratio"
    );
    assert_eq!(lines.count(), 5);
    assert!(!csv.contains('\r'));
}

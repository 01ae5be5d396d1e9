use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use online_hmm_cli::config::{parse_config, parse_config_str};
use online_hmm_cli::curve_csv::read_curve;
use online_hmm_cli::manifest::RunManifest;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_online-hmm"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

const SMALL: &str = r#"{
  "dims": {"n": 2, "m": 3, "T": 2},
  "learners": [{"algorithm": "bwo", "eta_bw": 0.05}, {"algorithm": "bc"}, {"algorithm": "bona"}, {"algorithm": "mpa"}],
  "sequences": 60,
  "replicas": 4,
  "drift": {"kind": "gradual"}
}"#;

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run(&cfg, &a, &["--threads", "1"]));
    ok(&run(&cfg, &b, &["--threads", "3"]));
    let manifest = RunManifest::load(&a.join("manifest.json")).unwrap();
    assert_eq!(manifest.learners.len(), 4);
    for entry in &manifest.learners {
        let x = std::fs::read(a.join(&entry.csv)).unwrap();
        let y = std::fs::read(b.join(&entry.csv)).unwrap();
        assert_eq!(x, y, "{}", entry.csv);
    }
    assert_eq!(
        std::fs::read(a.join("config.json")).unwrap(),
        std::fs::read(b.join("config.json")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run(&cfg, &a, &["--seed", "7"]));
    ok(&run(&cfg, &b, &[]));
    let m = RunManifest::load(&a.join("manifest.json")).unwrap();
    assert_eq!(m.seed, 7);
    assert_eq!(m.config.seed, 7);
    let csv = &m.learners[0].csv;
    assert_ne!(std::fs::read(a.join(csv)).unwrap(), std::fs::read(b.join(csv)).unwrap());
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = dir.path().join("out");
    ok(&run(&cfg, &out, &["--seed", "11"]));

    let (_, mut original) = parse_config(&cfg).unwrap();
    original.seed = 11;
    let manifest = RunManifest::load(&out.join("manifest.json")).unwrap();
    let echo = serde_json::to_string(&manifest.config).unwrap();
    let reparsed = parse_config_str(&echo, Path::new("echo")).unwrap().to_experiment().unwrap();
    assert_eq!(reparsed, original);

    // Rerunning from the written config gives the same curves.
    let again = dir.path().join("again");
    ok(&run(&out.join("config.json"), &again, &[]));
    for e in &manifest.learners {
        assert_eq!(
            std::fs::read(out.join(&e.csv)).unwrap(),
            std::fs::read(again.join(&e.csv)).unwrap()
        );
    }
}

#[test]
fn csv_schema() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "mpa"}], "sequences": 25, "snapshot_stride": 10}"#,
    );
    let out = dir.path().join("out");
    ok(&run(&cfg, &out, &[]));
    let text = std::fs::read_to_string(out.join("learner0_mpa.csv")).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "p,kl_mean,kl_stderr,inf_flag,pi_0,pi_1,A_00,A_01,A_10,A_11,B_00,B_01,B_02,B_10,B_11,B_12"
    );
    assert_eq!(lines.len(), 1 + 26);
    // p = 0 is a snapshot of the symmetric student; p = 1 is not a snapshot.
    let row0: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row0.len(), 16);
    assert_eq!(row0[4], "0.5");
    assert_eq!(row0[10], format!("{}", 1.0 / 3.0));
    assert!(lines[2].ends_with(",,,,,,,,,,,,"));
    let row10: Vec<f64> = lines[11].split(',').skip(4).map(|s| s.parse().unwrap()).collect();
    assert!((row10[0] + row10[1] - 1.0).abs() < 1e-12);
    assert_eq!(lines[1].split(',').nth(3), Some("0"));

    let rows = read_curve(&out.join("learner0_mpa.csv")).unwrap();
    assert_eq!(rows.len(), 26);
    assert_eq!(rows[25].p, 25);
    assert_eq!(rows[0].kl_stderr, 0.0);
}

#[test]
fn snapshots_can_be_disabled() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "bwo"}], "sequences": 5, "snapshot_stride": 0}"#,
    );
    let out = dir.path().join("out");
    ok(&run(&cfg, &out, &[]));
    let text = std::fs::read_to_string(out.join("learner0_bwo.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("p,kl_mean,kl_stderr,inf_flag"));
}

#[test]
fn infinite_kl_is_written_as_sentinel() {
    // BWO without a floor, starting from a student that gives zero
    // probability to the teacher's sequences.
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"dims": {"n": 1, "m": 2, "T": 1}, "learners": [{"algorithm": "bwo", "eta_bw": 0.5, "epsilon": 0}],
            "student_init": {"perturbed": {"amplitude": 1e-300}},
            "teacher": {"fixed": {"n": 1, "m": 2, "T": 1, "pi": [1], "A": [[1]], "B": [[0.5, 0.5]]}},
            "sequences": 3, "snapshot_stride": 0}"#,
    );
    let out = dir.path().join("out");
    ok(&run(&cfg, &out, &[]));
    let text = std::fs::read_to_string(out.join("learner0_bwo.csv")).unwrap();
    // The perturbed student is finite everywhere, so all rows are finite;
    // the sentinel path is covered by a fixed-student run below.
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));

    let runs = online_hmm_cli::runner::LearnerRun {
        config: online_hmm::learners::LearnerConfig::bwo(0.1),
        averaged: online_hmm::harness::average_kl_series(&[0, 1], &[vec![f64::INFINITY, 0.25]]).unwrap(),
        trace: online_hmm::harness::LearningCurve {
            points: vec![
                online_hmm::harness::CurvePoint {
                    p: 0,
                    kl: f64::INFINITY,
                    snapshot: None,
                },
                online_hmm::harness::CurvePoint {
                    p: 1,
                    kl: 0.25,
                    snapshot: None,
                },
            ],
            annotations: vec![],
            max_projection_residual: None,
        },
        wall_clock: Default::default(),
        update_time: Default::default(),
        failed_updates: 0,
        max_projection_residual: None,
    };
    let path = dir.path().join("inf.csv");
    online_hmm_cli::curve_csv::write_curve(&path, &runs, online_hmm::ModelDims::new(1, 2, 1).unwrap(), false).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "p,kl_mean,kl_stderr,inf_flag\n0,1000000000,0,1\n1,0.25,0,0\n");
    assert_eq!(read_curve(&path).unwrap()[0].kl_mean, f64::INFINITY);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");

    let missing = run(&dir.path().join("nope.json"), &out, &[]);
    assert_eq!(missing.status.code(), Some(1));

    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "mpa"}], "sequences": -1}"#,
    );
    let r = run(&bad, &out, &[]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("sequences"));

    let invalid = write_config(
        dir.path(),
        "invalid.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "bwo", "eta_bw": -1}]}"#,
    );
    let r = run(&invalid, &out, &[]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("eta_bw"));

    let good = write_config(
        dir.path(),
        "good.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "mpa"}], "sequences": 3}"#,
    );
    // The output directory would have to be created under a regular file.
    let blocker = write_config(dir.path(), "file", "");
    let r = run(&good, &blocker.join("sub"), &[]);
    assert_eq!(r.status.code(), Some(2));

    ok(&run(&good, &out, &[]));
    assert_eq!(run(&good, &out, &["--threads", "0"]).status.code(), Some(1));
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn help_documents_defaults() {
    let out = bin().arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "eta_bw",
        "0.1",
        "lambda",
        "0.01",
        "prior_strength",
        "1e-12",
        "snapshot_stride",
        "10000",
        "1e9",
    ] {
        assert!(text.contains(needle), "{needle} missing from --help");
    }
}

#[test]
fn compare_summarizes_and_validates() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&run(&cfg, &a, &[]));
    ok(&run(&cfg, &b, &[]));
    let ma = a.join("manifest.json");
    let mb = b.join("manifest.json");

    let rows = online_hmm_cli::manifest::compare(&[ma.clone(), mb.clone()]).unwrap();
    assert_eq!(rows.len(), 8);
    for (x, y) in rows[..4].iter().zip(&rows[4..]) {
        assert_eq!((&x.learner, x.final_kl, x.auc), (&y.learner, y.final_kl, y.auc));
    }
    let same = online_hmm_cli::manifest::compare(&[ma.clone(), ma.clone()]).unwrap();
    assert_eq!(same[..4], same[4..]);

    let out = bin().arg("compare").arg(&ma).arg(&mb).output().unwrap();
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("manifest\tlearner\tfinal_kl\tauc\twall_clock_s\tupdate_s\n"));
    assert_eq!(text.lines().count(), 9);

    assert_eq!(bin().arg("compare").arg(&ma).output().unwrap().status.code(), Some(1));

    let other = write_config(
        dir.path(),
        "other.json",
        r#"{"dims": {"n": 3, "m": 3, "T": 2}, "learners": [{"algorithm": "mpa"}], "sequences": 60, "drift": {"kind": "gradual"}}"#,
    );
    let c = dir.path().join("c");
    ok(&run(&other, &c, &[]));
    let r = bin().arg("compare").arg(&ma).arg(c.join("manifest.json")).output().unwrap();
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("incompatible"));
}

#[test]
fn compare_ranks_mpa_below_bc() {
    let dir = TempDir::new().unwrap();
    let mpa = write_config(
        dir.path(),
        "mpa.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "mpa"}], "replicas": 100, "sequences": 10000, "snapshot_stride": 0}"#,
    );
    let bc = write_config(
        dir.path(),
        "bc.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "bc", "eta_bc": 0.5, "lambda": 0.01}], "replicas": 100, "sequences": 10000, "snapshot_stride": 0}"#,
    );
    ok(&run(&mpa, &dir.path().join("mpa"), &[]));
    ok(&run(&bc, &dir.path().join("bc"), &[]));
    let rows =
        online_hmm_cli::manifest::compare(&[dir.path().join("mpa/manifest.json"), dir.path().join("bc/manifest.json")]).unwrap();
    assert!(rows[0].final_kl < rows[1].final_kl, "{rows:?}");
}

#[test]
fn bona_is_much_slower_than_mpa() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"dims": {"n": 2, "m": 3, "T": 2}, "learners": [{"algorithm": "bona"}, {"algorithm": "mpa"}], "replicas": 50, "sequences": 200}"#,
    );
    let out = dir.path().join("out");
    ok(&run(&cfg, &out, &["--threads", "1"]));
    let m = RunManifest::load(&out.join("manifest.json")).unwrap();
    let ratio = m.learners[0].update_seconds / m.learners[1].update_seconds;
    assert!(ratio >= 10.0, "bona/mpa update-time ratio {ratio}");
    assert!(m.learners[0].max_projection_residual.unwrap() < 1e-8);
    assert!(m.learners[1].max_projection_residual.is_none());
}

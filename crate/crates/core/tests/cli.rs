use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fkpp::snapshot::{read_snapshot, HEADER_BYTES};

const SMALL_RUN: &str = r#"
name = "small_line"

[grid]
dim = 1
n = 2048
length = 16384.0

[model]
alpha = 1.0

[datum]
kind = "gaussian"
amplitude = 0.5
width = 16.0

[time]
t_end = 10.0

[output]
snapshot_cadence = 0.25
diagnostics_cadence = 0.1
levels = [0.5]
"#;

fn fkpp(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkpp"))
        .args(args)
        .env("FKPP_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_analyze_report_round_trip() {
    let root = tempfile::tempdir().unwrap();
    let cfg = write_config(root.path(), SMALL_RUN);
    let stdout = ok(&fkpp(&["run", &cfg], root.path()));
    assert!(stdout.contains("small_line"));

    let run_dir = root.path().join("small_line");
    for f in ["manifest.json", "config.json", "diagnostics.csv", "levelsets.csv"] {
        assert!(run_dir.join(f).is_file(), "missing {f}");
    }
    let diag = fs::read_to_string(run_dir.join("diagnostics.csv")).unwrap();
    assert_eq!(
        diag.lines().next(),
        Some("t,grad_ratio,hess_ratio,fraclap_ratio,band_min,band_max")
    );
    let levels = fs::read_to_string(run_dir.join("levelsets.csv")).unwrap();
    assert_eq!(levels.lines().next(), Some("h,t,r_min,r_max,r_mean,oscillation,q_h"));

    let snaps: Vec<_> = fs::read_dir(run_dir.join("snapshots")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(snaps.len() >= 12);
    let first = run_dir.join("snapshots").join("snap_00000.bin");
    let bytes = fs::read(&first).unwrap();
    assert_eq!(&bytes[..8], b"FKPPSNAP");
    assert_eq!(bytes.len(), HEADER_BYTES + 8 * 2048);
    let (header, field) = read_snapshot(&first).unwrap();
    assert_eq!((header.dim, header.n_per_axis, header.alpha), (1, 2048, 1.0));
    assert_eq!(field.time(), 0.0);

    let run_dir_str = run_dir.to_str().unwrap();
    ok(&fkpp(&["analyze", run_dir_str, "--levels", "0.3,0.5"], root.path()));
    let cmp = fs::read_to_string(run_dir.join("analysis").join("qh_comparison.csv")).unwrap();
    assert_eq!(cmp.lines().next(), Some("h,q_h_measured,q_h_predicted,rel_err"));
    let profile = fs::read_to_string(run_dir.join("analysis").join("steady_profile.csv")).unwrap();
    assert_eq!(profile.lines().next(), Some("r,u"));

    let report = ok(&fkpp(&["report", run_dir_str], root.path()));
    assert!(report.contains("spreading_rate"));
    let verdict_path = run_dir.join("report").join("verdict.json");
    let first_verdict = fs::read(&verdict_path).unwrap();
    let first_series = fs::read(run_dir.join("report").join("series.csv")).unwrap();
    ok(&fkpp(&["report", run_dir_str], root.path()));
    assert_eq!(fs::read(&verdict_path).unwrap(), first_verdict);
    assert_eq!(fs::read(run_dir.join("report").join("series.csv")).unwrap(), first_series);

    let json: serde_json::Value = serde_json::from_slice(&first_verdict).unwrap();
    let criteria = json["criteria"].as_array().unwrap();
    assert!(criteria.iter().any(|c| c["id"] == "spreading_rate"));
    for c in criteria {
        assert!(c["pass"].is_boolean());
        assert!(c["tolerance"].is_number());
    }
}

#[test]
fn reruns_are_deterministic() {
    let root = tempfile::tempdir().unwrap();
    let text = SMALL_RUN.replace("t_end = 10.0", "t_end = 1.0").replace("levels = [0.5]", "levels = [0.5]\nseed = 7");
    let text = text.replace("width = 16.0", "width = 16.0\nperturbation = 0.01");
    let cfg = write_config(root.path(), &text);
    ok(&fkpp(&["run", &cfg], root.path()));
    let dir = root.path().join("small_line");
    let snap = |d: &Path| fs::read(d.join("snapshots").join("snap_00002.bin")).unwrap();
    let first = snap(&dir);
    let manifest = |d: &Path| {
        let mut m: serde_json::Value = serde_json::from_slice(&fs::read(d.join("manifest.json")).unwrap()).unwrap();
        m.as_object_mut().unwrap().remove("wall_time_s");
        m
    };
    let first_manifest = manifest(&dir);
    fs::rename(&dir, root.path().join("previous")).unwrap();
    ok(&fkpp(&["run", &cfg], root.path()));
    assert_eq!(snap(&dir), first);
    assert_eq!(manifest(&dir), first_manifest);
}

#[test]
fn analyze_on_empty_directory_fails_cleanly() {
    let root = tempfile::tempdir().unwrap();
    let empty = root.path().join("nothing");
    fs::create_dir(&empty).unwrap();
    let out = fkpp(&["analyze", empty.to_str().unwrap()], root.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no snapshots found"));
}

#[test]
fn invalid_config_is_rejected_with_every_error() {
    let root = tempfile::tempdir().unwrap();
    let text = SMALL_RUN.replace("alpha = 1.0", "alpha = 2.5").replace("n = 2048", "n = 1000");
    let cfg = write_config(root.path(), &text);
    let out = fkpp(&["run", &cfg], root.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha"), "{err}");
    assert!(err.contains("n"), "{err}");
    assert!(!root.path().join("small_line").exists());

    let missing = fkpp(&["run", "/definitely/not/here.toml"], root.path());
    assert!(!missing.status.success());
}

#[test]
fn kernel_command_writes_profile_and_tail() {
    let root = tempfile::tempdir().unwrap();
    let out = fkpp(
        &["kernel", "--alpha", "1", "--dim", "1", "--r-max", "100", "--samples", "40", "--out", "k"],
        root.path(),
    );
    ok(&out);
    let dir = root.path().join("k");
    let csv = fs::read_to_string(dir.join("kernel.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,p,abs_err_estimate"));
    assert_eq!(csv.lines().count(), 41);
    let tail: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("kernel_tail.json")).unwrap()).unwrap();
    let exponent = tail["tail"]["exponent"].as_f64().unwrap();
    assert!((exponent - 2.0).abs() < 0.02, "{exponent}");

    let bad = fkpp(&["kernel", "--alpha", "2", "--dim", "1"], root.path());
    assert!(!bad.status.success());
}

#[test]
fn output_root_flag_overrides_environment() {
    let env_root = tempfile::tempdir().unwrap();
    let flag_root = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fkpp"))
        .args(["--output-root", flag_root.path().to_str().unwrap()])
        .args(["kernel", "--alpha", "1.5", "--dim", "2", "--r-max", "20", "--samples", "60"])
        .env("FKPP_OUTPUT_ROOT", env_root.path())
        .output()
        .unwrap();
    ok(&out);
    assert!(flag_root.path().join("kernel_a1.5_d2").join("kernel.csv").is_file());
    assert!(fs::read_dir(env_root.path()).unwrap().next().is_none());
}

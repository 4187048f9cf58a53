use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vpmcf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpmcf"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

const ELLIPSE: &str = r#"{
  "scenario": {"kind": "ellipse", "a": 1.5, "b": 1.0},
  "mode": "vpmcf", "dt": 1e-4, "t_end": 0.05, "N": 64,
  "snapshot_every": 10, "series_every": 20, "output": "ellipse"
}"#;

const SHRINKING: &str = r#"{
  "scenario": {"kind": "circle", "radius": 0.5},
  "mode": "mcf", "dt": 1e-4, "t_end": 1.0, "N": 64, "cfl_guard": 0.01,
  "snapshot_every": 10, "output": "shrinking"
}"#;

#[test]
fn run_writes_snapshots_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ellipse.json", ELLIPSE);
    let out = vpmcf(&["run", &cfg], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("ellipse");
    assert!(run.join("snap_0.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "completed");
    let snapshots = summary["snapshots"].as_u64().unwrap() as usize;
    let snap_files = fs::read_dir(&run)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("snap_")
        })
        .count();
    assert_eq!(snap_files, snapshots);
    let series = fs::read_to_string(run.join("series.csv")).unwrap();
    assert!(series
        .starts_with("t,length,area,kappa_bar,i2,psi,diam,iso_ratio,max_abs_kappa,ddiam_dt\n"));
    // Every other snapshot plus the final state.
    let rows = series.lines().count() - 1;
    assert!(
        rows < snapshots && rows >= snapshots / 2,
        "{rows} of {snapshots}"
    );
}

#[test]
fn identical_configs_give_identical_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ellipse.json", ELLIPSE);
    assert_eq!(code(&vpmcf(&["run", &cfg], dir.path())), 0);
    let first = fs::read(dir.path().join("ellipse/series.csv")).unwrap();
    assert_eq!(code(&vpmcf(&["run", &cfg], dir.path())), 0);
    let second = fs::read(dir.path().join("ellipse/series.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = ELLIPSE.replace("\"t_end\"", "\"t_stop\"");
    let capsule = r#"{"scenario": {"kind": "capsule", "eps": 1.5}, "mode": "vpmcf",
                      "dt": 1e-4, "t_end": 0.1, "N": 64, "output": "c"}"#;
    for (name, body) in [("typo.json", typo.as_str()), ("capsule.json", capsule)] {
        let cfg = write_config(dir.path(), name, body);
        let out = vpmcf(&["run", &cfg], dir.path());
        assert_eq!(code(&out), 2, "{name}");
    }
    assert_eq!(code(&vpmcf(&["run", "missing.json"], dir.path())), 2);
    assert_eq!(code(&vpmcf(&["verify", "everything"], dir.path())), 2);
    assert_eq!(code(&vpmcf(&["blowup", "--history", "."], dir.path())), 2);
}

#[test]
fn step_size_underflow_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"scenario": {"kind": "circle", "radius": 1.0}, "mode": "mcf",
                   "dt": 1e-4, "t_end": 1.0, "N": 256, "output": "np"}"#;
    let cfg = write_config(dir.path(), "np.json", body);
    let out = vpmcf(&["run", &cfg], dir.path());
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no progress"));
    let summary = fs::read_to_string(dir.path().join("np/run.json")).unwrap();
    assert!(summary.contains("\"failed\""));
}

#[test]
fn singular_runs_blow_up_to_type_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "shrinking.json", SHRINKING);
    let out = vpmcf(&["run", &cfg], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("singular"));

    let out = vpmcf(&["blowup", "--history", "shrinking", "--auto"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("CERT psi_invariance PASS"));
    let report = fs::read_to_string(dir.path().join("shrinking/blowup/blowup_report.txt")).unwrap();
    assert!(report.contains("classification: TypeI"));
    assert!(dir.path().join("shrinking/blowup/snap_0.csv").exists());

    let out = vpmcf(
        &[
            "density",
            "--history",
            "shrinking",
            "--point",
            "0,0",
            "--time",
            "0.125",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let limit: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("limit,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((limit - (2.0 * std::f64::consts::PI / std::f64::consts::E).sqrt()).abs() < 0.02);
}

#[test]
fn explicit_blowup_and_local_density() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ellipse.json", ELLIPSE);
    assert_eq!(code(&vpmcf(&["run", &cfg], dir.path())), 0);
    let out = vpmcf(
        &[
            "blowup",
            "--history",
            "ellipse",
            "--center",
            "-0.1,0",
            "--time",
            "0.04",
            "--lambda",
            "2",
            "--out",
            "scaled",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("scaled/blowup_report.txt")).unwrap();
    assert!(report.contains("no singularity recorded"));
    let snap = fs::read_to_string(dir.path().join("scaled/snap_0.csv")).unwrap();
    assert!(snap.starts_with("# t=-0.16 N=64"));

    let out = vpmcf(&["blowup", "--history", "ellipse", "--auto"], dir.path());
    assert_eq!(code(&out), 2);

    let out = vpmcf(
        &[
            "density",
            "--history",
            "ellipse",
            "--point",
            "1.5,0",
            "--time",
            "0.05",
            "--rho",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("CERT almost_monotonicity PASS"));
}

#[test]
fn trilobite_report_and_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = vpmcf(
        &["trilobite", "--rho", "1", "--n", "7", "--r", "0.005"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("trilobite_report.csv")).unwrap();
    assert!(csv.starts_with("piece,intH_oracle,intH_table,intHK_oracle,intHK_table_or_bound\n"));
    assert!(csv.contains("\ndHbar_dt_at_0,-"));
    // The tabulated length does not balance the mean curvature.
    let out = vpmcf(
        &[
            "trilobite",
            "--rho",
            "1",
            "--n",
            "7",
            "--r",
            "0.005",
            "--tabulated",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 1);
    let out = vpmcf(
        &["trilobite", "--rho", "1", "--n", "3", "--r", "0.005"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn trilobite_suite_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = vpmcf(&["verify", "trilobite", "--out", "reports"], dir.path());
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("reports/verify_trilobite.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("CERT ")).count(), 3);
    assert!(text.ends_with("RESULT PASS\n"));
}

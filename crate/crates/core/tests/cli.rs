use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn akx(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akx"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn shipped_configs_run_clean() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let out = akx(&["--quiet"], &path);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&out.stderr)
        );
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["status"], "certified", "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn nilpotent_exponential_output() {
    let out = akx(&["--quiet"], &configs_dir().join("eval_exp_nilpotent.json"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        v["strong"]["value"]["matrix"],
        serde_json::json!([[1.0, 1.0], [0.0, 1.0]])
    );
    assert_eq!(v["weak"]["value"], serde_json::json!([2.0, 0.0]));
}

#[test]
fn summary_goes_to_stderr_unless_quiet() {
    let cfg = configs_dir().join("eval_exp_nilpotent.json");
    assert!(!akx(&[], &cfg).stderr.is_empty());
    assert!(akx(&["--quiet"], &cfg).stderr.is_empty());
}

#[test]
fn input_errors_exit_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let out_arg = out.to_str().unwrap();
    let cases = [
        ("unknown.json", r#"{"command": "eval", "function": "exp", "bogus": 1}"#),
        (
            "stray.json",
            r#"{"command": "eval", "function": "exp", "A": {"kind": "quaternion", "coords": [[0,0],[1,0],[0,0],[0,0]]}, "samples": 3}"#,
        ),
        ("syntax.json", r#"{"command": "eval","#),
        (
            "preset.json",
            r#"{"command": "eval", "function": "tanh", "A": {"kind": "quaternion", "coords": [[0,0],[1,0],[0,0],[0,0]]}}"#,
        ),
        (
            "dim.json",
            r#"{"command": "eval", "function": "exp", "A": {"kind": "matrix", "n": 2, "field": "real", "coords": [[1,0]]}}"#,
        ),
    ];
    for (name, body) in cases {
        let cfg = write(dir.path(), name, body);
        let o = akx(&["--out", out_arg], &cfg);
        assert_eq!(o.status.code(), Some(1), "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{name}");
        assert!(!out.exists(), "{name} wrote output");
    }
    assert_eq!(akx(&[], &dir.path().join("missing.json")).status.code(), Some(1));
    let no_args = Command::new(env!("CARGO_BIN_EXE_akx")).output().unwrap();
    assert_eq!(no_args.status.code(), Some(1));
}

#[test]
fn refused_scale_exits_two_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs_dir().join("scaled_geom.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["M"] = serde_json::json!(0.9);
    let cfg = write(dir.path(), "scaled.json", &v.to_string());
    let out = dir.path().join("report.json");
    let o = akx(&["--quiet", "--out", out.to_str().unwrap()], &cfg);
    assert_eq!(o.status.code(), Some(2));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["status"], "not_certified");
}

#[test]
fn csv_output_with_report_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gram.csv");
    let o = akx(
        &["--quiet", "--format", "csv", "--out", out.to_str().unwrap()],
        &configs_dir().join("gram_quaternion.json"),
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("re_0,im_0,re_1,im_1"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 1);
    assert!(rows.iter().all(|r| r.split(',').count() == 2 * rows.len()));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gram.report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "certified");
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = configs_dir().join("check_fock_matrix.json");
    let a = akx(&["--quiet", "--seed", "1"], &cfg).stdout;
    let b = akx(&["--quiet", "--seed", "1"], &cfg).stdout;
    let c = akx(&["--quiet", "--seed", "2"], &cfg).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_twistlab"));
    c.env_remove("TWISTLAB_OUT");
    c
}

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

const SMALL: &str = r#"
experiment = "forward"
[geometry]
section = "disk"
cells = [8, 8]
axial_cells = 8
ell = 0.3
big_l = 0.5
lambda = 1.0
[physics]
t_final = 0.05
dt = 0.00078125
profile = "bump"
profile_params = [0.02]
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_accepts_shipped_configs() {
    for name in ["forward.toml", "carleman.toml", "stability.toml"] {
        let o = bin().arg("validate").arg(shipped(name)).output().unwrap();
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}

#[test]
fn invalid_config_exits_with_one_and_names_the_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL.replace("ell = 0.3", "ell = 0.6"));
    let validate = bin().arg("validate").arg(&cfg).output().unwrap();
    let run = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    for o in [validate, run] {
        assert_eq!(o.status.code(), Some(1));
        assert!(stderr(&o).contains("ell < big_l < lambda"), "{}", stderr(&o));
    }
    assert!(!dir.path().join("o").exists());
    let unknown = write(dir.path(), "unknown.toml", &SMALL.replace("[physics]", "[physics]\nfoo = 1"));
    assert_eq!(bin().arg("validate").arg(&unknown).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("validate").arg(dir.path().join("missing.toml")).output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
}

#[test]
fn pipeline_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("experiment = \"forward\"", "experiment = \"inverse_interior\"")
        + "omega0_centre = [0.0, 0.0]\n";
    let cfg = write(dir.path(), "axis.toml", &text);
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("inverse_interior pipeline"), "{}", stderr(&o));
}

#[test]
fn run_writes_bundle_to_env_directory_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fwd.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = bin().arg("run").arg(&cfg).env("TWISTLAB_OUT", &a).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bin().args(["run", "--seed", "3", "--threads", "1"]).arg(&cfg).arg("--out").arg(&b).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["forward_norms.csv", "profile_curvature.csv", "summary.json", "manifest.sha256"] {
        assert!(a.join(f).exists() && b.join(f).exists(), "{f}");
    }
    let read = |d: &Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(&a, "forward_norms.csv"), read(&b, "forward_norms.csv"));
    let echo = String::from_utf8(read(&b, "config.toml")).unwrap();
    assert!(echo.starts_with("# twistlab ") && echo.contains("seed = 3"), "{echo}");
}

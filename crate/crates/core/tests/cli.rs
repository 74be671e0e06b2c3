use contact_stab::config::ScenarioConfig;
use std::path::{Path, PathBuf};
use std::process::Command;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_contact-stab")).args(args).arg("--out").arg(out).output().unwrap();
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
        String::from_utf8_lossy(&o.stderr).into_owned(),
    )
}

#[test]
fn bundled_configs_parse() {
    let mut n = 0;
    for e in std::fs::read_dir(configs_dir()).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "cfg") {
            ScenarioConfig::load(&p, &[]).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 8);
}

#[test]
fn validate_state_succeeds_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("constant.cfg");
    let (code, stdout, stderr) = run(&["validate-state", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code, 0, "{stdout}{stderr}");
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = passed"), "{manifest}");
    assert!(manifest.contains("scenario.kind = validate-state"));
    assert!(dir.path().join("validation.csv").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "scenario.kind = validate-state\ngrid.N1 = -3\n").unwrap();
    let (code, _, stderr) = run(&["validate-state", bad.to_str().unwrap()], &dir.path().join("o1"));
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("grid.N1"), "{stderr}");

    std::fs::write(&bad, "scenario.kind = validate-state\nthis line is garbage\n").unwrap();
    let (code, _, stderr) = run(&["validate-state", bad.to_str().unwrap()], &dir.path().join("o2"));
    assert_eq!(code, 2);
    assert!(stderr.contains("line 2"), "{stderr}");

    let cfg = configs_dir().join("constant.cfg");
    let (code, _, stderr) =
        run(&["validate-state", cfg.to_str().unwrap(), "--override", "grid.bogus=1"], &dir.path().join("o3"));
    assert_eq!(code, 2, "{stderr}");

    let missing = dir.path().join("missing.cfg");
    let (code, _, _) = run(&["validate-state", missing.to_str().unwrap()], &dir.path().join("o4"));
    assert_eq!(code, 2);
}

#[test]
fn inadmissible_state_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("constant.cfg");
    let (code, _, stderr) = run(&["validate-state", cfg.to_str().unwrap(), "--override", "physics.p0=-1"], dir.path());
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn failed_check_exits_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("adjoint.cfg");
    let (code, stdout, _) = run(&["adjoint-check", cfg.to_str().unwrap()], &dir.path().join("ok"));
    assert_eq!(code, 0, "{stdout}");
    // a zero tolerance cannot be met by a floating point identity
    let (code, _, stderr) =
        run(&["adjoint-check", cfg.to_str().unwrap(), "--override", "tol.adjoint=0"], &dir.path().join("bad"));
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("adjoint identity"));
}

#[test]
fn blow_up_exits_with_code_3_and_keeps_the_manifest() {
    // an absurd interface penalty makes the explicit stepper unstable
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("energy.cfg");
    let args = [
        "energy-test",
        cfg.to_str().unwrap(),
        "--override",
        "grid.N1=20",
        "--override",
        "grid.N2=20",
        "--override",
        "grid.cfl=1",
        "--override",
        "run.alpha=5000",
        "--override",
        "run.T_final=2",
    ];
    let (code, _, stderr) = run(&args, dir.path());
    assert_eq!(code, 3, "{stderr}");
    assert!(stderr.contains("blow-up"), "{stderr}");
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = error"), "{manifest}");
}

use std::process::{Command, Output};

fn gff_lab(args: &[&str], config: Option<&str>) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gff-lab"));
    cmd.env_remove("GFFLAB_JOBS");
    if let Some(text) = config {
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, text).unwrap();
        cmd.arg("run").arg(&path).arg("--out").arg(dir.path().join("out"));
    }
    (cmd.args(args).output().unwrap(), dir)
}

#[test]
fn list_names_every_experiment() {
    let (out, _) = gff_lab(&["list"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in gff_lab::experiments::EXPERIMENTS {
        assert!(text.contains(e.name), "{} missing from list", e.name);
    }
}

#[test]
fn negative_nu_is_a_config_error_naming_the_field() {
    let (out, dir) = gff_lab(&[], Some("experiment.name = stationary_bd\nmodel.nu = -1\n"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.nu"));
    assert!(!dir.path().join("out_summary.json").exists());
}

#[test]
fn config_errors_exit_2() {
    for cfg in [
        "experiment.name = nope\n",
        "experiment.name = weyl\ntolerance.bogus = 1\n",
        "experiment.name = weyl\nunknown.key = 1\n",
        "experiment.name = fourier_limits\ntime.t_list = 0.1, 0.2\n",
    ] {
        let (out, _) = gff_lab(&[], Some(cfg));
        assert_eq!(out.status.code(), Some(2), "{cfg}");
    }
    let (out, _) = gff_lab(&["run", "/nonexistent/run.cfg"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_check_exits_1_and_still_writes_outputs() {
    // the ε = 1e-8 limit sits near 6e-10, far above this tolerance
    let (out, dir) = gff_lab(&[], Some("experiment.name = fourier_limits\ntolerance.zero_mass = 1e-15\n"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL zero_mass_limit_d1"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["passed"], false);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = "experiment.name = convergence_curve\nmc.samples = 4000\nmc.seed = 21\n";
    let (a, da) = gff_lab(&["--jobs", "1"], Some(cfg));
    let (b, db) = gff_lab(&["--jobs", "4"], Some(cfg));
    assert!(a.status.success() && b.status.success());
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("out_convergence_curve.csv")).unwrap();
    assert_eq!(read(&da), read(&db));
}

#[test]
fn seed_override_and_env_jobs() {
    let cfg = "experiment.name = bridge_cov\nmc.samples = 2000\nmc.seed = 1\n";
    let (a, da) = gff_lab(&["--seed", "99"], Some(cfg));
    assert!(a.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(da.path().join("out_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 99);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, cfg).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gff-lab"))
        .arg("run")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .env("GFFLAB_JOBS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["jobs"], 3);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn penalab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_penalab"))
        .args(args)
        .current_dir(dir)
        .env_remove("PENALAB_SEED")
        .output()
        .unwrap()
}

fn runs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

const CONFIG: &str = "dt=0.01\nt_max=40\nn_paths=100\nmaster_seed=5\ntheta=1\neps_localtime=0.1\nL=50\ndx=0.001\nci_level=0.9999\nout=o\n";

#[test]
fn missing_key_is_a_config_error_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.conf"), CONFIG.replace("dt=0.01\n", "")).unwrap();
    let o = penalab(tmp.path(), &["verify", "phi-atom", "--config", "c.conf"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`dt`"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn usage_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "no-such-experiment"][..],
        &["--bogus", "verify-all"],
        &["verify", "phi-atom", "--dt", "-1"],
        &["verify", "phi-atom", "--n", "0"],
        &["phi", "box:1:0:1"],
        &["report", "."],
    ] {
        let o = penalab(tmp.path(), args);
        assert_eq!(o.status.code(), Some(3), "{args:?}");
    }
    assert_eq!(penalab(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn insufficient_horizon_for_theta() {
    let tmp = tempfile::tempdir().unwrap();
    let o = penalab(tmp.path(), &["sample", "w", "--theta", "50", "--dt", "0.01"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn phi_table() {
    let tmp = tempfile::tempdir().unwrap();
    let o = penalab(tmp.path(), &["phi", "a:0:2", "--from", "-1", "--to", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("# C_V = 0.5\n"));
    let last = s.lines().last().unwrap();
    let v: Vec<f64> = last.split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(v[0], 1.0);
    assert!((v[1] - 1.5).abs() < 1e-6);
}

#[test]
fn verify_writes_a_fresh_run() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.conf"), CONFIG).unwrap();
    for _ in 0..2 {
        let o = penalab(tmp.path(), &["verify", "phi-atom", "--config", "c.conf"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let dirs = runs(&tmp.path().join("o"));
    assert_eq!(dirs.len(), 2);
    for d in &dirs {
        assert!(d.file_name().unwrap().to_str().unwrap().contains("-seed5"));
    }
    let a = std::fs::read(dirs[0].join("results.csv")).unwrap();
    assert_eq!(a, std::fs::read(dirs[1].join("results.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,lhs_mean,lhs_se,rhs_mean,rhs_se,tolerance,censor_rate,n_paths,dt,seed,verdict"
    );
    assert!(lines.next().unwrap().starts_with("phi-atom,"));
    assert!(!text.contains('\r'));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dirs[0].join("summary.json")).unwrap()).unwrap();
    let cfg = &json["config"];
    for k in ["dt", "t_max", "n_paths", "master_seed", "theta", "eps_localtime", "L", "dx", "ci_level", "out"] {
        assert!(!cfg[k].is_null(), "{k}");
    }
    assert_eq!(json["verdict"], "PASS");

    let o = penalab(tmp.path(), &["report", "o"]);
    assert_eq!(o.status.code(), Some(0));
    let rep = String::from_utf8(o.stdout).unwrap();
    assert_eq!(rep.lines().filter(|l| l.contains(",phi-atom,")).count(), 2);
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_penalab");
    let run = |extra: &[&str]| {
        let o = Command::new(bin)
            .args(["verify", "l1-bound", "--out", "o"])
            .args(extra)
            .current_dir(tmp.path())
            .env("PENALAB_SEED", "42")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
    };
    run(&[]);
    run(&["--seed", "43"]);
    let names: Vec<String> =
        runs(&tmp.path().join("o")).iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert!(names.iter().any(|n| n.ends_with("-seed42")));
    assert!(names.iter().any(|n| n.ends_with("-seed43")));
}

#[test]
fn sample_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let o = penalab(tmp.path(), &["sample", "bridge", "--paths", "3", "--horizon", "1", "--dt", "0.01", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0));
    let dir = runs(&tmp.path().join("s")).pop().unwrap();
    let csv = std::fs::read_to_string(dir.join("paths.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 101);
    // bridges are pinned at both ends
    for l in csv.lines().skip(1).filter(|l| l.contains(",0,") || l.contains(",1,")) {
        assert!(l.ends_with(",0"), "{l}");
    }
    assert!(dir.join("config.txt").exists());

    let o = penalab(tmp.path(), &["sample", "wv", "--v", "a:0:1", "--paths", "2", "--dt", "0.01", "--out", "s"]);
    assert_eq!(o.status.code(), Some(0));
    let o = penalab(tmp.path(), &["sample", "w", "--paths", "2", "--dt", "0.01", "--out", "w"]);
    assert_eq!(o.status.code(), Some(0));
    let dir = runs(&tmp.path().join("w")).pop().unwrap();
    assert_eq!(std::fs::read_to_string(dir.join("draws.csv")).unwrap().lines().count(), 3);
}

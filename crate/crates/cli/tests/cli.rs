use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hydroalpha"))
}

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = "[grid]\nnx = 16\nnz = 16\n[model]\nn_modes = 6\n[time]\nt_final = 0.01\n";

#[test]
fn run_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let zero = write(tmp.path(), "zero.toml", SMALL);
    let out = bin().args(["run", "--config"]).arg(&zero).arg("--out").arg(tmp.path().join("z")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("z/monitor.csv")).unwrap();
    assert!(csv.lines().nth(0).unwrap().starts_with("# hydroalpha "));

    let tiny = SMALL.replace("n_modes = 6\n", "n_modes = 6\na = 1e-6\n") + "[[init.modes]]\nkx = 1\nk = 2\nre = 0.5\n";
    let tiny = write(tmp.path(), "tiny.toml", &tiny);
    let out = bin().args(["run", "--config"]).arg(&tiny).arg("--out").arg(tmp.path().join("t")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(tmp.path().join("t/summary.json")).unwrap();
    assert!(summary.contains("\"status\": \"tstar_reached\""));

    let bad = write(tmp.path(), "bad.toml", "[time]\ndt = -1\n");
    let out = bin().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("time.dt"));

    let out = bin().args(["run", "--dt", "0.01", "--T", "-1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_and_usage_errors() {
    let out = bin().args(["verify", "--suite", "model"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let out = bin().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn norms_and_basis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", SMALL);
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("r")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = bin()
        .arg("norms")
        .arg(tmp.path().join("r/snapshot_00000000.txt"))
        .args(["--s", "0.5", "--s", "1.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let norms = v["norms"].as_array().unwrap();
    assert_eq!(norms.len(), 2);
    assert!(norms.iter().all(|r| r["value"].as_f64() == Some(0.0)));
    let out = bin().arg("norms").arg(tmp.path().join("missing.txt")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // two resolutions agree on lambda_1 within 0.1%
    let lam1 = |nz: usize| {
        let c = write(tmp.path(), &format!("b{nz}.toml"), &format!("[grid]\nnz = {nz}\n[model]\nn_modes = 8\n"));
        let out = bin().args(["basis", "--config"]).arg(&c).arg("--out").arg(tmp.path().join(format!("b{nz}"))).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        let line = text.lines().find(|l| l.starts_with("1,")).unwrap().to_string();
        line[2..].parse::<f64>().unwrap()
    };
    let (a, b) = (lam1(48), lam1(96));
    assert!((a - b).abs() < 1e-3 * b);
    assert!(tmp.path().join("b48/basis_modes.csv").is_file());
}

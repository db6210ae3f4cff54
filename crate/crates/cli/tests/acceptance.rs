//! Acceptance gate: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

use std::path::Path;
use std::process::Command;

use hydroalpha::solver::Status;
use hydroalpha_cli::config::{reference_config, ModeSpec, RunConfig};
use hydroalpha_cli::run::execute;
use hydroalpha_cli::verify::{self, Check, SuiteReport};

/// Theorem-monitor ratios of the reference run (monitor every step), frozen
/// from the first verified run; drift tolerance 5%.
const THEOREM_BASELINE: [f64; 4] = [0.125_693_332, 0.874_318_071, 0.069_478_267, 0.624_396_952];
const BASELINE_DRIFT: f64 = 0.05;
/// Pinned outcomes of the analytic-band runs.
const SMALL_THETA_FINAL: f64 = 3.527_502_456_6e-3;
const LARGE_TSTAR: f64 = 0.025;

struct Gate {
    failed: usize,
}

impl Gate {
    fn line(&mut self, id: u32, title: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("[{}] C{id:<2} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn checks(&mut self, id: u32, title: &str, checks: &[&Check]) {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let detail = checks
            .iter()
            .map(|c| format!("{} = {:.4e}", c.name, c.measured))
            .collect::<Vec<_>>()
            .join("; ");
        self.line(id, title, pass, detail);
    }
}

fn select<'a>(rep: &'a SuiteReport, pred: impl Fn(&str) -> bool) -> Vec<&'a Check> {
    rep.checks.iter().filter(|c| pred(&c.name)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn large_config() -> RunConfig {
    let mut c = reference_config();
    c.init.modes = vec![ModeSpec { kx: 1, k: 2, re: 0.2, im: 0.0 }];
    c
}

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let p = e.expect("entry").path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("readable"))
        })
        .collect();
    out.sort();
    out
}

fn main() {
    let mut gate = Gate { failed: 0 };

    // 1, 2: reference run
    let (reference, seconds) = verify::reference_run().expect("reference run");
    let energy = verify::energy_checks(&reference, seconds).expect("energy checks");
    let order = verify::residual_order_checks().expect("residual order");
    let mut c1 = select(&energy, |n| n.contains("per-interval") || n.contains("wall time"));
    c1.extend(order.checks.iter());
    gate.checks(1, "energy identity", &c1);
    gate.checks(2, "vertical-mean conservation", &select(&energy, |n| n.contains("vertical mean")));

    // 3: linear decay and eigenvalue oracles
    let decay = verify::decay_suite().expect("decay suite");
    gate.checks(3, "linear decay vs oracle", &select(&decay, |n| n.contains("lambda_") && !n.contains("pi^2")));

    // 4: manufactured solution
    let mms = verify::mms_suite().expect("mms suite");
    gate.checks(4, "manufactured solution", &select(&mms, |_| true));

    // 5, 6, 7: Littlewood-Paley, Bernstein, Poincare
    let lp = verify::lp_suite().expect("lp suite");
    gate.checks(5, "Littlewood-Paley suite", &select(&lp, |n| !n.starts_with("Bernstein") && !n.starts_with("Poincare")));
    gate.checks(6, "Bernstein constants", &select(&lp, |n| n.starts_with("Bernstein")));
    for note in lp.notes.iter().filter(|n| !n.starts_with("Poincare")) {
        println!("        {note}");
    }
    gate.checks(7, "Poincare constant", &select(&lp, |n| n.starts_with("Poincare ||u|| <=")));

    // 8: analytic band, small data vs amplitude-scaled control
    let small = &reference.report.summary;
    let large = execute(&large_config(), None).expect("large-data run");
    let large_again = execute(&large_config(), None).expect("large-data rerun");
    let tstar = large.state.tstar();
    let pass8 = small.final_status == Status::Completed
        && small.radius.within_half_band
        && rel(small.radius.final_theta, SMALL_THETA_FINAL) < 1e-6
        && large.status == Status::TstarReached
        && tstar.is_some_and(|t| (t - LARGE_TSTAR).abs() < 1e-9)
        && large_again.state.tstar() == tstar;
    gate.line(
        8,
        "analytic-radius behavior",
        pass8,
        format!(
            "small: status {}, theta(T) = {:.6e} <= a/(2 lambda) = {:.6e}; large: status {}, T* = {:?}",
            small.final_status,
            small.radius.final_theta,
            0.5 * small.radius.a_over_lambda,
            large.status,
            tstar
        ),
    );

    // 9: theorem-monitor ratios against the frozen baseline
    let theorem = small.theorem.as_ref().expect("theorem report");
    let drift: Vec<f64> = theorem.ratios.iter().zip(THEOREM_BASELINE).map(|(r, b)| rel(*r, b)).collect();
    let pass9 = theorem.ratios.iter().all(|r| r.is_finite())
        && !theorem.partial
        && drift.iter().all(|d| *d <= BASELINE_DRIFT);
    gate.line(
        9,
        "theorem-monitor ratios",
        pass9,
        format!("ratios {:?}, drift vs baseline {:?} (<= {BASELINE_DRIFT})", theorem.ratios, drift),
    );

    // 10: two CLI runs of the same config give identical files
    let tmp = tempfile::tempdir().expect("tempdir");
    let cfg_path = tmp.path().join("reference.toml");
    std::fs::write(&cfg_path, reference_config().to_toml()).expect("config written");
    let bin = env!("CARGO_BIN_EXE_hydroalpha");
    let mut outputs = Vec::new();
    for i in 0..2 {
        let dir = tmp.path().join(format!("run{i}"));
        let status = Command::new(bin)
            .args(["run", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&dir)
            .output()
            .expect("binary runs");
        outputs.push((status.status.code(), files_of(&dir)));
    }
    let same = outputs[0] == outputs[1];
    let csv_json = outputs[0].1.iter().filter(|(n, _)| n.ends_with(".csv") || n.ends_with(".json")).count();
    gate.line(
        10,
        "determinism",
        same && outputs[0].0 == Some(0) && csv_json == 2,
        format!(
            "{} files compared bytewise, identical = {same}, exit codes {:?} / {:?}",
            outputs[0].1.len(),
            outputs[0].0,
            outputs[1].0
        ),
    );

    println!("acceptance: {} of 10 criteria passed", 10 - gate.failed);
    if gate.failed > 0 {
        std::process::exit(1);
    }
}

//! Invariant suites behind `hydroalpha verify`: each check carries its
//! measured value, the tolerance and a verdict.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use hydroalpha::field::Wall;
use hydroalpha::lp::inequalities::{
    ball_field, bernstein_row, clamped_profile, poincare_ratios, sharp_poincare_constants,
};
use hydroalpha::lp::{bony_parts, chi, delta_q, paraproduct_terms, plus_part, psi, DyadicProfile};
use hydroalpha::model::{omega, pde_residual, rhs_r, ModelParams, PressureForm};
use hydroalpha::solver::{init_state, run, Manufactured, RunOptions, SolverOptions};
use hydroalpha::zbasis::{build_basis, h10_inner, strong_form_eigenvalues};
use hydroalpha::{Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{reference_config, ModeSpec, RunConfig};
use crate::run::{execute, RunOutcome};

pub const SUITES: [&str; 7] = ["lp", "basis", "model", "energy", "decay", "mms", "all"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    /// `|measured - target| <= tol`.
    Near { target: f64, tol: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub measured: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl Check {
    pub fn new(suite: &'static str, name: impl Into<String>, measured: f64, bound: Bound) -> Self {
        let pass = match bound {
            Bound::AtMost(t) => measured <= t,
            Bound::AtLeast(t) => measured >= t,
            Bound::Near { target, tol } => (measured - target).abs() <= tol,
        };
        Self {
            suite,
            name: name.into(),
            measured,
            bound,
            pass,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = match self.bound {
            Bound::AtMost(t) => format!("<= {t:.3e}"),
            Bound::AtLeast(t) => format!(">= {t:.3e}"),
            Bound::Near { target, tol } => format!("{target} +- {tol}"),
        };
        write!(
            f,
            "{:<7} {:<52} {:>12.4e}  {:<18} {}",
            self.suite,
            self.name,
            self.measured,
            bound,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// Checks plus free-form report lines (tables).
#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn extend(&mut self, other: SuiteReport) {
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    match name {
        "lp" => lp_suite(),
        "basis" => basis_suite(),
        "model" => model_suite(),
        "energy" => energy_suite(),
        "decay" => decay_suite(),
        "mms" => mms_suite(),
        "all" => {
            let mut all = SuiteReport::default();
            for s in &SUITES[..SUITES.len() - 1] {
                all.extend(run_suite(s)?);
            }
            Ok(all)
        }
        other => bail!("unknown suite '{other}' (expected one of {})", SUITES.join(", ")),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Worst `|sum_q psi(2^-q xi) - 1|` (and of the low-pass form
/// `chi + sum_{q >= 0}`) over `count` log-uniform samples.
pub fn partition_of_unity_residual(count: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let xi = 2f64.powf(r.gen_range(-20.0..20.0));
        let full: f64 = (-60..=60).map(|q| psi(xi * 2f64.powi(-q))).sum();
        let low: f64 = chi(xi) + (0..=60).map(|q| psi(xi * 2f64.powi(-q))).sum::<f64>();
        worst = worst.max((full - 1.0).abs()).max((low - 1.0).abs());
    }
    worst
}

pub fn lp_suite() -> Result<SuiteReport> {
    const S: &str = "lp";
    let mut rep = SuiteReport::default();
    rep.checks.push(Check::new(
        S,
        "partition of unity, 1e4 sampled frequencies",
        partition_of_unity_residual(10_000, 1),
        Bound::AtMost(1e-12),
    ));

    let g = Arc::new(Grid::with_default_period(256, 8)?);
    let profile = DyadicProfile::for_grid(&g);
    let mut r = rng(2);
    let f = ball_field(&g, 7, || r.gen_range(-1.0..1.0))?;
    let mut worst = 0.0f64;
    for q in profile.blocks() {
        for q2 in profile.blocks() {
            if (q - q2).abs() >= 2 {
                worst = worst.max(delta_q(&delta_q(&f, q2, &profile), q, &profile).max_abs());
            }
        }
    }
    rep.checks.push(Check::new(S, "Delta_q Delta_q' = 0 for |q - q'| >= 2", worst, Bound::AtMost(0.0)));

    let g = Arc::new(Grid::with_default_period(128, 8)?);
    let profile = DyadicProfile::for_grid(&g);
    let a = ball_field(&g, 4, || r.gen_range(-1.0..1.0))?;
    let b = ball_field(&g, 4, || r.gen_range(-1.0..1.0))?;
    let (a, b) = (a.scale(1.0 / a.max_abs()), b.scale(1.0 / b.max_abs()));
    let ab = a.product(&b)?;
    let parts = bony_parts(&a, &b, &profile)?;
    rep.checks.push(Check::new(
        S,
        "Bony reconstruction (relative)",
        (&parts.total() - &ab).l2_norm() / ab.l2_norm(),
        Bound::AtMost(1e-12),
    ));
    let mut worst = 0.0f64;
    for (q2, term) in paraproduct_terms(&a, &b, &profile)? {
        for q in profile.blocks() {
            if (q - q2).abs() >= 5 {
                worst = worst.max(delta_q(&term, q, &profile).max_abs());
            }
        }
    }
    rep.checks.push(Check::new(
        S,
        "Delta_q(S_{q'-1} a Delta_q' b) for |q - q'| >= 5",
        worst,
        Bound::AtMost(1e-14),
    ));
    let fp = plus_part(&a);
    rep.checks.push(Check::new(
        S,
        "f+ isometry (relative)",
        (fp.l2_norm() - a.l2_norm()).abs() / a.l2_norm(),
        Bound::AtMost(1e-13),
    ));
    let mut worst = 0.0f64;
    for q in profile.blocks() {
        let lhs = plus_part(&delta_q(&a, q, &profile));
        let rhs = delta_q(&fp, q, &profile);
        worst = worst.max(lhs.max_diff(&rhs) / fp.max_abs());
    }
    rep.checks.push(Check::new(S, "f+ commutes with Delta_q (relative)", worst, Bound::AtMost(1e-13)));

    let g = Arc::new(Grid::with_default_period(512, 8)?);
    let mut r = rng(3);
    rep.notes.push("Bernstein constants (100 random fields per block)".into());
    rep.notes.push(format!("{:>3} {:>10} {:>10} {:>10} {:>10}", "q", "ring_min", "ring_max", "C_ring", "C_ball"));
    let mut c_max = 0.0f64;
    for q in 0..=6 {
        let row = bernstein_row(&g, q, 100, || r.gen_range(-1.0..1.0))?;
        rep.notes.push(format!(
            "{:>3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            q, row.ring_min, row.ring_max, row.ring_constant, row.ball_constant
        ));
        c_max = c_max.max(row.ring_constant).max(row.ball_constant);
    }
    rep.checks.push(Check::new(S, "Bernstein constant, q = 0..6", c_max, Bound::AtMost(3.0)));

    let g = Grid::with_default_period(8, 32)?;
    let sharp = sharp_poincare_constants(&g)?;
    let mut worst = [0.0f64; 3];
    for _ in 0..100 {
        let u = clamped_profile(&g, || r.gen_range(-1.0..1.0))?;
        let m = poincare_ratios(&g, &u)?;
        worst[0] = worst[0].max(m.l2_by_dz / sharp.l2_by_dz);
        worst[1] = worst[1].max(m.dz_by_dzz / sharp.dz_by_dzz);
        worst[2] = worst[2].max(m.linf_by_dz / sharp.linf_by_dz);
    }
    rep.notes.push(format!(
        "Poincare sharp discrete constants (Nz = 32): L2/dz {:.6}, dz/dzz {:.6}, Linf/dz {:.6}",
        sharp.l2_by_dz, sharp.dz_by_dzz, sharp.linf_by_dz
    ));
    rep.checks.push(Check::new(S, "Poincare ||u|| <= C ||u_z||, C / sharp", worst[0], Bound::AtMost(1.01)));
    rep.checks.push(Check::new(S, "Poincare ||u_z|| <= C ||u_zz||, C / sharp", worst[1], Bound::AtMost(1.01)));
    rep.checks.push(Check::new(S, "Poincare ||u||_inf <= C ||u_z||, C / sharp", worst[2], Bound::AtMost(1.01)));
    Ok(rep)
}

pub fn basis_suite() -> Result<SuiteReport> {
    const S: &str = "basis";
    let mut rep = SuiteReport::default();
    let g48 = Arc::new(Grid::with_default_period(8, 48)?);
    let g96 = Arc::new(Grid::with_default_period(8, 96)?);
    let b48 = build_basis(&g48, 16, 1.0)?;
    let b96 = build_basis(&g96, 16, 1.0)?;
    let exact = strong_form_eigenvalues(1.0, 3);
    for k in 0..3 {
        let (l48, l96) = (b48.lambdas()[k], b96.lambdas()[k]);
        rep.checks.push(Check::new(
            S,
            format!("lambda_{} Nz 48 vs 96 (relative)", k + 1),
            (l48 - l96).abs() / l96,
            Bound::AtMost(1e-3),
        ));
        rep.checks.push(Check::new(
            S,
            format!("lambda_{} vs strong-form root (relative)", k + 1),
            (l48 - exact[k]).abs() / exact[k],
            Bound::AtMost(1e-3),
        ));
    }
    let mut worst = 0.0f64;
    for j in 0..b48.n() {
        for k in 0..b48.n() {
            let ip = h10_inner(&g48, &b48.e_tilde().row(j).to_vec(), &b48.e_tilde().row(k).to_vec(), 1.0);
            worst = worst.max((ip - if j == k { 1.0 } else { 0.0 }).abs());
        }
    }
    rep.checks.push(Check::new(S, "H1_0 orthonormality", worst, Bound::AtMost(1e-10)));
    rep.checks.push(Check::new(
        S,
        "lambda_1 >= pi^2",
        b48.lambdas()[0] / std::f64::consts::PI.powi(2),
        Bound::AtLeast(1.0),
    ));
    Ok(rep)
}

fn test_params(n: usize, n_cut: usize) -> ModelParams {
    ModelParams {
        alpha1: 1.0,
        a: 0.1,
        lambda: 1.0,
        r_weight: 1.0,
        c_small: 1.0,
        c3: 1.0,
        n_modes: n,
        n_cut,
        pressure: PressureForm::Consistent,
    }
}

pub fn model_suite() -> Result<SuiteReport> {
    const S: &str = "model";
    let mut rep = SuiteReport::default();
    let g = Arc::new(Grid::with_default_period(32, 48)?);
    let pi = std::f64::consts::PI;
    let gm = move |m: f64, z: f64| (pi * z).sin().powi(2) * (2.0 * m * pi * z).sin();
    let u = Field::from_fn(&g, |x, z| {
        0.3 * x.cos() * gm(1.0, z) + 0.2 * (2.0 * x).sin() * gm(2.0, z) + 0.1 * (x + 0.3).cos() * gm(3.0, z)
    });
    let p = test_params(8, 10);
    let r = rhs_r(&u, &p)?;
    rep.checks.push(Check::new(
        S,
        "<R(u), u> / ||u||^3",
        (r.l2_inner(&u)? / u.l2_norm().powi(3)).abs(),
        Bound::AtMost(1e-12),
    ));
    let w = omega(&u, 1.0);
    let top = w.boundary_trace(1, Wall::Top)?;
    let bot = w.boundary_trace(1, Wall::Bottom)?;
    let ir = r.z_integral();
    let rate = (0..g.nx())
        .map(|k| (top.coeffs()[k] - bot.coeffs()[k] + ir.coeffs()[k]).norm())
        .fold(0.0, f64::max);
    rep.checks.push(Check::new(S, "d/dt int u dz under the pressure closure", rate, Bound::AtMost(1e-8)));
    let g = Arc::new(Grid::with_default_period(32, 24)?);
    let m = Manufactured::reference(&g, &p, 0.5)?;
    let t = 0.3;
    let res = pde_residual(&m.exact(t), &m.exact_rate(t), Some(&m.forcing_at(t)), &p)?;
    rep.checks.push(Check::new(
        S,
        "manufactured field residual (relative)",
        res.max_abs() / m.forcing_at(t).max_abs(),
        Bound::AtMost(1e-9),
    ));
    Ok(rep)
}

/// The small-data reference run with its wall-clock seconds.
pub fn reference_run() -> Result<(RunOutcome, f64)> {
    let start = Instant::now();
    let out = execute(&reference_config(), None)?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// `E(T) - E(0) + 2 int_0^T D` of the reference run over `E(0)` at `dt`.
pub fn cumulative_energy_residual(dt: f64) -> Result<f64> {
    let mut cfg = reference_config();
    cfg.time.dt = dt;
    cfg.time.monitor_stride = usize::MAX / 2;
    cfg.time.snapshot_stride = usize::MAX / 2;
    let out = execute(&cfg, None)?;
    let b = out
        .report
        .summary
        .energy_midpoint
        .clone()
        .expect("first and last observations");
    Ok(b.cumulative / b.initial_energy)
}

pub fn energy_checks(out: &RunOutcome, seconds: f64) -> Result<SuiteReport> {
    const S: &str = "energy";
    let mut rep = SuiteReport::default();
    let s = &out.report.summary;
    rep.checks.push(Check::new(
        S,
        "worst per-interval energy residual / E(0)",
        s.energy_relative,
        Bound::AtMost(1e-7),
    ));
    rep.checks.push(Check::new(S, "reference run wall time [s]", seconds, Bound::AtMost(60.0)));
    rep.checks.push(Check::new(S, "vertical mean, max over run", s.mean.max_abs, Bound::AtMost(1e-9)));
    rep.checks.push(Check::new(
        S,
        "blockwise vs global balance / E(0)",
        s.blockwise_defect.unwrap_or(f64::NAN),
        Bound::AtMost(1e-10),
    ));
    let obs = out.report.rows.len();
    rep.notes.push(format!("reference run: {obs} observations, status {}", s.final_status));
    Ok(rep)
}

pub fn residual_order_checks() -> Result<SuiteReport> {
    const S: &str = "energy";
    let mut rep = SuiteReport::default();
    let dts = [1e-3, 5e-4, 2.5e-4];
    let res: Vec<f64> = dts.iter().map(|&dt| cumulative_energy_residual(dt)).collect::<Result<_>>()?;
    for (dt, r) in dts.iter().zip(&res) {
        rep.notes.push(format!("dt = {dt:.2e}: cumulative residual / E(0) = {r:.4e}"));
    }
    for i in 0..2 {
        rep.checks.push(Check::new(
            S,
            format!("energy residual order, dt {:.1e} -> {:.2e}", dts[i], dts[i + 1]),
            (res[i] / res[i + 1]).abs().log2(),
            Bound::Near { target: 2.0, tol: 0.2 },
        ));
    }
    Ok(rep)
}

pub fn energy_suite() -> Result<SuiteReport> {
    let (out, secs) = reference_run()?;
    let mut rep = energy_checks(&out, secs)?;
    rep.extend(residual_order_checks()?);
    Ok(rep)
}

pub fn decay_suite() -> Result<SuiteReport> {
    const S: &str = "decay";
    let mut rep = SuiteReport::default();
    let t_final = 0.02;
    for k in 1..=3 {
        let mut cfg: RunConfig = reference_config();
        cfg.init.modes = vec![ModeSpec { kx: 1, k, re: 0.01, im: 0.0 }];
        cfg.flags.disable_nonlinear = true;
        cfg.time.dt = 1e-4;
        cfg.time.t_final = t_final;
        cfg.time.monitor_stride = 1000;
        let out = execute(&cfg, None)?;
        let row = out.state.grid().row_of(1).expect("resolved");
        let a_t = out.state.amplitudes()[[row, k - 1]].norm();
        let a_0 = out.trajectory.snapshots[0].amplitudes[[row, k - 1]].norm();
        let slope = (a_t / a_0).ln() / out.state.t();
        let lam = out.state.basis().lambdas()[k - 1];
        rep.checks.push(Check::new(
            S,
            format!("log-slope of mode {k} vs -lambda_{k} (relative)"),
            (slope + lam).abs() / lam,
            Bound::AtMost(5e-3),
        ));
    }
    rep.extend(basis_suite()?);
    for c in rep.checks.iter_mut() {
        c.suite = S;
    }
    Ok(rep)
}

/// Relative L2 error of the manufactured run against the exact field.
pub fn mms_error(nx: usize, nz: usize, n: usize, dt: f64, t_final: f64) -> Result<f64> {
    let g = Arc::new(Grid::with_default_period(nx, nz)?);
    let b = Arc::new(build_basis(&g, n, 1.0)?);
    let p = test_params(n, nx / 3);
    let m = Manufactured::reference(&g, &p, 0.5)?;
    let opts = SolverOptions {
        track_theta: false,
        forcing: Some(m.forcing()),
        ..Default::default()
    };
    let mut s = init_state(&g, &b, p, &m.exact(0.0), opts)?;
    run(&mut s, t_final, dt, &mut [], RunOptions { snapshot_stride: usize::MAX / 2, observer_stride: usize::MAX / 2 })?;
    let exact = m.exact(s.t());
    Ok((&s.field() - &exact).l2_norm() / exact.l2_norm())
}

pub fn mms_suite() -> Result<SuiteReport> {
    const S: &str = "mms";
    let mut rep = SuiteReport::default();
    let dts = [0.04, 0.02, 0.01, 0.005];
    let errs: Vec<f64> = dts.iter().map(|&dt| mms_error(64, 48, 16, dt, 0.4)).collect::<Result<_>>()?;
    rep.notes.push("manufactured solution, 64 x 48, n = 16, T = 0.4".into());
    for (dt, e) in dts.iter().zip(&errs) {
        rep.notes.push(format!("dt = {dt:.3}: relative L2 error {e:.4e}"));
    }
    for i in 0..3 {
        rep.checks.push(Check::new(
            S,
            format!("temporal order, dt {} -> {}", dts[i], dts[i + 1]),
            (errs[i] / errs[i + 1]).log2(),
            Bound::Near { target: 2.0, tol: 0.2 },
        ));
    }
    let coarse = mms_error(32, 24, 12, 1e-3, 0.2)?;
    let fine = mms_error(64, 48, 16, 1e-3, 0.2)?;
    rep.notes.push(format!("dt = 1e-3, T = 0.2: error {coarse:.4e} on 32 x 24, {fine:.4e} on 64 x 48"));
    rep.checks.push(Check::new(S, "spatial error drop, 32x24 -> 64x48", coarse / fine, Bound::AtLeast(100.0)));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_bounds() {
        assert!(Check::new("t", "a", 1.0, Bound::AtMost(1.0)).pass);
        assert!(!Check::new("t", "a", 1.1, Bound::AtMost(1.0)).pass);
        assert!(Check::new("t", "a", 2.1, Bound::Near { target: 2.0, tol: 0.2 }).pass);
        assert!(!Check::new("t", "a", f64::NAN, Bound::AtLeast(0.0)).pass);
        let line = Check::new("lp", "x", 0.5, Bound::AtMost(1.0)).to_string();
        assert!(line.starts_with("lp") && line.ends_with("PASS"));
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope").is_err());
    }

    #[test]
    fn partition_residual_small() {
        assert!(partition_of_unity_residual(500, 9) < 1e-12);
    }

    #[test]
    fn model_suite_passes() {
        let r = model_suite().unwrap();
        assert!(r.passed(), "{:#?}", r.checks);
    }
}

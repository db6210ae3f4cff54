//! `run`, `norms` and `basis`: building the solver from a config and writing
//! every output file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use hydroalpha::diagnostics::{default_r_weight, fmt_float, smallness_check, Monitor, MonitorReport};
use hydroalpha::field::snapshot;
use hydroalpha::lp::{besov_norm, DyadicProfile};
use hydroalpha::model::{ModelParams, PressureForm};
use hydroalpha::solver::{init_state, run, RunOptions, SolverOptions, SolverState, Status, Trajectory};
use hydroalpha::zbasis::{build_basis, ZBasis};
use hydroalpha::{Field, Grid};
use ndarray::Array2;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{Format, PressureChoice, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit statuses of the `run` subcommand.
pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Completed | Status::Running => 0,
        Status::TstarReached => 2,
        Status::Diverged => 3,
    }
}

/// Header line naming the tool version and the config hash.
pub fn header_line(config_hash: &str) -> String {
    format!("hydroalpha {VERSION} config_sha256={config_hash}")
}

pub fn grid_and_basis(cfg: &RunConfig) -> Result<(Arc<Grid>, Arc<ZBasis>)> {
    let g = Arc::new(Grid::new(cfg.grid.nx, cfg.grid.nz, cfg.grid.lx)?);
    let b = Arc::new(build_basis(&g, cfg.model.n_modes, cfg.model.alpha1)?);
    Ok((g, b))
}

pub fn model_params(cfg: &RunConfig, basis: &ZBasis) -> ModelParams {
    let m = &cfg.model;
    ModelParams {
        alpha1: m.alpha1,
        a: m.a,
        lambda: m.lambda_override.unwrap_or(1.0),
        r_weight: m.r_weight.unwrap_or_else(|| default_r_weight(basis.lambdas()[0])),
        c_small: m.c_small,
        c3: m.c3,
        n_modes: m.n_modes,
        n_cut: cfg.n_cut(),
        pressure: match m.pressure {
            PressureChoice::Consistent => PressureForm::Consistent,
            PressureChoice::SingleWeight => PressureForm::SingleWeight,
        },
    }
}

/// Initial field from the mode list or the snapshot file (zero if neither).
pub fn initial_field(cfg: &RunConfig, grid: &Arc<Grid>, basis: &ZBasis) -> Result<Field> {
    if let Some(path) = &cfg.init.file {
        return Ok(snapshot::read_on(path, grid).with_context(|| format!("init.file {}", path.display()))?);
    }
    let mut c = Array2::<Complex64>::zeros((grid.nx(), grid.nz()));
    for m in &cfg.init.modes {
        let e = basis.e_tilde().row(m.k - 1);
        let amp = Complex64::new(m.re, m.im);
        let rows = if m.kx == 0 {
            vec![(0, amp)]
        } else {
            vec![(m.kx, amp), (-m.kx, amp.conj())]
        };
        for (kx, a) in rows {
            let r = grid
                .row_of(kx)
                .with_context(|| format!("wavenumber {kx} not resolved"))?;
            for (j, v) in e.iter().enumerate() {
                c[[r, j]] += a * v;
            }
        }
    }
    Ok(Field::from_coeffs(grid, c)?)
}

pub struct RunOutcome {
    pub state: SolverState,
    pub trajectory: Trajectory,
    pub report: MonitorReport,
    pub status: Status,
    /// Files written, in write order.
    pub files: Vec<PathBuf>,
}

/// Builds, initializes and runs `cfg`; writes outputs into `out` when given.
pub fn execute(cfg: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    cfg.validate()?;
    cfg.validate_files()?;
    let (grid, basis) = grid_and_basis(cfg)?;
    let params = model_params(cfg, &basis);
    let u0 = initial_field(cfg, &grid, &basis)?;
    let forcing = match &cfg.flags.forcing_file {
        Some(p) => {
            let f = snapshot::read_on(p, &grid).with_context(|| format!("flags.forcing_file {}", p.display()))?;
            Some(Arc::new(move |_t: f64| f.clone()) as hydroalpha::solver::Forcing)
        }
        None => None,
    };
    let options = SolverOptions {
        nonlinear: !cfg.flags.disable_nonlinear,
        lambda_override: cfg.model.lambda_override,
        forcing,
        ..Default::default()
    };
    let mut state = init_state(&grid, &basis, params, &u0, options)?;
    let smallness = smallness_check(&u0, state.params())?;
    let mut monitor = Monitor::new(state.params()).with_smallness(smallness);
    let trajectory = run(
        &mut state,
        cfg.time.t_final,
        cfg.time.dt,
        &mut [&mut monitor],
        RunOptions {
            snapshot_stride: cfg.time.snapshot_stride,
            observer_stride: cfg.time.monitor_stride,
        },
    )?;
    let report = monitor.report()?;
    let status = state.status();
    let mut files = Vec::new();
    if let Some(dir) = out {
        files = write_outputs(cfg, dir, &state, &trajectory, &report)?;
    }
    Ok(RunOutcome {
        state,
        trajectory,
        report,
        status,
        files,
    })
}

fn write_outputs(
    cfg: &RunConfig,
    dir: &Path,
    state: &SolverState,
    trajectory: &Trajectory,
    report: &MonitorReport,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let hash = cfg.hash();
    let head = header_line(&hash);
    let mut files = Vec::new();
    if cfg.output.formats.contains(&Format::Csv) {
        let p = dir.join("monitor.csv");
        let lines = vec![
            head.clone(),
            format!("weighted norms over the simulated horizon [0, {}] only", fmt_float(cfg.time.t_final)),
        ];
        std::fs::write(&p, report.to_csv(&lines))?;
        files.push(p);
    }
    if cfg.output.formats.contains(&Format::Json) {
        let p = dir.join("summary.json");
        let v = summary_json(&hash, state, report);
        std::fs::write(&p, serde_json::to_string_pretty(&v)? + "\n")?;
        files.push(p);
    }
    if cfg.output.formats.contains(&Format::Snapshots) {
        for s in &trajectory.snapshots {
            let p = dir.join(format!("snapshot_{:08}.txt", s.step));
            let extra = vec![
                head.clone(),
                format!("step={} t={} theta={} status={}", s.step, fmt_float(s.t), fmt_float(s.theta), s.status),
            ];
            snapshot::write(&p, &state.field_of(&s.amplitudes), &extra)?;
            files.push(p);
        }
    }
    Ok(files)
}

/// Finite floats as numbers, anything else as `null`.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub fn summary_json(hash: &str, state: &SolverState, report: &MonitorReport) -> Value {
    let s = &report.summary;
    let energy = |b: &Option<hydroalpha::diagnostics::EnergyBalance>| match b {
        Some(b) => json!({
            "max_abs": num(b.max_abs),
            "cumulative": num(b.cumulative),
            "initial_energy": num(b.initial_energy),
        }),
        None => Value::Null,
    };
    let theorem = match &s.theorem {
        Some(t) => json!({
            "r_weight": num(t.r_weight),
            "horizon": num(t.horizon),
            "linf_u_32": num(t.linf_u),
            "linf_dzu_32": num(t.linf_dzu),
            "l2_dzu_32": num(t.l2_dzu),
            "l2_dzzu_32": num(t.l2_dzzu),
            "data_norm": num(t.data_norm),
            "ratios": t.ratios.iter().map(|r| num(*r)).collect::<Vec<_>>(),
            "weighted_sup": num(t.weighted_sup),
            "weighted_sup_time": num(t.weighted_sup_time),
            "bounded": t.bounded,
            "rate_ratio": t.rate_ratio.map(num).unwrap_or(Value::Null),
            "partial": t.partial,
        }),
        None => Value::Null,
    };
    let r = &s.radius;
    json!({
        "header": {
            "line": header_line(hash),
            "tool": "hydroalpha",
            "version": VERSION,
            "config_sha256": hash,
            "note": "weighted norms are truncated to the simulated horizon",
        },
        "status": s.final_status.as_str(),
        "final_time": num(s.final_time),
        "tstar": state.tstar().map(num).unwrap_or(Value::Null),
        "lambda": num(state.params().lambda),
        "energy": {
            "midpoint": energy(&s.energy_midpoint),
            "trapezoid": energy(&s.energy_trapezoid),
            "max_relative": num(s.energy_relative),
            "pass": s.energy_pass,
            "blockwise_defect": s.blockwise_defect.map(num).unwrap_or(Value::Null),
        },
        "vertical_mean": {
            "max_abs": num(s.mean.max_abs),
            "drift": num(s.mean.drift),
            "tolerance": num(s.mean.tolerance),
            "pass": !s.mean.violated,
        },
        "smallness": {
            "n_half": num(s.smallness.n_half),
            "n_three_halves": num(s.smallness.n_three_halves),
            "ratio": num(s.smallness.ratio),
            "pass": s.smallness.pass,
        },
        "analytic_radius": {
            "final_theta": num(r.final_theta),
            "a_over_lambda": num(r.a_over_lambda),
            "margin": num(r.margin),
            "within_half_band": r.within_half_band,
            "nondecreasing": r.nondecreasing,
            "c_r": num(r.c_r),
            "l2_dzz_half": num(r.l2_dzz_half),
            "cauchy_schwarz_holds": r.cauchy_schwarz_holds,
        },
        "theorem": theorem,
    })
}

/// `norms`: Besov records of a snapshot file as JSON.
pub fn norms_json(path: &Path, s_list: &[f64]) -> Result<Value> {
    if !path.is_file() {
        bail!("no such snapshot file {}", path.display());
    }
    let f = snapshot::read(path)?;
    let profile = DyadicProfile::for_grid(f.grid());
    let mut records = Vec::new();
    for &s in s_list {
        let r = besov_norm(&f, s, &profile)?;
        let blocks: serde_json::Map<String, Value> =
            r.per_block.iter().map(|(q, v)| (q.to_string(), num(*v))).collect();
        records.push(json!({"s": s, "value": num(r.value), "blocks": blocks}));
    }
    Ok(json!({
        "header": {"tool": "hydroalpha", "version": VERSION, "source": path.display().to_string()},
        "norms": records,
    }))
}

/// `basis`: `k,lambda_k` CSV text and the mode table (`z, e~_1, ..`).
pub fn basis_tables(cfg: &RunConfig) -> Result<(String, String)> {
    let (grid, basis) = grid_and_basis(cfg)?;
    let head = format!("# {}\n", header_line(&cfg.hash()));
    let mut lambdas = head.clone() + "k,lambda\n";
    for (k, l) in basis.lambdas().iter().enumerate() {
        lambdas += &format!("{},{}\n", k + 1, fmt_float(*l));
    }
    let mut modes = head;
    modes += "z";
    for k in 1..=basis.n() {
        modes += &format!(",e{k}");
    }
    modes.push('\n');
    for (j, z) in grid.z_nodes().iter().enumerate() {
        modes += &fmt_float(*z);
        for k in 0..basis.n() {
            modes += &format!(",{}", fmt_float(basis.e_tilde()[[k, j]]));
        }
        modes.push('\n');
    }
    Ok((lambdas, modes))
}

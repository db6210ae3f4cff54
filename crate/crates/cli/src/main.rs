use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hydroalpha_cli::config::RunConfig;
use hydroalpha_cli::{init_threads, run, verify};

#[derive(Parser)]
#[command(name = "hydroalpha", version, about = "Hydrostatic Navier-Stokes-alpha spectral solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation; exit 0 completed, 2 T* reached, 3 diverged.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "T")]
        t_final: Option<f64>,
    },
    /// Run an invariant suite (lp, basis, model, energy, decay, mms, all).
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Besov norms of a snapshot file as JSON.
    Norms {
        snapshot: PathBuf,
        #[arg(long = "s", default_values_t = [0.5, 1.5])]
        s: Vec<f64>,
    },
    /// Eigenvalues (and mode table with --out) of the vertical basis.
    Basis {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &Option<PathBuf>) -> Result<RunConfig> {
    match config {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    init_threads()?;
    match cli.command {
        Command::Run { config, out, dt, t_final } => {
            let mut cfg = load(&config)?;
            if let Some(dt) = dt {
                cfg.time.dt = dt;
            }
            if let Some(t) = t_final {
                cfg.time.t_final = t;
            }
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| cfg.output.directory.clone());
            let outcome = run::execute(&cfg, Some(&dir))?;
            let s = &outcome.report.summary;
            println!(
                "status {} at t = {}; theta = {:.6e} (a/lambda = {:.6e}); outputs in {}",
                s.final_status,
                s.final_time,
                s.radius.final_theta,
                s.radius.a_over_lambda,
                dir.display()
            );
            Ok(run::exit_code(outcome.status) as u8)
        }
        Command::Verify { suite } => {
            let rep = verify::run_suite(&suite)?;
            for c in &rep.checks {
                println!("{c}");
            }
            for n in &rep.notes {
                println!("{n}");
            }
            Ok(if rep.passed() { 0 } else { 1 })
        }
        Command::Norms { snapshot, s } => {
            let v = run::norms_json(&snapshot, &s)?;
            println!("{}", serde_json::to_string_pretty(&v)?);
            Ok(0)
        }
        Command::Basis { config, out } => {
            let cfg = load(&config)?;
            let (lambdas, modes) = run::basis_tables(&cfg)?;
            print!("{lambdas}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("basis.csv"), &lambdas)?;
                std::fs::write(dir.join("basis_modes.csv"), &modes)?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Configuration, orchestration and file output for the `hydroalpha`
//! command-line tool.

pub mod config;
pub mod run;
pub mod verify;

/// Caps the worker pool from `HYDROALPHA_THREADS` (ignored when unset or
/// not a positive integer). Call once, before any parallel work.
pub fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("HYDROALPHA_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("HYDROALPHA_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            anyhow::bail!("HYDROALPHA_THREADS must be a positive integer, got '{v}'");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

//! Run configuration: TOML sections with defaults, strict keys and
//! field-naming validation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nz: usize,
    pub lx: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 64,
            nz: 48,
            lx: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressureChoice {
    #[default]
    Consistent,
    SingleWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub alpha1: f64,
    pub a: f64,
    /// Fixed band slope instead of the data-dependent rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_override: Option<f64>,
    /// Monitor weight rate; `min(1, lambda_1 / 2)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_weight: Option<f64>,
    pub c_small: f64,
    pub c3: f64,
    pub n_modes: usize,
    /// `floor(nx / 3)` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cut: Option<usize>,
    pub pressure: PressureChoice,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            a: 0.1,
            lambda_override: None,
            r_weight: None,
            c_small: 1.0,
            c3: 1.0,
            n_modes: 16,
            n_cut: None,
            pressure: PressureChoice::Consistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub monitor_stride: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 2.0,
            snapshot_stride: 100,
            monitor_stride: 1,
        }
    }
}

/// One initial mode: adds `c e^{i kx x} e~_k(z)` plus its conjugate
/// (`k` counts from 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub kx: i64,
    pub k: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeSpec>,
    /// Snapshot file with the initial field; exclusive with `modes`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlagsConfig {
    pub disable_nonlinear: bool,
    /// Snapshot file used as a time-independent forcing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing_file: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Snapshots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Snapshots],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub time: TimeConfig,
    pub init: InitConfig,
    pub flags: FlagsConfig,
    pub output: OutputConfig,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive and finite, got {v}");
    }
    Ok(())
}

impl RunConfig {
    /// Parses and validates; relative paths are kept as written.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("config parse error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(f) = p {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        };
        rebase(&mut cfg.init.file);
        rebase(&mut cfg.flags.forcing_file);
        cfg.validate_files()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn n_cut(&self) -> usize {
        self.model.n_cut.unwrap_or(self.grid.nx / 3)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nx < 4 || g.nx % 2 != 0 {
            bail!("grid.nx must be even and >= 4, got {}", g.nx);
        }
        if g.nz < 8 {
            bail!("grid.nz must be >= 8, got {}", g.nz);
        }
        positive("grid.lx", g.lx)?;
        let m = &self.model;
        positive("model.alpha1", m.alpha1)?;
        positive("model.a", m.a)?;
        positive("model.c_small", m.c_small)?;
        positive("model.c3", m.c3)?;
        if let Some(l) = m.lambda_override {
            positive("model.lambda_override", l)?;
        }
        if let Some(r) = m.r_weight {
            if !(r >= 0.0 && r.is_finite()) {
                bail!("model.r_weight must be >= 0, got {r}");
            }
        }
        if m.n_modes == 0 || m.n_modes + 6 > g.nz {
            bail!("model.n_modes must lie in 1..={}, got {}", g.nz.saturating_sub(6), m.n_modes);
        }
        let n_cut = self.n_cut();
        if n_cut == 0 || n_cut + 1 > g.nx / 2 {
            bail!("model.n_cut must lie in 1..={}, got {n_cut}", g.nx / 2 - 1);
        }
        let t = &self.time;
        positive("time.dt", t.dt)?;
        if !(t.t_final >= 0.0 && t.t_final.is_finite()) {
            bail!("time.t_final must be >= 0, got {}", t.t_final);
        }
        if t.snapshot_stride == 0 {
            bail!("time.snapshot_stride must be >= 1");
        }
        if t.monitor_stride == 0 {
            bail!("time.monitor_stride must be >= 1");
        }
        let i = &self.init;
        if !i.modes.is_empty() && i.file.is_some() {
            bail!("init.modes and init.file are exclusive");
        }
        for (idx, mode) in i.modes.iter().enumerate() {
            if mode.k == 0 || mode.k > m.n_modes {
                bail!("init.modes[{idx}].k must lie in 1..={}, got {}", m.n_modes, mode.k);
            }
            if mode.kx.unsigned_abs() as usize > n_cut {
                bail!("init.modes[{idx}].kx exceeds n_cut = {n_cut}");
            }
            if mode.kx == 0 && mode.im != 0.0 {
                bail!("init.modes[{idx}].im must be 0 for kx = 0");
            }
            if !(mode.re.is_finite() && mode.im.is_finite()) {
                bail!("init.modes[{idx}] amplitude must be finite");
            }
        }
        Ok(())
    }

    /// Referenced files must exist.
    pub fn validate_files(&self) -> Result<()> {
        for (name, f) in [("init.file", &self.init.file), ("flags.forcing_file", &self.flags.forcing_file)] {
            if let Some(p) = f {
                if !p.is_file() {
                    bail!("{name}: no such file {}", p.display());
                }
            }
        }
        Ok(())
    }
}

/// Small-data configuration used by the checks: `0.02 e~_2(z) cos x` on the
/// default grid.
pub fn reference_config() -> RunConfig {
    let mut c = RunConfig::default();
    c.init.modes = vec![ModeSpec {
        kx: 1,
        k: 2,
        re: 0.01,
        im: 0.0,
    }];
    c
}

//! Run monitors: energy balance, vertical-mean invariant, data smallness,
//! the analytic band and the weighted Besov quantities controlled by the
//! global estimate.
//!
//! A [`Monitor`] records one [`Observation`] per call (either live, as a
//! solver [`Observer`], or replayed from a stored [`Trajectory`]); every
//! report below is a pure function of those observations and the model
//! parameters. The weighted norms are truncated to the simulated horizon.

use std::fmt::Write as _;

use crate::error::{param, Error, Result};
use crate::field::Field;
use crate::lp::{
    analytic_weight, block_norms, chemin_lerner_from_blocks, AnalyticWeightParams,
    DyadicProfile, TimeExponent,
};
use crate::model::ModelParams;
use crate::solver::{analytic_size, Observer, Snapshot, SolverState, Status, Trajectory};

/// Default weight rate `R = min(1, lambda_1 / 2)`.
pub fn default_r_weight(lambda1: f64) -> f64 {
    (0.5 * lambda1).min(1.0)
}

/// Block norms of the analytically weighted field at one observation. The
/// `B^{3/2}` series hold `||Delta_q d_x (.)||`, the half series
/// `||Delta_q d_z^2 u_phi||`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBlocks {
    pub u: Vec<f64>,
    pub dz: Vec<f64>,
    pub dzz: Vec<f64>,
    pub dzz_half: Vec<f64>,
    pub besov_u_32: f64,
    pub besov_dzu_32: f64,
}

/// Central-difference time derivative blocks, `B^{3/2}` series of
/// `(d_t u)_phi` and `(d_t d_z u)_phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBlocks {
    pub du: Vec<f64>,
    pub dzu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub step: usize,
    pub t: f64,
    pub theta: f64,
    pub lambda: f64,
    pub status: Status,
    /// `||u||^2 + alpha1^2 ||u_z||^2` from the amplitudes.
    pub energy: f64,
    /// `||u_z||^2 + alpha1^2 ||u_zz||^2` from the amplitudes.
    pub dissipation: f64,
    /// Solver's running `int_0^t D` (midpoint rule per step).
    pub dissipation_integral: f64,
    /// `int_0^1 u dz` at the x nodes.
    pub vertical_mean: Vec<f64>,
    /// Per-block energy and dissipation `<Delta_q u, u>`-type pieces from the
    /// reconstructed field, plus the mean-mode piece and the field totals.
    pub energy_blocks: Vec<f64>,
    pub dissipation_blocks: Vec<f64>,
    pub energy_zero: f64,
    pub dissipation_zero: f64,
    pub field_energy: f64,
    pub field_dissipation: f64,
    /// `None` once the band `a - lambda theta` is exhausted.
    pub weighted: Option<WeightedBlocks>,
    pub rates: Option<RateBlocks>,
}

impl Observation {
    pub fn band(&self, a: f64) -> f64 {
        a - self.lambda * self.theta
    }

    pub fn vertical_mean_max(&self) -> f64 {
        self.vertical_mean.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `sum_r psi(xi_r) spectrum_r`-type splitting of `Lx sum_r s_r` into blocks.
fn energy_pieces(f: &Field, profile: &DyadicProfile) -> (Vec<f64>, f64, f64) {
    let g = f.grid();
    let spec = f.z_spectrum();
    let blocks = profile
        .blocks()
        .map(|q| {
            (0..g.nx())
                .map(|r| profile.psi_q(q, g.xi(r)) * spec[r])
                .sum::<f64>()
                * g.lx()
        })
        .collect();
    let total = spec.iter().sum::<f64>() * g.lx();
    (blocks, spec[0] * g.lx(), total)
}

fn shifted_blocks(f: &Field, profile: &DyadicProfile) -> Vec<f64> {
    let g = crate::lp::x_derivative_power(f, 1);
    block_norms(&g, profile).into_iter().map(|(_, n)| n).collect()
}

fn besov_from_shifted(blocks: &[f64], profile: &DyadicProfile) -> f64 {
    // s = 3/2 after one x-derivative is the base index 1/2
    profile
        .blocks()
        .zip(blocks)
        .map(|(q, b)| 2f64.powf(0.5 * q as f64) * b)
        .sum()
}

fn weighted_blocks(u: &Field, w: AnalyticWeightParams, profile: &DyadicProfile) -> Result<WeightedBlocks> {
    let uw = analytic_weight(u, w)?;
    let dz = uw.d_z(1)?;
    let dzz = uw.d_z(2)?;
    let bu = shifted_blocks(&uw, profile);
    let bdz = shifted_blocks(&dz, profile);
    Ok(WeightedBlocks {
        besov_u_32: besov_from_shifted(&bu, profile),
        besov_dzu_32: besov_from_shifted(&bdz, profile),
        u: bu,
        dz: bdz,
        dzz: shifted_blocks(&dzz, profile),
        dzz_half: block_norms(&dzz, profile).into_iter().map(|(_, n)| n).collect(),
    })
}

/// Collects observations; usable as a solver [`Observer`].
#[derive(Debug, Clone)]
pub struct Monitor {
    params: ModelParams,
    profile: Option<DyadicProfile>,
    observations: Vec<Observation>,
    /// Last two `(t, u)` for the central difference of the previous one.
    recent: Vec<(f64, Field)>,
    smallness: Option<SmallnessReport>,
}

impl Monitor {
    /// `params` must be the state's parameters after initialization (with
    /// the chosen `lambda`).
    pub fn new(params: &ModelParams) -> Self {
        Self {
            params: params.clone(),
            profile: None,
            observations: Vec::new(),
            recent: Vec::new(),
            smallness: None,
        }
    }

    /// Uses `report` (typically of the unprojected data) instead of the
    /// smallness of the first observed field.
    pub fn with_smallness(mut self, report: SmallnessReport) -> Self {
        self.smallness = Some(report);
        self
    }

    /// Replays a stored trajectory through a fresh monitor.
    pub fn from_trajectory(state: &SolverState, trajectory: &Trajectory) -> Result<Self> {
        let mut m = Self::new(state.params());
        for s in &trajectory.snapshots {
            m.record(state, s)?;
        }
        Ok(m)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    /// Adds one snapshot; `state` supplies grid, basis and parameters only.
    pub fn record(&mut self, state: &SolverState, snap: &Snapshot) -> Result<()> {
        if let Some(last) = self.observations.last() {
            if snap.t < last.t {
                return param("observations must be time-ordered");
            }
        }
        let profile = self
            .profile
            .get_or_insert_with(|| DyadicProfile::for_grid(state.grid()))
            .clone();
        let p = &self.params;
        let a2 = p.alpha1 * p.alpha1;
        let u = state.field_of(&snap.amplitudes);
        let uz = u.d_z(1)?;
        let uzz = u.d_z(2)?;
        let (e0b, e0z, e0t) = energy_pieces(&u, &profile);
        let (e1b, e1z, e1t) = energy_pieces(&uz, &profile);
        let (e2b, e2z, e2t) = energy_pieces(&uzz, &profile);
        let w = AnalyticWeightParams {
            a: p.a,
            lambda: p.lambda,
            theta: snap.theta,
        };
        let weighted = match weighted_blocks(&u, w, &profile) {
            Ok(b) => Some(b),
            Err(Error::BandExhausted(_)) => None,
            Err(e) => return Err(e),
        };
        if self.smallness.is_none() {
            self.smallness = Some(smallness_check(&u, p)?);
        }
        let obs = Observation {
            step: snap.step,
            t: snap.t,
            theta: snap.theta,
            lambda: p.lambda,
            status: snap.status,
            energy: state.energy_of(&snap.amplitudes),
            dissipation: state.dissipation_of(&snap.amplitudes),
            dissipation_integral: snap.dissipation,
            vertical_mean: state.vertical_mean_of(&snap.amplitudes).to_values(),
            energy_blocks: e0b.iter().zip(&e1b).map(|(x, y)| x + a2 * y).collect(),
            dissipation_blocks: e1b.iter().zip(&e2b).map(|(x, y)| x + a2 * y).collect(),
            energy_zero: e0z + a2 * e1z,
            dissipation_zero: e1z + a2 * e2z,
            field_energy: e0t + a2 * e1t,
            field_dissipation: e1t + a2 * e2t,
            weighted,
            rates: None,
        };
        self.observations.push(obs);
        self.recent.push((snap.t, u));
        if self.recent.len() > 3 {
            self.recent.remove(0);
        }
        if self.recent.len() == 3 {
            let i = self.observations.len() - 2;
            let (t0, u0) = &self.recent[0];
            let (t2, u2) = &self.recent[2];
            let prev = &self.observations[i];
            if *t2 > *t0 && prev.weighted.is_some() {
                let du = (u2 - u0).scale(1.0 / (t2 - t0));
                let wp = AnalyticWeightParams {
                    theta: prev.theta,
                    ..w
                };
                let duw = analytic_weight(&du, wp)?;
                let rates = RateBlocks {
                    du: shifted_blocks(&duw, &profile),
                    dzu: shifted_blocks(&duw.d_z(1)?, &profile),
                };
                self.observations[i].rates = Some(rates);
            }
        }
        Ok(())
    }

    pub fn report(&self) -> Result<MonitorReport> {
        MonitorReport::new(self)
    }
}

impl Observer for Monitor {
    fn observe(&mut self, state: &SolverState) -> Result<()> {
        self.record(state, &state.snapshot())
    }
}

/// Which quadrature of `int D dt` closes the balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceRule {
    /// The solver's per-step midpoint integral; exact for the implicit
    /// part of the scheme.
    Midpoint,
    /// Trapezoid over the observed `D` values.
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalance {
    /// `E_{i+1} - E_i + 2 int_{t_i}^{t_{i+1}} D` per observed interval.
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    /// `E(T) - E(0) + 2 int_0^T D`.
    pub cumulative: f64,
    pub initial_energy: f64,
}

/// Discrete form of `d/dt E + 2 D = 0` over consecutive observations.
pub fn energy_balance(obs: &[Observation], rule: BalanceRule) -> Result<EnergyBalance> {
    if obs.len() < 2 {
        return param("energy balance needs at least two observations");
    }
    let residuals: Vec<f64> = obs
        .windows(2)
        .map(|w| {
            let integral = match rule {
                BalanceRule::Midpoint => w[1].dissipation_integral - w[0].dissipation_integral,
                BalanceRule::Trapezoid => 0.5 * (w[1].t - w[0].t) * (w[0].dissipation + w[1].dissipation),
            };
            w[1].energy - w[0].energy + 2.0 * integral
        })
        .collect();
    Ok(EnergyBalance {
        max_abs: residuals.iter().fold(0.0f64, |m, r| m.max(r.abs())),
        cumulative: residuals.iter().sum(),
        residuals,
        initial_energy: obs[0].energy,
    })
}

/// Largest disagreement between the block-summed and the global balance,
/// relative to `E(0)`: the energies and trapezoid dissipations split over
/// dyadic blocks (plus the mean mode) must add up to the field totals.
pub fn blockwise_consistency(obs: &[Observation]) -> Result<f64> {
    if obs.len() < 2 {
        return param("blockwise consistency needs at least two observations");
    }
    let scale = obs[0].field_energy.max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for w in obs.windows(2) {
        let dt = w[1].t - w[0].t;
        let global = w[1].field_energy - w[0].field_energy
            + dt * (w[0].field_dissipation + w[1].field_dissipation);
        let mut by_block = w[1].energy_zero - w[0].energy_zero
            + dt * (w[0].dissipation_zero + w[1].dissipation_zero);
        for q in 0..w[0].energy_blocks.len() {
            by_block += w[1].energy_blocks[q] - w[0].energy_blocks[q]
                + dt * (w[0].dissipation_blocks[q] + w[1].dissipation_blocks[q]);
        }
        worst = worst.max((global - by_block).abs() / scale);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanReport {
    /// `max_t max_x |int_0^1 u dz|`.
    pub max_abs: f64,
    /// `max_t max_x |int_0^1 (u(t) - u(0)) dz|`.
    pub drift: f64,
    pub tolerance: f64,
    pub violated: bool,
}

/// Vertical-mean invariant; flags a violation when the mean itself exceeds
/// `tolerance` anywhere along the run.
pub fn mean_invariant(obs: &[Observation], tolerance: f64) -> Result<MeanReport> {
    let first = obs.first().ok_or_else(|| Error::Parameter("no observations".into()))?;
    let mut max_abs = 0.0f64;
    let mut drift = 0.0f64;
    for o in obs {
        max_abs = max_abs.max(o.vertical_mean_max());
        for (m, m0) in o.vertical_mean.iter().zip(&first.vertical_mean) {
            drift = drift.max((m - m0).abs());
        }
    }
    Ok(MeanReport {
        max_abs,
        drift,
        tolerance,
        violated: max_abs > tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessReport {
    /// `||e^{a|D|} u0||_{B^{1/2}} + ||e^{a|D|} d_z u0||_{B^{1/2}}`.
    pub n_half: f64,
    /// The same at `s = 3/2`.
    pub n_three_halves: f64,
    /// `n_half (1 + n_three_halves) / (c a)`.
    pub ratio: f64,
    pub pass: bool,
}

/// Smallness of the data against `c a / (1 + N_{3/2})`.
pub fn smallness_check(u0: &Field, params: &ModelParams) -> Result<SmallnessReport> {
    let n_half = analytic_size(u0, params.a, 0.5)?;
    let n_three_halves = analytic_size(u0, params.a, 1.5)?;
    let ratio = n_half * (1.0 + n_three_halves) / (params.c_small * params.a);
    Ok(SmallnessReport {
        n_half,
        n_three_halves,
        ratio,
        pass: ratio <= 1.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub r_weight: f64,
    pub horizon: f64,
    /// `||e^{Rt} u_phi||` and `||e^{Rt} d_z u_phi||` in `L~^inf_T(B^{3/2})`.
    pub linf_u: f64,
    pub linf_dzu: f64,
    /// `||e^{Rt} d_z u_phi||` and `||e^{Rt} d_z^2 u_phi||` in `L~^2_T(B^{3/2})`.
    pub l2_dzu: f64,
    pub l2_dzzu: f64,
    /// `||e^{a|D|} u0||_{B^{3/2}} + ||e^{a|D|} d_z u0||_{B^{3/2}}` of the
    /// first observation.
    pub data_norm: f64,
    /// The four norms above divided by `data_norm` (zero data gives zeros).
    pub ratios: [f64; 4],
    /// `sup_t e^{Rt} (||u_phi||_{B^{3/2}} + ||d_z u_phi||_{B^{3/2}})` and its time.
    pub weighted_sup: f64,
    pub weighted_sup_time: f64,
    /// False when the weighted series is still at its maximum at the end of
    /// the run after growing, i.e. `R` beats the decay.
    pub bounded: bool,
    /// Time-derivative part: `||e^{Rt}(d_t u)_phi||^2 + ||e^{Rt}(d_t d_z u)_phi||^2`
    /// in `L~^2_T(B^{3/2})` plus `||e^{Rt} d_z u_phi||^2 + ||e^{Rt} d_z^2 u_phi||^2`
    /// in `L~^inf_T(B^{3/2})`, over its data norm; `None` without rate samples.
    pub rate_ratio: Option<f64>,
    /// Observations past the band were left out.
    pub partial: bool,
}

fn weighted_rows(obs: &[Observation]) -> Vec<(&Observation, &WeightedBlocks)> {
    obs.iter()
        .filter_map(|o| o.weighted.as_ref().map(|w| (o, w)))
        .collect()
}

/// Weighted Besov quantities of the global estimate over `[0, T]`.
pub fn theorem_monitor(monitor: &Monitor) -> Result<TheoremReport> {
    let obs = monitor.observations();
    let p = monitor.params();
    let profile = monitor
        .profile
        .as_ref()
        .ok_or_else(|| Error::Parameter("no observations".into()))?;
    let rows = weighted_rows(obs);
    if rows.is_empty() {
        return param("no observation inside the analytic band");
    }
    let r = p.r_weight;
    let ex = |t: f64| (r * t).exp();
    let ex2 = |t: f64| (2.0 * r * t).exp();
    let samples = |pick: &dyn Fn(&WeightedBlocks) -> &Vec<f64>| -> Vec<(f64, Vec<f64>)> {
        rows.iter().map(|(o, w)| (o.t, pick(w).clone())).collect()
    };
    let cl = |s: &[(f64, Vec<f64>)], e: TimeExponent, wt: &dyn Fn(f64) -> f64| {
        chemin_lerner_from_blocks(s, e, 0.5, wt, profile)
    };
    let su = samples(&|w| &w.u);
    let sdz = samples(&|w| &w.dz);
    let sdzz = samples(&|w| &w.dzz);
    let linf_u = cl(&su, TimeExponent::Infinity, &ex)?;
    let linf_dzu = cl(&sdz, TimeExponent::Infinity, &ex)?;
    let l2_dzu = cl(&sdz, TimeExponent::Two, &ex2)?;
    let l2_dzzu = cl(&sdzz, TimeExponent::Two, &ex2)?;
    let (o0, w0) = rows[0];
    let data_norm = w0.besov_u_32 + w0.besov_dzu_32;
    let over = |v: f64| if data_norm > 0.0 { v / data_norm } else { 0.0 };
    let series: Vec<(f64, f64)> = rows
        .iter()
        .map(|(o, w)| (o.t, ex(o.t) * (w.besov_u_32 + w.besov_dzu_32)))
        .collect();
    let (mut sup, mut sup_t) = (0.0f64, o0.t);
    for &(t, v) in &series {
        if v > sup {
            sup = v;
            sup_t = t;
        }
    }
    let last = series.last().map(|s| s.1).unwrap_or(0.0);
    let bounded = !(series.len() > 1 && last > series[0].1 && last >= sup);

    let rate_samples: Vec<(f64, Vec<f64>, Vec<f64>)> = rows
        .iter()
        .filter_map(|(o, _)| o.rates.as_ref().map(|rb| (o.t, rb.du.clone(), rb.dzu.clone())))
        .collect();
    let rate_ratio = if rate_samples.len() >= 2 {
        let du: Vec<_> = rate_samples.iter().map(|(t, a, _)| (*t, a.clone())).collect();
        let dzu: Vec<_> = rate_samples.iter().map(|(t, _, b)| (*t, b.clone())).collect();
        let lhs = cl(&du, TimeExponent::Two, &ex2)?.powi(2)
            + cl(&dzu, TimeExponent::Two, &ex2)?.powi(2)
            + linf_dzu.powi(2)
            + cl(&sdzz, TimeExponent::Infinity, &ex)?.powi(2);
        let u0 = monitor.first_field_norms()?;
        Some(if u0 > 0.0 { lhs / u0 } else { 0.0 })
    } else {
        None
    };
    Ok(TheoremReport {
        r_weight: r,
        horizon: rows.last().map(|(o, _)| o.t).unwrap_or(0.0),
        linf_u,
        linf_dzu,
        l2_dzu,
        l2_dzzu,
        data_norm,
        ratios: [over(linf_u), over(linf_dzu), over(l2_dzu), over(l2_dzzu)],
        weighted_sup: sup,
        weighted_sup_time: sup_t,
        bounded,
        rate_ratio,
        partial: rows.len() < obs.len(),
    })
}

impl Monitor {
    /// Data norm of the time-derivative estimate:
    /// `||e^{a|D|} u0_z||_{B^{3/2}} + ||e^{a|D|} u0_zz||_{B^{3/2}} +
    /// ||e^{a|D|} u0||_{B^{5/2}} + ||e^{a|D|} u0_z||_{B^{5/2}}`, from the
    /// weighted blocks of the first observation (`B^{5/2}` = one more
    /// x-derivative, i.e. weights `2^{3q/2}` on the shifted blocks).
    fn first_field_norms(&self) -> Result<f64> {
        let profile = self
            .profile
            .as_ref()
            .ok_or_else(|| Error::Parameter("no observations".into()))?;
        let w = self
            .observations
            .first()
            .and_then(|o| o.weighted.as_ref())
            .ok_or_else(|| Error::Parameter("first observation outside the band".into()))?;
        let b52 = |b: &[f64]| -> f64 {
            profile
                .blocks()
                .zip(b)
                .map(|(q, v)| 2f64.powf(1.5 * q as f64) * v)
                .sum()
        };
        Ok(w.besov_dzu_32 + besov_from_shifted(&w.dzz, profile) + b52(&w.u) + b52(&w.dz))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusReport {
    pub theta: Vec<(f64, f64)>,
    pub final_theta: f64,
    pub a_over_lambda: f64,
    /// `a / lambda - theta(T)`.
    pub margin: f64,
    /// `theta(T) <= a / (2 lambda)`.
    pub within_half_band: bool,
    pub nondecreasing: bool,
    /// `C_R = (int_0^T e^{-2Rt} dt)^{1/2}`.
    pub c_r: f64,
    /// `||e^{Rt} d_z^2 u_phi||` in `L~^2_T(B^{1/2})` over the observations.
    pub l2_dzz_half: f64,
    /// `theta(T) <= C_R L~^2 (1 + 1e-6)`.
    pub cauchy_schwarz_holds: bool,
    pub tstar: Option<f64>,
}

/// Analytic band consumption against its half-band and Cauchy-Schwarz
/// bounds.
pub fn analytic_radius_monitor(monitor: &Monitor) -> Result<RadiusReport> {
    let obs = monitor.observations();
    let p = monitor.params();
    let last = obs.last().ok_or_else(|| Error::Parameter("no observations".into()))?;
    let profile = monitor.profile.as_ref().expect("set with the first observation");
    let theta: Vec<(f64, f64)> = obs.iter().map(|o| (o.t, o.theta)).collect();
    let r = p.r_weight;
    let horizon = last.t;
    let c_r = if r == 0.0 {
        horizon.sqrt()
    } else {
        ((1.0 - (-2.0 * r * horizon).exp()) / (2.0 * r)).sqrt()
    };
    let rows = weighted_rows(obs);
    let samples: Vec<(f64, Vec<f64>)> = rows.iter().map(|(o, w)| (o.t, w.dzz_half.clone())).collect();
    let l2 = if samples.is_empty() {
        0.0
    } else {
        chemin_lerner_from_blocks(&samples, TimeExponent::Two, 0.5, &|t| (2.0 * r * t).exp(), profile)?
    };
    let a_over_lambda = p.a / p.lambda;
    Ok(RadiusReport {
        final_theta: last.theta,
        a_over_lambda,
        margin: a_over_lambda - last.theta,
        within_half_band: last.theta <= 0.5 * a_over_lambda,
        nondecreasing: theta.windows(2).all(|w| w[1].1 >= w[0].1),
        c_r,
        l2_dzz_half: l2,
        cauchy_schwarz_holds: last.theta <= c_r * l2 * (1.0 + 1e-6),
        tstar: obs
            .iter()
            .find(|o| o.status == Status::TstarReached)
            .map(|o| o.t),
        theta,
    })
}

/// One CSV row of the monitor table.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    /// Cumulative `E(t) - E(0) + 2 int_0^t D` (midpoint rule).
    pub energy_residual: f64,
    pub vertical_mean_max: f64,
    pub theta: f64,
    pub a_over_lambda: f64,
    /// `NaN` past the band.
    pub besov_u_32: f64,
    pub besov_dzu_32: f64,
    /// Running `sup e^{Rt} (besov_u_32 + besov_dzu_32)`.
    pub weighted_sup_32: f64,
    pub smallness_ratio: f64,
    pub status: Status,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "E",
    "D",
    "energy_residual",
    "vertical_mean_max",
    "theta",
    "a_over_lambda",
    "besov_u_32",
    "besov_dzu_32",
    "weighted_sup_32",
    "smallness_ratio",
    "status",
];

/// Final verdicts and measured values of all monitors.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub final_status: Status,
    pub final_time: f64,
    pub energy_midpoint: Option<EnergyBalance>,
    pub energy_trapezoid: Option<EnergyBalance>,
    /// Worst per-interval midpoint residual over `E(0)`.
    pub energy_relative: f64,
    pub energy_pass: bool,
    pub blockwise_defect: Option<f64>,
    pub mean: MeanReport,
    pub smallness: SmallnessReport,
    pub radius: RadiusReport,
    pub theorem: Option<TheoremReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub rows: Vec<MonitorRow>,
    pub summary: Summary,
}

/// Per-interval energy tolerance relative to `E(0)`.
pub const ENERGY_TOL: f64 = 1e-7;
/// Vertical-mean tolerance.
pub const MEAN_TOL: f64 = 1e-9;

impl MonitorReport {
    fn new(m: &Monitor) -> Result<Self> {
        let obs = m.observations();
        let first = obs.first().ok_or_else(|| Error::Parameter("no observations".into()))?;
        let p = m.params();
        let smallness = m.smallness.expect("set with the first observation");
        let mut sup = 0.0f64;
        let rows = obs
            .iter()
            .map(|o| {
                let (bu, bdz) = match &o.weighted {
                    Some(w) => {
                        sup = sup.max((p.r_weight * o.t).exp() * (w.besov_u_32 + w.besov_dzu_32));
                        (w.besov_u_32, w.besov_dzu_32)
                    }
                    None => (f64::NAN, f64::NAN),
                };
                MonitorRow {
                    t: o.t,
                    energy: o.energy,
                    dissipation: o.dissipation,
                    energy_residual: o.energy - first.energy + 2.0 * (o.dissipation_integral - first.dissipation_integral),
                    vertical_mean_max: o.vertical_mean_max(),
                    theta: o.theta,
                    a_over_lambda: p.a / o.lambda,
                    besov_u_32: bu,
                    besov_dzu_32: bdz,
                    weighted_sup_32: sup,
                    smallness_ratio: smallness.ratio,
                    status: o.status,
                }
            })
            .collect();
        let (mid, trap, blockwise) = if obs.len() >= 2 {
            (
                Some(energy_balance(obs, BalanceRule::Midpoint)?),
                Some(energy_balance(obs, BalanceRule::Trapezoid)?),
                Some(blockwise_consistency(obs)?),
            )
        } else {
            (None, None, None)
        };
        let energy_relative = match &mid {
            Some(b) if b.initial_energy > 0.0 => b.max_abs / b.initial_energy,
            Some(b) => b.max_abs,
            None => 0.0,
        };
        let last = obs.last().expect("nonempty");
        let theorem = if obs.iter().any(|o| o.weighted.is_some()) {
            Some(theorem_monitor(m)?)
        } else {
            None
        };
        Ok(Self {
            rows,
            summary: Summary {
                final_status: last.status,
                final_time: last.t,
                energy_pass: energy_relative <= ENERGY_TOL,
                energy_relative,
                energy_midpoint: mid,
                energy_trapezoid: trap,
                blockwise_defect: blockwise,
                mean: mean_invariant(obs, MEAN_TOL)?,
                smallness,
                radius: analytic_radius_monitor(m)?,
                theorem,
            },
        })
    }

    /// CSV table: `header` lines as `#` comments, the column line, then one
    /// row per observation with round-trip float formatting.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for h in header {
            let _ = writeln!(out, "# {h}");
        }
        out.push_str(&CSV_COLUMNS.join(","));
        out.push('\n');
        for r in &self.rows {
            let vals = [
                r.t,
                r.energy,
                r.dissipation,
                r.energy_residual,
                r.vertical_mean_max,
                r.theta,
                r.a_over_lambda,
                r.besov_u_32,
                r.besov_dzu_32,
                r.weighted_sup_32,
                r.smallness_ratio,
            ];
            for v in vals {
                let _ = write!(out, "{},", fmt_float(v));
            }
            out.push_str(r.status.as_str());
            out.push('\n');
        }
        out
    }
}

/// `{:e}` with 17 significant digits; `nan` for NaN.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::model::PressureForm;
    use crate::solver::{init_state, run, RunOptions, SolverOptions};
    use crate::zbasis::{build_basis, ZBasis};
    use std::sync::Arc;

    fn params(n: usize, n_cut: usize) -> ModelParams {
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

    fn setup(nx: usize, nz: usize, n: usize) -> (Arc<Grid>, Arc<ZBasis>) {
        let g = Arc::new(Grid::with_default_period(nx, nz).unwrap());
        let b = Arc::new(build_basis(&g, n, 1.0).unwrap());
        (g, b)
    }

    fn mode(b: &ZBasis, k: usize, amp: f64, kx: f64) -> Field {
        let g = b.grid();
        let e = b.e_tilde().row(k).to_vec();
        let x = Field::from_fn(g, |x, _| (kx * x).cos()).to_values();
        let vals = ndarray::Array2::from_shape_fn(x.raw_dim(), |(j, i)| amp * x[[j, i]] * e[j]);
        Field::from_values(g, &vals).unwrap()
    }

    fn monitored(u0: &Field, b: &Arc<ZBasis>, p: ModelParams, opts: SolverOptions, t: f64, dt: f64) -> Monitor {
        let g = b.grid().clone();
        let mut s = init_state(&g, b, p, u0, opts).unwrap();
        let mut m = Monitor::new(s.params());
        run(&mut s, t, dt, &mut [&mut m], RunOptions::default()).unwrap();
        m
    }

    #[test]
    fn zero_run_reports_zeros() {
        let (g, b) = setup(16, 16, 6);
        let m = monitored(&Field::zeros(&g), &b, params(6, 5), SolverOptions::default(), 0.01, 1e-3);
        let rep = m.report().unwrap();
        assert!(rep.rows.iter().all(|r| r.energy == 0.0 && r.energy_residual == 0.0));
        let s = &rep.summary;
        assert_eq!(s.energy_midpoint.as_ref().unwrap().max_abs, 0.0);
        assert_eq!(s.smallness.ratio, 0.0);
        assert!(s.smallness.pass);
        assert_eq!(s.radius.final_theta, 0.0);
        assert_eq!(s.radius.margin, s.radius.a_over_lambda);
        let th = s.theorem.as_ref().unwrap();
        assert_eq!(th.ratios, [0.0; 4]);
        assert_eq!(th.linf_u, 0.0);
        assert_eq!(s.final_status, Status::Completed);
    }

    #[test]
    fn linear_single_mode_balance() {
        let (_, b) = setup(16, 32, 6);
        let opts = SolverOptions {
            nonlinear: false,
            track_theta: false,
            ..Default::default()
        };
        let m = monitored(&mode(&b, 0, 0.01, 1.0), &b, params(6, 5), opts, 0.02, 1e-4);
        let bal = energy_balance(m.observations(), BalanceRule::Midpoint).unwrap();
        assert!(bal.max_abs <= 1e-8 * bal.initial_energy);
        // the trapezoid rule is only second order: residual shrinks 4x per halving
        let per = |dt: f64| {
            let m = monitored(&mode(&b, 0, 0.01, 1.0), &b, params(6, 5), opts_lin(), 0.02, dt);
            energy_balance(m.observations(), BalanceRule::Trapezoid).unwrap().cumulative
        };
        let (r1, r2) = (per(1e-3), per(5e-4));
        assert!(((r1 / r2).log2() - 2.0).abs() < 0.1, "{r1} {r2}");
        assert!(blockwise_consistency(m.observations()).unwrap() < 1e-10);
    }

    fn opts_lin() -> SolverOptions {
        SolverOptions {
            nonlinear: false,
            track_theta: false,
            ..Default::default()
        }
    }

    #[test]
    fn offset_mean_is_flagged() {
        let (g, b) = setup(16, 16, 6);
        let u0 = Field::from_fn(&g, |x, z| 0.01 * (1.0 + x.cos()) * (z * (1.0 - z)).powi(2));
        let m = monitored(&u0, &b, params(6, 5), opts_lin(), 0.01, 1e-3);
        let rep = mean_invariant(m.observations(), MEAN_TOL).unwrap();
        assert!(rep.violated && rep.max_abs > 1e-4);
    }

    #[test]
    fn smallness_examples() {
        let (g, b) = setup(16, 24, 4);
        let p = params(4, 5);
        let u = |d: f64| mode(&b, 0, d, 1.0);
        let r1 = smallness_check(&u(0.01), &p).unwrap();
        let r2 = smallness_check(&u(0.02), &p).unwrap();
        assert!(r2.ratio >= 2.0 * r1.ratio);
        // |xi| = 1 splits between blocks -1 and 0 with weights chi(1) and
        // 1 - chi(1); B^{3/2} takes one x-derivative, which has |xi| = 1
        let c1 = crate::lp::chi(1.0);
        let split = c1 / 2f64.sqrt() + (1.0 - c1);
        let e = b.e_tilde().row(0).to_vec();
        let ez = g.apply_z(g.dz(), &e);
        let l2 = |v: &[f64]| crate::zbasis::l2_inner(&g, v, v).sqrt() * (g.lx() / 2.0).sqrt();
        let n = 0.01 * split * (0.1f64).exp() * (l2(&e) + l2(&ez));
        assert!((r1.n_half - n).abs() < 1e-8 * n);
        assert!((r1.n_three_halves - n).abs() < 1e-8 * n);
        assert!((r1.ratio - n * (1.0 + n) / 0.1).abs() < 1e-8 * r1.ratio);
        let z = smallness_check(&Field::zeros(&g), &p).unwrap();
        assert!(z.ratio == 0.0 && z.pass);
    }

    #[test]
    fn radius_and_theorem_on_small_data() {
        let (_, b) = setup(32, 24, 8);
        let u0 = mode(&b, 1, 0.02, 1.0);
        let m = monitored(&u0, &b, params(8, 10), SolverOptions::default(), 0.2, 1e-3);
        let rad = analytic_radius_monitor(&m).unwrap();
        assert!(rad.nondecreasing && rad.within_half_band && rad.cauchy_schwarz_holds);
        assert!(rad.final_theta > 0.0);
        let th = theorem_monitor(&m).unwrap();
        assert!(th.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
        assert!(th.bounded && !th.partial);
        assert!(th.weighted_sup_time <= 0.02 + 1e-12);
        assert!(th.rate_ratio.unwrap().is_finite());
        // monitors are pure: replaying gives the same report
        assert_eq!(m.report().unwrap(), m.report().unwrap());
    }

    #[test]
    fn weight_beyond_the_gap_is_unbounded() {
        let (_, b) = setup(16, 24, 6);
        let mut p = params(6, 5);
        p.r_weight = 2.0 * b.lambdas()[0];
        let m = monitored(&mode(&b, 0, 0.01, 1.0), &b, p, opts_lin(), 0.1, 1e-3);
        assert!(!theorem_monitor(&m).unwrap().bounded);
        let mut p = params(6, 5);
        p.r_weight = default_r_weight(b.lambdas()[0]);
        assert_eq!(p.r_weight, 1.0);
        let m = monitored(&mode(&b, 0, 0.01, 1.0), &b, p, opts_lin(), 0.1, 1e-3);
        assert!(theorem_monitor(&m).unwrap().bounded);
    }

    #[test]
    fn replay_matches_live_observation() {
        let (g, b) = setup(16, 16, 6);
        let u0 = mode(&b, 1, 0.01, 2.0);
        let mut s = init_state(&g, &b, params(6, 5), &u0, SolverOptions::default()).unwrap();
        let mut live = Monitor::new(s.params());
        let traj = run(&mut s, 0.01, 1e-3, &mut [&mut live], RunOptions::default()).unwrap();
        let replay = Monitor::from_trajectory(&s, &traj).unwrap();
        assert_eq!(live.report().unwrap(), replay.report().unwrap());
        let csv = live.report().unwrap().to_csv(&["test".into()]);
        assert!(csv.starts_with("# test\nt,E,D,energy_residual"));
        assert_eq!(csv.lines().count(), 2 + traj.snapshots.len());
    }
}

//! IMEX time stepping of the Galerkin system
//! `d/dt u_k = -lambda_k u_k + <J_n R(J_n u), e~_k>` per x-wavenumber,
//! co-integrating the analytic band consumption `theta`.
//!
//! The stiff diagonal is advanced by Crank-Nicolson, the explicit part by
//! Adams-Bashforth 2 (the first step is a midpoint bootstrap). By default
//! the pressure enters as a per-wavenumber multiplier fixed by the discrete
//! vertical-mean constraint `sum_k m_k u_k = const`, `m_k = int e~_k`.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::field::{Field, Grid, XLine};
use crate::lp::{block_norms_from_spectrum, DyadicProfile};
use crate::model::{jn_cutoff, ModelParams, PressureForm};
use crate::zbasis::{analyze, project_pn, ZBasis};

type C64 = Complex64;
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Completed,
    TstarReached,
    Diverged,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Completed => "completed",
            Status::TstarReached => "tstar_reached",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the pressure gradient enters the explicit part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressureMode {
    /// Per-wavenumber Lagrange multiplier keeping the discrete vertical
    /// mean fixed.
    #[default]
    Multiplier,
    /// The closed-form gradient of [`crate::model::pressure_gradient`].
    Formula,
}

/// Time-dependent forcing field `f(t)`.
pub type Forcing = Arc<dyn Fn(f64) -> Field + Send + Sync>;

#[derive(Clone)]
pub struct SolverOptions {
    /// `false` drops `R` entirely (linear decay runs).
    pub nonlinear: bool,
    pub pressure: PressureMode,
    /// Advance `theta` and stop at `T*`.
    pub track_theta: bool,
    pub lambda_override: Option<f64>,
    pub forcing: Option<Forcing>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            nonlinear: true,
            pressure: PressureMode::Multiplier,
            track_theta: true,
            lambda_override: None,
            forcing: None,
        }
    }
}

impl fmt::Debug for SolverOptions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverOptions")
            .field("nonlinear", &self.nonlinear)
            .field("pressure", &self.pressure)
            .field("track_theta", &self.track_theta)
            .field("lambda_override", &self.lambda_override)
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

/// Nodal tables of the basis used by every explicit evaluation.
#[derive(Debug)]
struct Tables {
    /// Rows: `e~_k`, its z-derivatives 1..3 and `int_0^z e~_k` (complex copies
    /// for the amplitude products).
    e: [Array2<C64>; 5],
    /// `(Nz, n)`: `w_j e~_k(z_j)`, so `coeffs . proj = <f, e~_k>`.
    proj: Array2<C64>,
    means: Vec<f64>,
    lambdas: Vec<f64>,
    /// Gram matrix of `e~''` in `L^2_z`.
    g2: Array2<f64>,
    active: Vec<bool>,
    profile: DyadicProfile,
}

impl Tables {
    fn new(basis: &ZBasis, n_cut: usize) -> Result<Self> {
        let grid = basis.grid();
        let cplx = |a: &Array2<f64>| a.mapv(|v| C64::new(v, 0.0));
        let d1 = basis.e_tilde_derivative(1)?;
        let d2 = basis.e_tilde_derivative(2)?;
        let d3 = basis.e_tilde_derivative(3)?;
        let int = basis.e_tilde().dot(&grid.antiderivative_matrix().t());
        let w = Array1::from(grid.z_weights().to_vec());
        let proj = (basis.e_tilde() * &w).reversed_axes();
        let g2 = (&d2 * &w).dot(&d2.t());
        let active = (0..grid.nx())
            .map(|r| !grid.is_nyquist(r) && grid.wavenumber(r).unsigned_abs() as usize <= n_cut)
            .collect();
        Ok(Self {
            e: [cplx(basis.e_tilde()), cplx(&d1), cplx(&d2), cplx(&d3), cplx(&int)],
            proj: cplx(&proj),
            means: basis.means(),
            lambdas: basis.lambdas().to_vec(),
            g2,
            active,
            profile: DyadicProfile::for_grid(grid),
        })
    }
}

/// Stored state of one observation.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub theta: f64,
    /// `(Nx, n)` amplitudes in FFT row order.
    pub amplitudes: Array2<C64>,
    /// `int_0^t D` by the midpoint rule of each step.
    pub dissipation: f64,
    pub status: Status,
}

#[derive(Debug, Clone)]
struct History {
    explicit: Array2<C64>,
    theta_rate: f64,
}

/// Galerkin state with its basis, parameters and multistep history.
#[derive(Debug, Clone)]
pub struct SolverState {
    grid: Arc<Grid>,
    basis: Arc<ZBasis>,
    params: ModelParams,
    options: SolverOptions,
    tables: Arc<Tables>,
    t: f64,
    step: usize,
    theta: f64,
    amplitudes: Array2<C64>,
    dissipation: f64,
    history: Option<History>,
    status: Status,
    tstar: Option<f64>,
}

/// Largest `|int_0^1 u0 dz|` accepted as compatible.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// `lambda = C3^2 (1 + C3 N)` with `N` the analytic `B^{3/2}` size of the
/// data and its vertical derivative.
pub fn lambda_rule(c3: f64, n32: f64) -> f64 {
    c3 * c3 * (1.0 + c3 * n32)
}

/// `||e^{a|D|} u||_{B^s} + ||e^{a|D|} d_z u||_{B^s}`.
pub fn analytic_size(u: &Field, a: f64, s: f64) -> Result<f64> {
    use crate::lp::{analytic_weight, besov_norm, AnalyticWeightParams};
    let profile = DyadicProfile::for_grid(u.grid());
    let w = AnalyticWeightParams { a, lambda: 1.0, theta: 0.0 };
    let uw = analytic_weight(u, w)?;
    let uzw = analytic_weight(&u.d_z(1)?, w)?;
    if !(uw.is_finite() && uzw.is_finite()) {
        return Err(Error::Numeric(format!(
            "initial data not analytic at band a = {a}"
        )));
    }
    Ok(besov_norm(&uw, s, &profile)?.value + besov_norm(&uzw, s, &profile)?.value)
}

/// Projects `u0` to amplitudes: `J_n`, then `P_n` and H^1_0 coordinates per
/// wavenumber, checks the compatibility condition when the nonlinearity is
/// active, and picks `lambda` by [`lambda_rule`] unless overridden.
pub fn init_state(
    grid: &Arc<Grid>,
    basis: &Arc<ZBasis>,
    params: ModelParams,
    u0: &Field,
    options: SolverOptions,
) -> Result<SolverState> {
    if !Arc::ptr_eq(grid, basis.grid()) && **grid != **basis.grid() {
        return param("basis built on a different grid");
    }
    u0.same_grid(&Field::zeros(grid))?;
    if params.n_modes != basis.n() {
        return param(format!(
            "n_modes = {} but the basis has {} modes",
            params.n_modes,
            basis.n()
        ));
    }
    if params.n_cut + 1 > grid.nx() / 2 {
        return param(format!(
            "n_cut must stay below Nyquist ({}), got {}",
            grid.nx() / 2,
            params.n_cut
        ));
    }
    if u0.conjugate_symmetry_defect() > 1e-12 * u0.max_abs().max(1.0) {
        return param("initial data must be real");
    }
    if !u0.is_finite() {
        return param("initial data has non-finite values");
    }
    let mean = u0.z_integral().to_values();
    let mean_max = mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if options.nonlinear && mean_max > COMPATIBILITY_TOL {
        return Err(Error::Precondition(format!(
            "compatibility condition int_0^1 u0 dz = 0 fails: max |int u0 dz| = {mean_max:e}"
        )));
    }
    let mut params = params;
    params.lambda = match options.lambda_override {
        Some(l) => l,
        None => lambda_rule(params.c3, analytic_size(u0, params.a, 1.5)?),
    };
    params.validate(grid)?;
    let tables = Arc::new(Tables::new(basis, params.n_cut)?);
    let uc = jn_cutoff(u0, params.n_cut)?;
    let n = basis.n();
    let mut amplitudes = Array2::zeros((grid.nx(), n));
    for (r, row) in uc.coeffs().rows().into_iter().enumerate() {
        if !tables.active[r] {
            continue;
        }
        let re: Vec<f64> = row.iter().map(|c| c.re).collect();
        let im: Vec<f64> = row.iter().map(|c| c.im).collect();
        let ar = analyze(&project_pn(&re, basis), basis);
        let ai = analyze(&project_pn(&im, basis), basis);
        let mut a: Vec<C64> = ar.iter().zip(&ai).map(|(x, y)| C64::new(*x, *y)).collect();
        if options.nonlinear {
            // remove the residual mean left by the projection
            let m = &tables.means;
            let mm: f64 = m.iter().map(|v| v * v).sum();
            let ma: C64 = m.iter().zip(&a).map(|(mk, ak)| ak * *mk).sum();
            for (ak, mk) in a.iter_mut().zip(m) {
                *ak -= ma * (*mk / mm);
            }
        }
        for (k, v) in a.into_iter().enumerate() {
            amplitudes[[r, k]] = v;
        }
    }
    Ok(SolverState {
        grid: grid.clone(),
        basis: basis.clone(),
        params,
        options,
        tables,
        t: 0.0,
        step: 0,
        theta: 0.0,
        amplitudes,
        dissipation: 0.0,
        history: None,
        status: Status::Running,
        tstar: None,
    })
}

/// The linear decay rates `lambda_1..lambda_n`.
pub fn linear_rates_oracle(basis: &ZBasis, n: usize) -> Result<Vec<f64>> {
    if n > basis.n() {
        return param(format!("{n} rates requested from {} modes", basis.n()));
    }
    Ok(basis.lambdas()[..n].to_vec())
}

impl SolverState {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn basis(&self) -> &Arc<ZBasis> {
        &self.basis
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// First time `theta >= a / lambda`, if reached.
    pub fn tstar(&self) -> Option<f64> {
        self.tstar
    }

    pub fn amplitudes(&self) -> &Array2<C64> {
        &self.amplitudes
    }

    /// Midpoint-rule `int_0^t D`.
    pub fn dissipation_integral(&self) -> f64 {
        self.dissipation
    }

    /// Marks a finished run; used by [`run`].
    pub fn complete(&mut self) {
        if self.status == Status::Running {
            self.status = Status::Completed;
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            t: self.t,
            theta: self.theta,
            amplitudes: self.amplitudes.clone(),
            dissipation: self.dissipation,
            status: self.status,
        }
    }

    /// `u^n = sum_k u_k e~_k` on the grid.
    pub fn field(&self) -> Field {
        amplitudes_to_field(&self.grid, &self.tables.e[0], &self.amplitudes)
    }

    pub fn field_of(&self, amplitudes: &Array2<C64>) -> Field {
        amplitudes_to_field(&self.grid, &self.tables.e[0], amplitudes)
    }

    /// `||u||^2 + alpha1^2 ||d_z u||^2 = Lx sum |u_k|^2`.
    pub fn energy_of(&self, a: &Array2<C64>) -> f64 {
        self.grid.lx() * a.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// `||d_z u||^2 + alpha1^2 ||d_z^2 u||^2 = Lx sum lambda_k |u_k|^2`.
    pub fn dissipation_of(&self, a: &Array2<C64>) -> f64 {
        let lam = &self.tables.lambdas;
        self.grid.lx()
            * a.rows()
                .into_iter()
                .map(|row| row.iter().zip(lam).map(|(c, l)| l * c.norm_sqr()).sum::<f64>())
                .sum::<f64>()
    }

    pub fn energy(&self) -> f64 {
        self.energy_of(&self.amplitudes)
    }

    pub fn dissipation_rate(&self) -> f64 {
        self.dissipation_of(&self.amplitudes)
    }

    /// `int_0^1 u dz` per wavenumber.
    pub fn vertical_mean_of(&self, a: &Array2<C64>) -> XLine {
        let m = &self.tables.means;
        let coeffs = a
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(m).map(|(c, mk)| c * *mk).sum())
            .collect();
        XLine::from_coeffs(&self.grid, coeffs).expect("Nx rows")
    }

    /// `max_x |int_0^1 u dz|`.
    pub fn vertical_mean_max_of(&self, a: &Array2<C64>) -> f64 {
        self.vertical_mean_of(a)
            .to_values()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `theta' = ||d_z^2 u_phi||_{B^{1/2}}` at band `a - lambda theta`.
    pub fn theta_rate_of(&self, a: &Array2<C64>, theta: f64) -> Result<f64> {
        let band = self.params.a - self.params.lambda * theta;
        if !(band > 0.0) {
            return Err(Error::BandExhausted(band));
        }
        let grid = &self.grid;
        let g2 = &self.tables.g2;
        let spectrum: Vec<f64> = a
            .rows()
            .into_iter()
            .enumerate()
            .map(|(r, row)| {
                let mut acc = 0.0;
                for (i, ai) in row.iter().enumerate() {
                    if *ai == ZERO {
                        continue;
                    }
                    for (j, aj) in row.iter().enumerate() {
                        acc += g2[[i, j]] * (ai.conj() * aj).re;
                    }
                }
                acc * (2.0 * band * grid.xi(r).abs()).exp()
            })
            .collect();
        let blocks = block_norms_from_spectrum(grid, &spectrum, &self.tables.profile);
        let rate: f64 = blocks
            .iter()
            .map(|&(q, n)| 2f64.powf(0.5 * q as f64) * n)
            .sum();
        if rate.is_finite() {
            Ok(rate)
        } else {
            Err(Error::Numeric("non-finite analytic band rate".into()))
        }
    }

    /// Projected explicit part `<J_n R(J_n u) + f(t), e~_k>` (pressure
    /// excluded in multiplier mode).
    pub fn explicit_part(&self, a: &Array2<C64>, t: f64) -> Result<Array2<C64>> {
        let grid = &self.grid;
        let tb = &self.tables;
        let mut out = Array2::zeros(a.raw_dim());
        if self.options.nonlinear {
            let a2 = self.params.alpha1 * self.params.alpha1;
            let coeff = |i: usize| a.dot(&tb.e[i]);
            let (u, uz, uzz, uzzz, uint) = (coeff(0), coeff(1), coeff(2), coeff(3), coeff(4));
            let ik: Vec<C64> = (0..grid.nx())
                .map(|r| if tb.active[r] { C64::new(0.0, grid.xi(r)) } else { ZERO })
                .collect();
            let dx = |c: &Array2<C64>| {
                let mut d = c.clone();
                for (mut row, s) in d.rows_mut().into_iter().zip(&ik) {
                    row.mapv_inplace(|v| v * s);
                }
                d
            };
            let vals = |c: Array2<C64>| -> Result<Array2<f64>> {
                Ok(Field::from_coeffs(grid, c)?.to_values())
            };
            let v = vals(-dx(&uint))?;
            let ux = vals(dx(&u))?;
            let uxz = vals(dx(&uz))?;
            let uxzz = vals(dx(&uzz))?;
            let uv = vals(u)?;
            let uzv = vals(uz)?;
            let uzzv = vals(uzz)?;
            let uzzzv = vals(uzzz)?;
            let mut prod = Array2::<f64>::zeros(uv.raw_dim());
            ndarray::Zip::from(&mut prod)
                .and(&uv)
                .and(&ux)
                .and(&uzzv)
                .and(&uxzz)
                .for_each(|p, &u, &ux, &uzz, &uxzz| *p = -u * ux + a2 * (u * uxzz + uzz * ux));
            ndarray::Zip::from(&mut prod)
                .and(&v)
                .and(&uzv)
                .and(&uzzzv)
                .and(&uxz)
                .for_each(|p, &v, &uz, &uzzz, &uxz| *p += -v * uz + a2 * (v * uzzz - uz * uxz));
            let mut tc = Field::from_values(grid, &prod)?.coeffs().clone();
            zero_inactive(&mut tc, &tb.active);
            out = tc.dot(&tb.proj);
            if self.options.pressure == PressureMode::Formula {
                let w = match self.params.pressure {
                    PressureForm::Consistent => 2.0,
                    PressureForm::SingleWeight => 1.0,
                };
                let mut sq = uv.mapv(|x| x * x);
                sq.zip_mut_with(&uzv, |s, &z| *s += w * a2 * z * z);
                let sqc = Field::from_values(grid, &sq)?;
                let integral = sqc.z_integral();
                let uzzz_c = a.dot(&tb.e[3]);
                let nz = grid.nz();
                for r in 0..grid.nx() {
                    if !tb.active[r] {
                        continue;
                    }
                    let (bottom, top) = (uzzz_c[[r, 0]], uzzz_c[[r, nz - 1]]);
                    let dp = (bottom - top) * a2 - ik[r] * integral.coeffs()[r];
                    for (k, m) in tb.means.iter().enumerate() {
                        out[[r, k]] -= dp * *m;
                    }
                }
            }
        }
        if let Some(f) = &self.options.forcing {
            let ff = f(t);
            ff.same_grid(&Field::zeros(grid))?;
            let mut fc = ff.coeffs().clone();
            zero_inactive(&mut fc, &tb.active);
            out = out + fc.dot(&tb.proj);
        }
        Ok(out)
    }

    /// `a' = c (b - h P m)` with `c_k = 1 / (1 + theta_imp lambda_k h)`,
    /// and `P` fixing `sum m_k a'_k = sum m_k a_k` in multiplier mode.
    fn implicit_solve(&self, a: &Array2<C64>, g: &Array2<C64>, h: f64, crank_nicolson: bool) -> Array2<C64> {
        let tb = &self.tables;
        let imp = if crank_nicolson { 0.5 } else { 1.0 };
        let exp_part = 1.0 - imp;
        let c: Vec<f64> = tb.lambdas.iter().map(|l| 1.0 / (1.0 + imp * l * h)).collect();
        let keep: Vec<f64> = tb.lambdas.iter().map(|l| 1.0 - exp_part * l * h).collect();
        let multiplier = self.options.nonlinear && self.options.pressure == PressureMode::Multiplier;
        let m = &tb.means;
        let mmc: f64 = m.iter().zip(&c).map(|(mk, ck)| mk * mk * ck).sum();
        let mut out = Array2::zeros(a.raw_dim());
        for r in 0..a.nrows() {
            if !tb.active[r] {
                continue;
            }
            let b: Vec<C64> = (0..a.ncols())
                .map(|k| a[[r, k]] * keep[k] + g[[r, k]] * h)
                .collect();
            let p = if multiplier {
                let target: C64 = (0..a.ncols()).map(|k| a[[r, k]] * m[k]).sum();
                let got: C64 = (0..a.ncols()).map(|k| b[k] * (m[k] * c[k])).sum();
                (got - target) / (h * mmc)
            } else {
                ZERO
            };
            for k in 0..a.ncols() {
                out[[r, k]] = (b[k] - p * (h * m[k])) * c[k];
            }
        }
        out
    }

    fn rate_or_zero(&self, a: &Array2<C64>, theta: f64) -> Result<f64> {
        if self.options.track_theta {
            self.theta_rate_of(a, theta)
        } else {
            Ok(0.0)
        }
    }

    /// One IMEX step. Non-finite results set [`Status::Diverged`] and keep
    /// the previous state; reaching `theta >= a/lambda` sets
    /// [`Status::TstarReached`].
    pub fn step(&mut self, dt: f64) -> Result<Status> {
        if self.status != Status::Running {
            return Err(Error::Precondition(format!(
                "step called on a {} state",
                self.status
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return param(format!("dt must be positive, got {dt}"));
        }
        let a = &self.amplitudes;
        let outcome = (|| -> Result<(Array2<C64>, f64, Array2<C64>, f64)> {
            let g0 = self.explicit_part(a, self.t)?;
            let r0 = self.rate_or_zero(a, self.theta)?;
            let (gstar, rstar) = match &self.history {
                Some(h) => (
                    &g0 * C64::new(1.5, 0.0) - &h.explicit * C64::new(0.5, 0.0),
                    1.5 * r0 - 0.5 * h.theta_rate,
                ),
                None => {
                    // midpoint bootstrap: half-step IMEX Euler, then evaluate
                    let ah = self.implicit_solve(a, &g0, 0.5 * dt, false);
                    let th = self.theta + 0.5 * dt * r0.max(0.0);
                    let gh = self.explicit_part(&ah, self.t + 0.5 * dt)?;
                    let rh = match self.rate_or_zero(&ah, th) {
                        Err(Error::BandExhausted(_)) => r0,
                        other => other?,
                    };
                    (gh, rh)
                }
            };
            let next = self.implicit_solve(a, &gstar, dt, true);
            let theta = self.theta + dt * rstar.max(0.0);
            Ok((next, theta, g0, r0))
        })();
        let (next, theta, g0, r0) = match outcome {
            Ok(v) => v,
            Err(Error::BandExhausted(_)) => {
                self.status = Status::TstarReached;
                self.tstar.get_or_insert(self.t);
                return Ok(self.status);
            }
            Err(Error::Numeric(_)) => {
                self.status = Status::Diverged;
                return Ok(self.status);
            }
            Err(e) => return Err(e),
        };
        if !(next.iter().all(|c| c.re.is_finite() && c.im.is_finite()) && theta.is_finite()) {
            self.status = Status::Diverged;
            return Ok(self.status);
        }
        let mid = (&next + &self.amplitudes) * C64::new(0.5, 0.0);
        self.dissipation += dt * self.dissipation_of(&mid);
        self.amplitudes = next;
        self.theta = theta;
        self.history = Some(History {
            explicit: g0,
            theta_rate: r0,
        });
        self.t += dt;
        self.step += 1;
        if self.options.track_theta && self.theta >= self.params.a / self.params.lambda {
            self.status = Status::TstarReached;
            self.tstar = Some(self.t);
        }
        Ok(self.status)
    }
}

fn zero_inactive(c: &mut Array2<C64>, active: &[bool]) {
    for (mut row, on) in c.axis_iter_mut(Axis(0)).zip(active) {
        if !on {
            row.fill(ZERO);
        }
    }
}

fn amplitudes_to_field(grid: &Arc<Grid>, e: &Array2<C64>, a: &Array2<C64>) -> Field {
    Field::from_coeffs(grid, a.dot(e)).expect("(Nx, Nz) coefficients")
}

/// Called on the observation stride during [`run`].
pub trait Observer {
    fn observe(&mut self, state: &SolverState) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every `snapshot_stride`-th state in the trajectory.
    pub snapshot_stride: usize,
    /// Call observers every `observer_stride` steps.
    pub observer_stride: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            snapshot_stride: 1,
            observer_stride: 1,
        }
    }
}

/// Stored snapshots of a run; the first is the initial state, the last the
/// final one.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

/// Steps until `t >= t_final` (fixed `dt`; the step count is
/// `ceil(t_final / dt)`) or until the status leaves `Running`. Observers and
/// snapshots see step 0, every stride, and the final state.
pub fn run(
    state: &mut SolverState,
    t_final: f64,
    dt: f64,
    observers: &mut [&mut dyn Observer],
    options: RunOptions,
) -> Result<Trajectory> {
    if state.status != Status::Running {
        return Err(Error::Precondition(format!(
            "run called on a {} state",
            state.status
        )));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return param(format!("T_final must be >= 0, got {t_final}"));
    }
    if !(dt > 0.0) {
        return param(format!("dt must be positive, got {dt}"));
    }
    if options.snapshot_stride == 0 || options.observer_stride == 0 {
        return param("strides must be >= 1");
    }
    let span = t_final - state.t;
    let steps = if span <= 0.0 {
        0
    } else {
        (span / dt - 1e-9).ceil().max(1.0) as usize
    };
    let mut snapshots = vec![state.snapshot()];
    for o in observers.iter_mut() {
        o.observe(state)?;
    }
    for i in 1..=steps {
        let status = state.step(dt)?;
        let done = status != Status::Running || i == steps;
        if done && status == Status::Running {
            state.complete();
        }
        if i % options.snapshot_stride == 0 || done {
            snapshots.push(state.snapshot());
        }
        if i % options.observer_stride == 0 || done {
            for o in observers.iter_mut() {
                o.observe(state)?;
            }
        }
        if done {
            break;
        }
    }
    if steps == 0 {
        state.complete();
    }
    Ok(Trajectory { snapshots })
}

/// A manufactured field `u*(t) = s(t) U` with the forcing that makes it an
/// exact solution: `f* = s' omega(U) - s d_z^2 omega(U) - s R_1(U) - s^2 R_2(U)`,
/// where `R_1` is the linear (wall-trace pressure) part of `R` and `R_2`
/// the quadratic part.
#[derive(Clone)]
pub struct Manufactured {
    pub profile: Field,
    omega: Field,
    diffusion: Field,
    r_lin: Field,
    r_quad: Field,
    amplitude: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
}

impl Manufactured {
    /// `amplitude(t) = (s(t), s'(t))`.
    pub fn new(
        profile: Field,
        params: &ModelParams,
        amplitude: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    ) -> Result<Self> {
        use crate::model::{omega, rhs_r};
        let w = omega(&profile, params.alpha1);
        let diffusion = w.d_z(2)?;
        let r1 = rhs_r(&profile, params)?;
        let r2 = rhs_r(&profile.scale(2.0), params)?;
        let r_quad = (&r2 - &r1.scale(2.0)).scale(0.5);
        let r_lin = &r1 - &r_quad;
        Ok(Self {
            profile,
            omega: w,
            diffusion,
            r_lin,
            r_quad,
            amplitude: Arc::new(amplitude),
        })
    }

    /// Analytic verification field used by the convergence checks:
    /// `U = X_c(x) phi_2(z) + X_s(x) phi_4(z) / 2` with exact clamped
    /// eigenfunctions `phi_j` (zero vertical mean by antisymmetry) and
    /// `X_c + i X_s = sum_{k>=1} r^k e^{ikx}`, which is analytic but has
    /// every wavenumber; `s(t) = e^-t (1 + sin(3t) / 2)`.
    pub fn reference(grid: &Arc<Grid>, params: &ModelParams, r: f64) -> Result<Self> {
        use crate::zbasis::{strong_form_eigenfunction, strong_form_eigenvalues};
        if !(0.0..1.0).contains(&r) {
            return param(format!("geometric ratio must lie in [0, 1), got {r}"));
        }
        let lams = strong_form_eigenvalues(params.alpha1, 4);
        let p2 = strong_form_eigenfunction(params.alpha1, lams[1]);
        let p4 = strong_form_eigenfunction(params.alpha1, lams[3]);
        let kx = 2.0 * std::f64::consts::PI / grid.lx();
        let profile = Field::from_fn(grid, |x, z| {
            let (sn, cs) = (kx * x).sin_cos();
            let d = 1.0 - 2.0 * r * cs + r * r;
            ((r * cs - r * r) * p2(z) + 0.5 * r * sn * p4(z)) / d
        });
        Self::new(profile, params, |t| {
            let (e, w) = ((-t).exp(), 1.0 + 0.5 * (3.0 * t).sin());
            (e * w, e * (1.5 * (3.0 * t).cos() - w))
        })
    }

    pub fn exact(&self, t: f64) -> Field {
        self.profile.scale((self.amplitude)(t).0)
    }

    /// `d/dt u*(t)`.
    pub fn exact_rate(&self, t: f64) -> Field {
        self.profile.scale((self.amplitude)(t).1)
    }

    pub fn forcing_at(&self, t: f64) -> Field {
        let (s, ds) = (self.amplitude)(t);
        let lin = &(&self.omega.scale(ds) - &self.diffusion.scale(s)) - &self.r_lin.scale(s);
        &lin - &self.r_quad.scale(s * s)
    }

    pub fn forcing(&self) -> Forcing {
        let me = self.clone();
        Arc::new(move |t| me.forcing_at(t))
    }
}

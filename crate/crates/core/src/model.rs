//! Constitutive operators of the hydrostatic alpha system: the filtered
//! variable, vertical velocity recovery, pressure gradient, the nonlinear
//! right side `R(u)` and the full PDE residual.

use num_complex::Complex64;

use crate::error::{param, Result};
use crate::field::{Field, Grid, Wall, XLine};

/// How the pressure gradient weights `d_x int (d_z u)^2 dz`.
///
/// Integrating the momentum equation over the strip gives the weight
/// `2 alpha1^2`; this is the only choice under which `d/dt int u dz = 0`
/// holds for the continuous system. The single-weight variant is kept for
/// comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressureForm {
    #[default]
    Consistent,
    SingleWeight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha1: f64,
    /// Initial analytic band.
    pub a: f64,
    /// Band consumption slope.
    pub lambda: f64,
    /// Rate of the `e^{R t}` time weight in the monitors.
    pub r_weight: f64,
    pub c_small: f64,
    pub c3: f64,
    pub n_modes: usize,
    /// Largest integer wavenumber kept by `J_n`.
    pub n_cut: usize,
    pub pressure: PressureForm,
}

impl ModelParams {
    /// Checks signs and the cutoff against the grid.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let positive = [
            ("alpha1", self.alpha1),
            ("a", self.a),
            ("lambda", self.lambda),
            ("c_small", self.c_small),
            ("C3", self.c3),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return param(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if !(self.r_weight >= 0.0 && self.r_weight.is_finite()) {
            return param(format!("R_weight must be >= 0, got {}", self.r_weight));
        }
        if self.n_modes == 0 {
            return param("n_modes must be positive");
        }
        if self.n_cut == 0 || self.n_cut > grid.nx() / 2 {
            return param(format!(
                "n_cut must lie in 1..={}, got {}",
                grid.nx() / 2,
                self.n_cut
            ));
        }
        Ok(())
    }
}

/// `omega = u - alpha1^2 d_z^2 u`.
pub fn omega(u: &Field, alpha1: f64) -> Field {
    u - &u.d_z(2).expect("second derivative").scale(alpha1 * alpha1)
}

/// `v = -int_0^z d_x u`.
pub fn vertical_velocity(u: &Field) -> Field {
    -&u.d_x().z_antiderivative()
}

/// `J_n`: keeps integer wavenumbers `|k| <= n_cut`.
pub fn jn_cutoff(f: &Field, n_cut: usize) -> Result<Field> {
    if n_cut > f.grid().nx() / 2 {
        return param(format!(
            "cutoff {n_cut} exceeds Nyquist {}",
            f.grid().nx() / 2
        ));
    }
    Ok(f.truncate(n_cut))
}

fn line_combine(parts: &[(f64, &XLine)]) -> Vec<Complex64> {
    let n = parts[0].1.coeffs().len();
    (0..n)
        .map(|r| parts.iter().map(|(c, l)| l.coeffs()[r] * *c).sum())
        .collect()
}

/// `d_x p` as a z-independent line:
/// `alpha1^2 (d_z^3 u|_0 - d_z^3 u|_1) - d_x int u^2 - w alpha1^2 d_x int (d_z u)^2`
/// with `w = 2` for [`PressureForm::Consistent`], `w = 1` otherwise. The
/// factors are cut off at `n_cut` before squaring and the result after.
pub fn pressure_gradient(u: &Field, params: &ModelParams) -> Result<XLine> {
    let a2 = params.alpha1 * params.alpha1;
    let uc = jn_cutoff(u, params.n_cut)?;
    let uz = uc.d_z(1)?;
    let bottom = uc.boundary_trace(3, Wall::Bottom)?;
    let top = uc.boundary_trace(3, Wall::Top)?;
    let sq = uc.product(&uc)?.truncate(params.n_cut).z_integral();
    let sqz = uz.product(&uz)?.truncate(params.n_cut).z_integral();
    let w = match params.pressure {
        PressureForm::Consistent => 2.0,
        PressureForm::SingleWeight => 1.0,
    };
    let grid = u.grid();
    let mut coeffs = line_combine(&[(a2, &bottom), (-a2, &top)]);
    for (r, c) in coeffs.iter_mut().enumerate() {
        let ik = if grid.is_nyquist(r) {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, grid.xi(r))
        };
        *c -= ik * (sq.coeffs()[r] + sqz.coeffs()[r] * (w * a2));
        if grid.wavenumber(r).unsigned_abs() as usize > params.n_cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    XLine::from_coeffs(grid, coeffs)
}

/// The transport part of `R(u)`, i.e. everything except `-d_x p`:
/// `-u u_x + a2 u u_xzz - v u_z + a2 v u_zzz - a2 u_z u_xz + a2 u_zz u_x`,
/// with every factor cut off at `n_cut` and the sum cut off again.
pub fn transport_terms(u: &Field, params: &ModelParams) -> Result<Field> {
    let a2 = params.alpha1 * params.alpha1;
    let uc = jn_cutoff(u, params.n_cut)?;
    let ux = uc.d_x();
    let uz = uc.d_z(1)?;
    let uzz = uc.d_z(2)?;
    let uzzz = uc.d_z(3)?;
    let uxz = ux.d_z(1)?;
    let uxzz = ux.d_z(2)?;
    let v = vertical_velocity(&uc);
    let values = |f: &Field| f.to_values();
    let (u_v, ux_v, uz_v, uzz_v, uzzz_v, uxz_v, uxzz_v, v_v) = (
        values(&uc),
        values(&ux),
        values(&uz),
        values(&uzz),
        values(&uzzz),
        values(&uxz),
        values(&uxzz),
        values(&v),
    );
    let mut out = ndarray::Array2::<f64>::zeros(u_v.raw_dim());
    ndarray::Zip::from(&mut out)
        .and(&u_v)
        .and(&ux_v)
        .and(&uzz_v)
        .and(&uxzz_v)
        .for_each(|o, &u, &ux, &uzz, &uxzz| {
            *o = -u * ux + a2 * u * uxzz + a2 * uzz * ux;
        });
    ndarray::Zip::from(&mut out)
        .and(&uz_v)
        .and(&uxz_v)
        .for_each(|o, &uz, &uxz| *o -= a2 * uz * uxz);
    ndarray::Zip::from(&mut out)
        .and(&v_v)
        .and(&uz_v)
        .and(&uzzz_v)
        .for_each(|o, &v, &uz, &uzzz| *o += -v * uz + a2 * v * uzzz);
    Ok(Field::from_values(u.grid(), &out)?.truncate(params.n_cut))
}

/// `R(u) = transport_terms(u) - d_x p(u)`.
pub fn rhs_r(u: &Field, params: &ModelParams) -> Result<Field> {
    let t = transport_terms(u, params)?;
    let p = pressure_gradient(u, params)?;
    Ok(&t - &p.extend_in_z())
}

/// `omega(u_t) - d_z^2 omega(u) - R(u) - forcing`.
pub fn pde_residual(
    u: &Field,
    u_t: &Field,
    forcing: Option<&Field>,
    params: &ModelParams,
) -> Result<Field> {
    u.same_grid(u_t)?;
    let w = omega(u, params.alpha1);
    let mut res = &(&omega(u_t, params.alpha1) - &w.d_z(2)?) - &rhs_r(u, params)?;
    if let Some(f) = forcing {
        u.same_grid(f)?;
        res = &res - f;
    }
    Ok(res)
}

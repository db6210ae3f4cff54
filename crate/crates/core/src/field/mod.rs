//! Scalar fields on the periodic strip and their spectral calculus.
//!
//! A [`Field`] stores, for every z node `j`, the x-Fourier coefficients of
//! the function on the line `z = z_j`. Coefficient rows follow FFT order
//! (see [`Grid::wavenumber`]) and use the `1/Nx` forward normalization, so
//! `cos(x)` has coefficients `1/2` at `k = +-1` and Parseval reads
//! `<f, f> = Lx * sum_k sum_j w_j |c_kj|^2`.

mod grid;
pub mod snapshot;

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rayon::prelude::*;

pub use grid::Grid;

use crate::error::{param, Error, Result};

/// Wall of the strip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    /// `z = 0`
    Bottom,
    /// `z = 1`
    Top,
}

/// Grids below this many samples are transformed serially.
const PARALLEL_THRESHOLD: usize = 1 << 14;

/// A scalar field stored as per-z-node horizontal Fourier coefficients.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    coeffs: Array2<Complex64>,
}

/// One complex value per x-wavenumber (FFT order), e.g. a wall trace or a
/// vertical integral.
#[derive(Debug, Clone)]
pub struct XLine {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl XLine {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.nx()],
        }
    }

    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.nx() {
            return param(format!(
                "x-line needs {} coefficients, got {}",
                grid.nx(),
                coeffs.len()
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed wavenumber `k` (zero if not represented).
    pub fn at(&self, k: i64) -> Complex64 {
        self.grid
            .row_of(k)
            .map_or(Complex64::new(0.0, 0.0), |r| self.coeffs[r])
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Synthesized real values on the x points.
    pub fn to_values(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.fft_inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// The same line extended constantly in z.
    pub fn extend_in_z(&self) -> Field {
        let mut f = Field::zeros(&self.grid);
        for (r, c) in self.coeffs.iter().enumerate() {
            f.coeffs.row_mut(r).fill(*c);
        }
        f
    }
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: Array2::zeros((grid.nx(), grid.nz())),
        }
    }

    /// Wraps a coefficient array of shape `(Nx, Nz)` in FFT row order.
    pub fn from_coeffs(grid: &Arc<Grid>, coeffs: Array2<Complex64>) -> Result<Self> {
        if coeffs.dim() != (grid.nx(), grid.nz()) {
            return param(format!(
                "coefficient array shape {:?} does not match grid ({}, {})",
                coeffs.dim(),
                grid.nx(),
                grid.nz()
            ));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Discrete Fourier analysis along x. `values` has shape `(Nz, Nx)`:
    /// row `j` holds the samples on `z = z_j`.
    pub fn from_values(grid: &Arc<Grid>, values: &Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.nz(), grid.nx()) {
            return param(format!(
                "value array shape {:?} does not match grid (Nz={}, Nx={})",
                values.dim(),
                grid.nz(),
                grid.nx()
            ));
        }
        let nx = grid.nx();
        let scale = 1.0 / nx as f64;
        let transform = |j: usize| {
            let mut buf: Vec<Complex64> = values
                .row(j)
                .iter()
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            grid.fft_forward(&mut buf);
            buf.iter_mut().for_each(|c| *c *= scale);
            buf
        };
        let rows: Vec<Vec<Complex64>> = if nx * grid.nz() >= PARALLEL_THRESHOLD {
            (0..grid.nz()).into_par_iter().map(transform).collect()
        } else {
            (0..grid.nz()).map(transform).collect()
        };
        let mut coeffs = Array2::zeros((nx, grid.nz()));
        for (j, row) in rows.into_iter().enumerate() {
            for (r, c) in row.into_iter().enumerate() {
                coeffs[[r, j]] = c;
            }
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Samples `f(x, z)` on the grid and transforms.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let xs = grid.x_points();
        let values = Array2::from_shape_fn((grid.nz(), grid.nx()), |(j, i)| {
            f(xs[i], grid.z_nodes()[j])
        });
        Self::from_values(grid, &values).expect("shape built from grid")
    }

    /// `g(z) * line(x)` given per-wavenumber coefficients of the x factor.
    pub fn separable(grid: &Arc<Grid>, line: &[(i64, Complex64)], g: impl Fn(f64) -> f64) -> Self {
        let mut f = Self::zeros(grid);
        let profile: Vec<f64> = grid.z_nodes().iter().map(|&z| g(z)).collect();
        for &(k, c) in line {
            if let Some(r) = grid.row_of(k) {
                for (j, p) in profile.iter().enumerate() {
                    f.coeffs[[r, j]] += c * p;
                }
            }
        }
        f
    }

    /// Synthesis: real values of shape `(Nz, Nx)`. For fields that are not
    /// conjugate symmetric only the real part is returned.
    pub fn to_values(&self) -> Array2<f64> {
        let grid = &self.grid;
        let nx = grid.nx();
        let transform = |j: usize| {
            let mut buf: Vec<Complex64> = self.coeffs.column(j).to_vec();
            grid.fft_inverse(&mut buf);
            buf.iter().map(|c| c.re).collect::<Vec<f64>>()
        };
        let rows: Vec<Vec<f64>> = if nx * grid.nz() >= PARALLEL_THRESHOLD {
            (0..grid.nz()).into_par_iter().map(transform).collect()
        } else {
            (0..grid.nz()).map(transform).collect()
        };
        let mut values = Array2::zeros((grid.nz(), nx));
        for (j, row) in rows.into_iter().enumerate() {
            values.row_mut(j).assign(&ndarray::Array1::from(row));
        }
        values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    /// Coefficient at signed wavenumber `k` and z node `j`.
    pub fn coeff(&self, k: i64, j: usize) -> Complex64 {
        self.grid
            .row_of(k)
            .map_or(Complex64::new(0.0, 0.0), |r| self.coeffs[[r, j]])
    }

    pub fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            param("fields live on different grids")
        }
    }

    /// Largest deviation from `c(-k, j) = conj(c(k, j))`; the Nyquist row
    /// must be real.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let nx = self.grid.nx();
        let mut worst: f64 = 0.0;
        for r in 0..nx {
            let mirror = (nx - r) % nx;
            for j in 0..self.grid.nz() {
                let d = (self.coeffs[[r, j]] - self.coeffs[[mirror, j]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            coeffs: self.coeffs.mapv(|c| c * s),
        }
    }

    fn map_rows(&self, mut f: impl FnMut(usize, Complex64) -> Complex64) -> Field {
        let mut coeffs = self.coeffs.clone();
        for (r, mut row) in coeffs.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|c| f(r, c));
        }
        Field {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Exact spectral x-derivative. The Nyquist row is zeroed so that real
    /// fields stay real.
    pub fn d_x(&self) -> Field {
        let grid = self.grid.clone();
        self.map_rows(|r, c| {
            if grid.is_nyquist(r) {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, grid.xi(r))
            }
        })
    }

    /// `m`-th z-derivative, `m` in `1..=4`, applied per wavenumber row.
    pub fn d_z(&self, m: usize) -> Result<Field> {
        let op = self.grid.dz_power(m)?;
        Ok(self.apply_z(op))
    }

    /// Applies a dense z operator (`Nz x Nz`) to every wavenumber row.
    pub fn apply_z(&self, op: &Array2<f64>) -> Field {
        let nz = self.grid.nz();
        let mut coeffs = Array2::zeros(self.coeffs.dim());
        for (row_in, mut row_out) in self.coeffs.rows().into_iter().zip(coeffs.rows_mut()) {
            for i in 0..nz {
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, c) in op.row(i).iter().zip(row_in.iter()) {
                    acc += c * *a;
                }
                row_out[i] = acc;
            }
        }
        Field {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Multiplies coefficient `k` by `symbol(2*pi*k/Lx)`.
    pub fn fourier_multiplier(&self, symbol: impl Fn(f64) -> Complex64) -> Result<Field> {
        let nx = self.grid.nx();
        let factors: Vec<Complex64> = (0..nx).map(|r| symbol(self.grid.xi(r))).collect();
        if let Some(bad) = factors.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Numeric(format!(
                "multiplier is not finite at wavenumber {}",
                self.grid.wavenumber(bad)
            )));
        }
        Ok(self.map_rows(|r, c| c * factors[r]))
    }

    /// Real multiplier, the common case (`|xi|`, dyadic bumps, weights).
    pub fn real_multiplier(&self, symbol: impl Fn(f64) -> f64) -> Result<Field> {
        self.fourier_multiplier(|xi| Complex64::new(symbol(xi), 0.0))
    }

    /// `int int f g dx dz` by x-Parseval and z Clenshaw-Curtis quadrature.
    pub fn l2_inner(&self, other: &Field) -> Result<f64> {
        self.same_grid(other)?;
        let w = self.grid.z_weights();
        let mut total = 0.0;
        for (a, b) in self.coeffs.rows().into_iter().zip(other.coeffs.rows()) {
            let mut row = 0.0;
            for ((x, y), wj) in a.iter().zip(b.iter()).zip(w) {
                row += wj * (x * y.conj()).re;
            }
            total += row;
        }
        Ok(self.grid.lx() * total)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_inner(self).expect("same grid").max(0.0).sqrt()
    }

    /// Per-wavenumber `sum_j w_j |c_kj|^2` (multiply by `Lx` for L2 energy).
    pub fn z_spectrum(&self) -> Vec<f64> {
        let w = self.grid.z_weights();
        self.coeffs
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(w).map(|(c, wj)| wj * c.norm_sqr()).sum())
            .collect()
    }

    /// `int_0^1 f dz` per wavenumber.
    pub fn z_integral(&self) -> XLine {
        let w = self.grid.z_weights();
        let coeffs = self
            .coeffs
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(w).map(|(c, wj)| c * *wj).sum())
            .collect();
        XLine {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// `F(x, z) = int_0^z f(x, s) ds` through Chebyshev coefficient-space
    /// integration; `F(., 0) = 0` exactly.
    pub fn z_antiderivative(&self) -> Field {
        self.apply_z(self.grid.antiderivative_matrix())
    }

    /// `m`-th z-derivative at a wall, `m` in `0..=3`.
    pub fn boundary_trace(&self, m: usize, wall: Wall) -> Result<XLine> {
        if m > 3 {
            return param(format!("boundary trace order must be in 0..=3, got {m}"));
        }
        let j = match wall {
            Wall::Bottom => 0,
            Wall::Top => self.grid.nz() - 1,
        };
        let coeffs = if m == 0 {
            self.coeffs.column(j).to_vec()
        } else {
            let op = self.grid.dz_power(m)?;
            self.coeffs
                .rows()
                .into_iter()
                .map(|row| row.iter().zip(op.row(j).iter()).map(|(c, a)| c * *a).sum())
                .collect()
        };
        Ok(XLine {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// Pointwise product formed in value space (no dealiasing).
    pub fn product(&self, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let a = self.to_values();
        let b = other.to_values();
        Field::from_values(&self.grid, &(a * b))
    }

    /// Zeroes every coefficient with `|k| > n_cut` (integer wavenumbers).
    pub fn truncate(&self, n_cut: usize) -> Field {
        let grid = self.grid.clone();
        self.map_rows(|r, c| {
            if grid.wavenumber(r).unsigned_abs() as usize > n_cut {
                Complex64::new(0.0, 0.0)
            } else {
                c
            }
        })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient difference, for tests.
    pub fn max_diff(&self, other: &Field) -> f64 {
        let mut worst: f64 = 0.0;
        Zip::from(&self.coeffs)
            .and(&other.coeffs)
            .for_each(|a, b| worst = worst.max((a - b).norm()));
        worst
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        Field {
            grid: self.grid.clone(),
            coeffs: &self.coeffs + &rhs.coeffs,
        }
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        Field {
            grid: self.grid.clone(),
            coeffs: &self.coeffs - &rhs.coeffs,
        }
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid(nx: usize, nz: usize) -> Arc<Grid> {
        Arc::new(Grid::with_default_period(nx, nz).unwrap())
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let g = grid(16, 9);
        let f = Field::from_fn(&g, |x, _| x.cos());
        for j in 0..9 {
            assert!((f.coeff(1, j) - 0.5).norm() < 1e-14);
            assert!((f.coeff(-1, j) - 0.5).norm() < 1e-14);
            for k in -7i64..=8 {
                if k.abs() != 1 {
                    assert!(f.coeff(k, j).norm() <= 1e-14);
                }
            }
        }
        assert!(f.conjugate_symmetry_defect() < 1e-13);
    }

    #[test]
    fn separable_mode_matches_direct_dft() {
        let g = grid(16, 12);
        let prof = |z: f64| (1.0 + z) * (3.0 * z).sin();
        let f = Field::from_fn(&g, |x, z| (3.0 * x).cos() * prof(z));
        // direct O(N^2) DFT on each z line
        let xs = g.x_points();
        for j in 0..12 {
            let z = g.z_nodes()[j];
            for k in [-3i64, 3] {
                let mut acc = Complex64::new(0.0, 0.0);
                for &x in &xs {
                    acc += (3.0 * x).cos() * prof(z) * Complex64::from_polar(1.0, -(k as f64) * x);
                }
                acc /= 16.0;
                assert!((acc - f.coeff(k, j)).norm() < 1e-14);
                assert!((f.coeff(k, j).re - prof(z) / 2.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn round_trip_and_shape_errors() {
        let g = grid(32, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = Array2::from_shape_fn((10, 32), |_| rng.gen_range(-1.0..1.0));
        let back = Field::from_values(&g, &v).unwrap().to_values();
        let err = (&back - &v).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!(err < 1e-12 * v.iter().fold(0.0f64, |m, d| m.max(d.abs())));
        assert!(Field::from_values(&g, &Array2::zeros((32, 10))).is_err());
    }

    #[test]
    fn x_derivatives() {
        let g = grid(16, 8);
        let f = Field::from_fn(&g, |x, _| x.sin());
        assert!(f.d_x().max_diff(&Field::from_fn(&g, |x, _| x.cos())) < 1e-14);
        let f = Field::from_fn(&g, |x, _| (3.0 * x).cos());
        let expected = Field::from_fn(&g, |x, _| -3.0 * (3.0 * x).sin());
        assert!(f.d_x().max_diff(&expected) < 1e-13);
        let c = Field::from_fn(&g, |_, _| 2.5);
        assert!(c.d_x().max_abs() == 0.0);
    }

    #[test]
    fn z_derivatives() {
        let g = grid(8, 32);
        let f = Field::from_fn(&g, |_, z| z * z * (1.0 - z) * (1.0 - z));
        let d2 = f.d_z(2).unwrap();
        let exact = Field::from_fn(&g, |_, z| 2.0 - 12.0 * z + 12.0 * z * z);
        assert!(d2.max_diff(&exact) < 1e-8);
        let twice = f.d_z(1).unwrap().d_z(1).unwrap();
        assert!(twice.max_diff(&d2) < 1e-8);
        let c = Field::from_fn(&g, |_, _| 1.0);
        assert!(c.d_z(1).unwrap().max_abs() < 1e-11);
        assert!(f.d_z(0).is_err());
        assert!(f.d_z(5).is_err());
    }

    #[test]
    fn multipliers() {
        let g = grid(16, 8);
        let f = Field::from_fn(&g, |x, _| (2.0 * x).cos());
        let id = f.fourier_multiplier(|_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(id.max_diff(&f), 0.0);
        let abs = f.real_multiplier(f64::abs).unwrap();
        assert!(abs.max_diff(&f.scale(2.0)) < 1e-14);
        let f4 = Field::from_fn(&g, |x, _| (4.0 * x).cos());
        let half = f4.real_multiplier(|xi| xi.abs().sqrt()).unwrap();
        assert!(half.max_diff(&f4.scale(2.0)) < 1e-14);
        assert!(f.real_multiplier(|xi| 1.0 / xi).is_err());
    }

    #[test]
    fn inner_products() {
        let g = grid(16, 24);
        let c = Field::from_fn(&g, |x, _| x.cos());
        assert!((c.l2_inner(&c).unwrap() - PI).abs() < 1e-13);
        assert_eq!(c.l2_inner(&Field::zeros(&g)).unwrap(), 0.0);
        let p = Field::from_fn(&g, |_, z| z * (1.0 - z));
        let one = Field::from_fn(&g, |_, _| 1.0);
        assert!((p.l2_inner(&one).unwrap() - 2.0 * PI / 6.0).abs() < 1e-12);
        let other = Arc::new(Grid::with_default_period(16, 25).unwrap());
        assert!(c.l2_inner(&Field::zeros(&other)).is_err());
    }

    #[test]
    fn vertical_integrals() {
        let g = grid(16, 32);
        let one = Field::from_fn(&g, |_, _| 1.0);
        let line = one.z_integral();
        assert!((line.at(0) - 1.0).norm() < 1e-14);
        assert!(line.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
        let s = Field::from_fn(&g, |x, z| x.cos() * (PI * z).sin());
        assert!((s.z_integral().at(1).re - 1.0 / PI).abs() < 1e-10);
        let odd = Field::from_fn(&g, |_, z| z - 0.5);
        assert!(odd.z_integral().max_abs() < 1e-12);
    }

    #[test]
    fn antiderivatives() {
        let g = grid(8, 32);
        let one = Field::from_fn(&g, |_, _| 1.0);
        assert!(one.z_antiderivative().max_diff(&Field::from_fn(&g, |_, z| z)) < 1e-13);
        let f = Field::from_fn(&g, |_, z| (PI * z).cos());
        let exact = Field::from_fn(&g, |_, z| (PI * z).sin() / PI);
        let anti = f.z_antiderivative();
        assert!(anti.max_diff(&exact) < 1e-9);
        assert!(anti.d_z(1).unwrap().max_diff(&f) < 1e-8);
        assert_eq!(anti.boundary_trace(0, Wall::Bottom).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn wall_traces() {
        let g = grid(8, 32);
        let f = Field::from_fn(&g, |_, z| z * z * (1.0 - z) * (1.0 - z));
        let b = f.boundary_trace(3, Wall::Bottom).unwrap();
        let t = f.boundary_trace(3, Wall::Top).unwrap();
        assert!((b.at(0).re + 12.0).abs() < 1e-7);
        assert!((t.at(0).re - 12.0).abs() < 1e-7);
        let c = Field::from_fn(&g, |_, _| 3.0);
        for wall in [Wall::Bottom, Wall::Top] {
            assert!(c.boundary_trace(1, wall).unwrap().max_abs() < 1e-11);
        }
        assert!(f.boundary_trace(4, Wall::Top).is_err());
    }

    #[test]
    fn parseval() {
        let g = grid(16, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = Array2::from_shape_fn((12, 16), |_| rng.gen_range(-1.0..1.0));
        let f = Field::from_values(&g, &v).unwrap();
        let direct = f.l2_inner(&f).unwrap();
        let spec: f64 = g.lx() * f.z_spectrum().iter().sum::<f64>();
        assert!((direct - spec).abs() <= 1e-12 * direct);
        // value-space trapezoid in x agrees too
        let vx: f64 = (0..12)
            .map(|j| g.z_weights()[j] * v.row(j).iter().map(|a| a * a).sum::<f64>())
            .sum::<f64>()
            * g.lx()
            / 16.0;
        assert!((direct - vx).abs() <= 1e-12 * direct);
    }

    #[test]
    fn product_rule_for_band_limited_fields() {
        let g = grid(32, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut band_limited = || {
            // |k| < Nx/4 keeps every product strictly below the Nyquist row
            let mut f = Field::zeros(&g);
            for k in 0..8i64 {
                for j in 0..10 {
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    let c = if k == 0 { Complex64::new(c.re, 0.0) } else { c };
                    f.coeffs[[g.row_of(k).unwrap(), j]] = c;
                    if k > 0 {
                        f.coeffs[[g.row_of(-k).unwrap(), j]] = c.conj();
                    }
                }
            }
            f
        };
        let a = band_limited();
        let b = band_limited();
        let lhs = a.product(&b).unwrap().d_x();
        let rhs = &a.product(&b.d_x()).unwrap() + &b.product(&a.d_x()).unwrap();
        assert!(lhs.max_diff(&rhs) < 1e-8);
        // d_x and multipliers commute up to the last bit of the products
        let m = |xi: f64| (-(xi * xi) / 50.0).exp();
        let l = a.d_x().real_multiplier(m).unwrap();
        let r = a.real_multiplier(m).unwrap().d_x();
        assert!(l.max_diff(&r) <= 1e-15 * l.max_abs());
    }
}

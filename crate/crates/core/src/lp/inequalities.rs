//! Measured constants for the Bernstein and clamped Poincaré inequalities.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::field::{Field, Grid};
use crate::zbasis::{clamped_trial_space, generalized_eigen, l2_inner};

/// Wavenumbers `k != 0` below Nyquist with `lo <= |xi_k| <= hi`.
fn wavenumbers_in(grid: &Grid, lo: f64, hi: f64) -> Vec<i64> {
    let step = 2.0 * std::f64::consts::PI / grid.lx();
    (1..grid.nx() as i64 / 2)
        .filter(|&k| {
            let xi = step * k as f64;
            xi >= lo && xi <= hi
        })
        .collect()
}

fn random_on(grid: &Arc<Grid>, ks: &[i64], mut sample: impl FnMut() -> f64) -> Result<Field> {
    if ks.is_empty() {
        return param("no resolved wavenumber in the requested band");
    }
    let mut f = Field::zeros(grid);
    for &k in ks {
        for j in 0..grid.nz() {
            let c = if k == 0 {
                Complex64::new(sample(), 0.0)
            } else {
                Complex64::new(sample(), sample())
            };
            f.coeffs_mut()[[grid.row_of(k).unwrap(), j]] = c;
            if k != 0 {
                f.coeffs_mut()[[grid.row_of(-k).unwrap(), j]] = c.conj();
            }
        }
    }
    Ok(f)
}

/// Random field with spectrum in the ring `2^q [3/4, 8/3]`; `sample` should
/// return independent draws (e.g. uniform on `[-1, 1]`).
pub fn ring_field(grid: &Arc<Grid>, q: i32, sample: impl FnMut() -> f64) -> Result<Field> {
    let s = 2f64.powi(q);
    random_on(grid, &wavenumbers_in(grid, 0.75 * s, 8.0 / 3.0 * s), sample)
}

/// Random field with spectrum in the ball `|xi| <= (4/3) 2^q`, mean included.
pub fn ball_field(grid: &Arc<Grid>, q: i32, sample: impl FnMut() -> f64) -> Result<Field> {
    let mut ks = vec![0];
    ks.extend(wavenumbers_in(grid, 0.0, 4.0 / 3.0 * 2f64.powi(q)));
    random_on(grid, &ks, sample)
}

/// `||partial_x f|| / (2^q ||f||)`.
pub fn bernstein_ratio(f: &Field, q: i32) -> Result<f64> {
    let n = f.l2_norm();
    if n == 0.0 {
        return Err(Error::Numeric("Bernstein ratio of a zero field".into()));
    }
    Ok(f.d_x().l2_norm() / (2f64.powi(q) * n))
}

/// Measured Bernstein constants for one dyadic block.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinRow {
    pub q: i32,
    pub samples: usize,
    /// Extremes of `||partial_x f|| / (2^q ||f||)` over ring-supported fields.
    pub ring_min: f64,
    pub ring_max: f64,
    /// Smallest `C` with `C^-1 <= ratio <= C` over the ring samples.
    pub ring_constant: f64,
    /// Largest ratio over ball-supported fields.
    pub ball_constant: f64,
}

pub fn bernstein_row(
    grid: &Arc<Grid>,
    q: i32,
    samples: usize,
    mut sample: impl FnMut() -> f64,
) -> Result<BernsteinRow> {
    if samples == 0 {
        return param("need at least one sample");
    }
    let (mut lo, mut hi, mut ball) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let r = bernstein_ratio(&ring_field(grid, q, &mut sample)?, q)?;
        lo = lo.min(r);
        hi = hi.max(r);
        ball = ball.max(bernstein_ratio(&ball_field(grid, q, &mut sample)?, q)?);
    }
    Ok(BernsteinRow {
        q,
        samples,
        ring_min: lo,
        ring_max: hi,
        ring_constant: hi.max(1.0 / lo),
        ball_constant: ball,
    })
}

/// Constants `C` in `||u||_inf <= C ||u'||`, `||u|| <= C ||u'||` and
/// `||u'|| <= C ||u''||` for profiles clamped at both walls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareConstants {
    pub linf_by_dz: f64,
    pub l2_by_dz: f64,
    pub dz_by_dzz: f64,
}

/// Ratios of one clamped profile.
pub fn poincare_ratios(grid: &Grid, u: &[f64]) -> Result<PoincareConstants> {
    if u.len() != grid.nz() {
        return param("profile length differs from Nz");
    }
    let d1 = grid.apply_z(grid.dz(), u);
    let d2 = grid.apply_z(grid.dz_power(2)?, u);
    let n0 = l2_inner(grid, u, u).sqrt();
    let n1 = l2_inner(grid, &d1, &d1).sqrt();
    let n2 = l2_inner(grid, &d2, &d2).sqrt();
    if n2 == 0.0 || n1 == 0.0 {
        return Err(Error::Numeric("Poincare ratio of a zero profile".into()));
    }
    let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PoincareConstants {
        linf_by_dz: sup / n1,
        l2_by_dz: n0 / n1,
        dz_by_dzz: n1 / n2,
    })
}

fn quadrature_gram(grid: &Grid, cols: &ndarray::Array2<f64>, m: usize) -> Result<DMatrix<f64>> {
    let d = if m == 0 {
        cols.clone()
    } else {
        grid.dz_power(m)?.dot(cols)
    };
    let w = grid.z_weights();
    let dim = cols.ncols();
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        (0..grid.nz()).map(|r| w[r] * d[[r, i]] * d[[r, j]]).sum()
    }))
}

/// Sharp constants over the whole discrete clamped space (dimension `Nz - 4`)
/// with the grid quadrature norms.
pub fn sharp_poincare_constants(grid: &Grid) -> Result<PoincareConstants> {
    let cols = clamped_trial_space(grid, grid.nz() - 4)?;
    let g0 = quadrature_gram(grid, &cols, 0)?;
    let g1 = quadrature_gram(grid, &cols, 1)?;
    let g2 = quadrature_gram(grid, &cols, 2)?;
    let (mu01, _) = generalized_eigen(&g1, &g0)?;
    let (mu12, _) = generalized_eigen(&g2, &g1)?;
    // sup_u u(z_j)^2 / <G1 c, c> = phi_j^T G1^-1 phi_j
    let chol = g1
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("clamped Gram matrix is not positive definite".into()))?;
    let mut linf2 = 0.0f64;
    for j in 0..grid.nz() {
        let phi = nalgebra::DVector::from_iterator(cols.ncols(), cols.row(j).iter().copied());
        linf2 = linf2.max(phi.dot(&chol.solve(&phi)));
    }
    Ok(PoincareConstants {
        linf_by_dz: linf2.sqrt(),
        l2_by_dz: 1.0 / mu01[0].sqrt(),
        dz_by_dzz: 1.0 / mu12[0].sqrt(),
    })
}

/// Random clamped profile: trial-space combination with coefficients
/// `sample() / (m + 1)`.
pub fn clamped_profile(grid: &Grid, mut sample: impl FnMut() -> f64) -> Result<Vec<f64>> {
    let cols = clamped_trial_space(grid, grid.nz() - 4)?;
    let c = ndarray::Array1::from_iter((0..cols.ncols()).map(|m| sample() / (m as f64 + 1.0)));
    Ok(cols.dot(&c).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn bernstein_constants() {
        let g = Arc::new(Grid::with_default_period(512, 8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for q in 0..=6 {
            let row = bernstein_row(&g, q, 20, || rng.gen_range(-1.0..1.0)).unwrap();
            assert!(row.ring_min >= 0.75 - 1e-12 && row.ring_max <= 8.0 / 3.0 + 1e-12);
            assert!(row.ring_constant <= 3.0);
            assert!(row.ball_constant <= 4.0 / 3.0 + 1e-12);
        }
        // nothing resolved in ring 2^9 on this grid
        assert!(ring_field(&g, 9, || 1.0).is_err());
    }

    #[test]
    fn single_mode_ratio() {
        let g = Arc::new(Grid::with_default_period(32, 8).unwrap());
        let f = Field::from_fn(&g, |x, z| (3.0 * x).sin() * z);
        assert!((bernstein_ratio(&f, 1).unwrap() - 1.5).abs() < 1e-13);
    }

    #[test]
    fn poincare_constants() {
        let g = Grid::with_default_period(8, 32).unwrap();
        let sharp = sharp_poincare_constants(&g).unwrap();
        // continuum values: 1/pi (Dirichlet infimum, approached but not
        // attained by clamped profiles), 1/(2 pi) (clamped buckling), 1/2
        // (pointwise bound at the midpoint); the quadrature norms may land a
        // little on either side
        assert!((sharp.l2_by_dz * PI - 1.0).abs() < 0.01);
        assert!((sharp.dz_by_dzz - 0.5 / PI).abs() < 1e-6);
        assert!(sharp.linf_by_dz < 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u = clamped_profile(&g, || rng.gen_range(-1.0..1.0)).unwrap();
            let r = poincare_ratios(&g, &u).unwrap();
            assert!(r.l2_by_dz <= sharp.l2_by_dz * (1.0 + 1e-10));
            assert!(r.dz_by_dzz <= sharp.dz_by_dzz * (1.0 + 1e-10));
            assert!(r.linf_by_dz <= sharp.linf_by_dz * (1.0 + 1e-10));
        }
    }
}

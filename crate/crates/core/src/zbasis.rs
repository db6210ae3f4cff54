//! Clamped vertical basis: H^2_0 / H^1_0 generalized eigenfunctions, their
//! L^2-orthonormal companion, and the projections of the Galerkin scheme.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{param, Error, Result};
use crate::field::Grid;

/// `int f g dz` by the grid quadrature.
fn l2(grid: &Grid, f: ArrayView1<f64>, g: ArrayView1<f64>) -> f64 {
    grid.z_weights()
        .iter()
        .zip(f.iter().zip(g.iter()))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

fn deriv(grid: &Grid, f: &[f64], m: usize) -> Vec<f64> {
    let op = grid.dz_power(m).expect("m in 1..=4");
    grid.apply_z(op, f)
}

pub fn l2_inner(grid: &Grid, f: &[f64], g: &[f64]) -> f64 {
    l2(grid, ArrayView1::from(f), ArrayView1::from(g))
}

/// `alpha1^2 int f' g' + int f g`.
pub fn h10_inner(grid: &Grid, f: &[f64], g: &[f64], alpha1: f64) -> f64 {
    let (fd, gd) = (deriv(grid, f, 1), deriv(grid, g, 1));
    alpha1 * alpha1 * l2_inner(grid, &fd, &gd) + l2_inner(grid, f, g)
}

/// `alpha1^2 int f'' g'' + int f' g'`.
pub fn h20_inner(grid: &Grid, f: &[f64], g: &[f64], alpha1: f64) -> f64 {
    let (f1, g1) = (deriv(grid, f, 1), deriv(grid, g, 1));
    let (f2, g2) = (deriv(grid, f, 2), deriv(grid, g, 2));
    alpha1 * alpha1 * l2_inner(grid, &f2, &g2) + l2_inner(grid, &f1, &g1)
}

/// Nodal values of `z^2 (1-z)^2 T_m(2z - 1)`, `m < dim`, as columns.
/// Every column vanishes with its first derivative at both walls.
pub fn clamped_trial_space(grid: &Grid, dim: usize) -> Result<Array2<f64>> {
    if dim == 0 || dim + 4 > grid.nz() {
        return param(format!(
            "clamped trial space of dimension {dim} needs Nz >= {}",
            dim + 4
        ));
    }
    let nz = grid.nz();
    let mut out = Array2::zeros((nz, dim));
    for (j, &z) in grid.z_nodes().iter().enumerate() {
        let bubble = z * z * (1.0 - z) * (1.0 - z);
        let y = 2.0 * z - 1.0;
        let (mut t0, mut t1) = (1.0, y);
        for m in 0..dim {
            let t = if m == 0 { t0 } else { t1 };
            out[[j, m]] = bubble * t;
            if m >= 1 {
                let t2 = 2.0 * y * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
    }
    Ok(out)
}

/// Quadrature Gram matrix `int (D^m phi_i)(D^m phi_j)` of the columns.
fn gram(grid: &Grid, cols: &Array2<f64>, m: usize) -> DMatrix<f64> {
    let d = if m == 0 {
        cols.clone()
    } else {
        grid.dz_power(m).expect("m in 1..=4").dot(cols)
    };
    let dim = cols.ncols();
    let mut g = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = l2(grid, d.column(i), d.column(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Ascending eigenpairs of `A x = mu B x`, eigenvectors B-orthonormal.
pub(crate) fn generalized_eigen(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("trial-space Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let mut c = &linv * a * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = linv.transpose() * &eig.eigenvectors;
    let vecs = DMatrix::from_fn(back.nrows(), order.len(), |r, c| back[(r, order[c])]);
    Ok((vals, vecs))
}

/// Clamped vertical basis with eigenvalues and L^2-orthonormal companion.
#[derive(Debug, Clone)]
pub struct ZBasis {
    grid: Arc<Grid>,
    alpha1: f64,
    lambdas: Vec<f64>,
    /// Row `k` holds the nodal values of `e~_k`.
    e_tilde: Array2<f64>,
    e_orth: Array2<f64>,
    warnings: Vec<String>,
}

impl ZBasis {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn e_tilde(&self) -> &Array2<f64> {
        &self.e_tilde
    }

    pub fn e_orth(&self) -> &Array2<f64> {
        &self.e_orth
    }

    /// Near-degenerate eigenvalue pairs found while building.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Row `k`: `d^m/dz^m e~_k` at the nodes (`m = 0` returns `e~` itself).
    pub fn e_tilde_derivative(&self, m: usize) -> Result<Array2<f64>> {
        if m == 0 {
            return Ok(self.e_tilde.clone());
        }
        let op = self.grid.dz_power(m)?;
        Ok(self.e_tilde.dot(&op.t()))
    }

    /// `int_0^1 e~_k dz` for every mode.
    pub fn means(&self) -> Vec<f64> {
        self.e_tilde
            .rows()
            .into_iter()
            .map(|r| r.dot(&ArrayView1::from(self.grid.z_weights())))
            .collect()
    }
}

/// The `n` lowest modes of `<e~, v>_{H^2_0} = lambda <e~, v>_{H^1_0}` over a
/// clamped polynomial trial space of dimension `min(n + 8, Nz - 4)`.
pub fn build_basis(grid: &Arc<Grid>, n: usize, alpha1: f64) -> Result<ZBasis> {
    if !(alpha1 > 0.0 && alpha1.is_finite()) {
        return param(format!("alpha1 must be positive, got {alpha1}"));
    }
    if n == 0 || n + 6 > grid.nz() {
        return param(format!(
            "mode count {n} not resolvable with Nz = {} (need 1 <= n <= Nz - 6)",
            grid.nz()
        ));
    }
    let dim = (n + 8).min(grid.nz() - 4);
    let cols = clamped_trial_space(grid, dim)?;
    let (g0, g1, g2) = (gram(grid, &cols, 0), gram(grid, &cols, 1), gram(grid, &cols, 2));
    let a2 = alpha1 * alpha1;
    let h2 = &g2 * a2 + &g1;
    let h1 = &g1 * a2 + &g0;
    let (vals, vecs) = generalized_eigen(&h2, &h1)?;
    if vals.iter().take(n).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Numeric("nonpositive generalized eigenvalue".into()));
    }
    let nz = grid.nz();
    let mut e_tilde = Array2::zeros((n, nz));
    for k in 0..n {
        let coeffs = Array1::from_iter(vecs.column(k).iter().copied());
        let mut prof = cols.dot(&coeffs);
        let peak = prof.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let first = prof
            .iter()
            .skip(1)
            .take(nz - 2)
            .find(|v| v.abs() > 1e-8 * peak)
            .copied()
            .unwrap_or(1.0);
        if first < 0.0 {
            prof.mapv_inplace(|v| -v);
        }
        e_tilde.row_mut(k).assign(&prof);
    }
    let lambdas: Vec<f64> = vals[..n].to_vec();
    let warnings = lambdas
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] <= 1e-8 * w[1].abs())
        .map(|(k, w)| format!("near-degenerate eigenvalues lambda_{} = {} and lambda_{} = {}", k + 1, w[0], k + 2, w[1]))
        .collect();
    let mut basis = ZBasis {
        grid: grid.clone(),
        alpha1,
        lambdas,
        e_orth: e_tilde.clone(),
        e_tilde,
        warnings,
    };
    gram_schmidt_l2(&mut basis)?;
    Ok(basis)
}

/// Modified Gram-Schmidt (two passes) of `e~` in `L^2_z`, into `e_orth`.
pub fn gram_schmidt_l2(basis: &mut ZBasis) -> Result<()> {
    let grid = basis.grid.clone();
    let mut q = basis.e_tilde.clone();
    for k in 0..q.nrows() {
        let start = l2(&grid, q.row(k), q.row(k)).sqrt();
        for _pass in 0..2 {
            for j in 0..k {
                let c = l2(&grid, q.row(j), q.row(k));
                let qj = q.row(j).to_owned();
                q.row_mut(k).scaled_add(-c, &qj);
            }
        }
        let norm = l2(&grid, q.row(k), q.row(k)).sqrt();
        if !(norm > 1e-12 * start.max(f64::MIN_POSITIVE)) {
            return Err(Error::Numeric(format!(
                "rank deficiency in Gram-Schmidt at mode {}",
                k + 1
            )));
        }
        q.row_mut(k).mapv_inplace(|v| v / norm);
    }
    basis.e_orth = q;
    Ok(())
}

/// `P_n f = sum_k <f, e_k> e_k`.
pub fn project_pn(f: &[f64], basis: &ZBasis) -> Vec<f64> {
    let grid = &basis.grid;
    let mut out = Array1::zeros(grid.nz());
    for row in basis.e_orth.rows() {
        let c = l2(grid, ArrayView1::from(f), row);
        out.scaled_add(c, &row);
    }
    out.to_vec()
}

/// `<f, e~_k>_{H^1_0}` for every mode.
pub fn analyze(f: &[f64], basis: &ZBasis) -> Vec<f64> {
    basis
        .e_tilde
        .rows()
        .into_iter()
        .map(|r| h10_inner(&basis.grid, f, r.as_slice().expect("contiguous"), basis.alpha1))
        .collect()
}

/// `sum_k a_k e~_k`.
pub fn synthesize(amplitudes: &[f64], basis: &ZBasis) -> Result<Vec<f64>> {
    if amplitudes.len() != basis.n() {
        return param(format!(
            "{} amplitudes for a basis of {} modes",
            amplitudes.len(),
            basis.n()
        ));
    }
    Ok(ArrayView1::from(amplitudes).dot(&basis.e_tilde).to_vec())
}

/// Characteristic determinant of the strong-form clamped eigenproblem
/// `alpha1^2 f'''' - f'' = lambda (f - alpha1^2 f'')` as a function of
/// `s = sqrt(lambda)`; solutions are combinations of `cosh(z/alpha1)`,
/// `sinh(z/alpha1)`, `cos(s z)` and `sin(s z)`.
pub fn clamped_characteristic(s: f64, alpha1: f64) -> f64 {
    let b = 1.0 / alpha1;
    let (ch, sh) = (b.cosh(), b.sinh());
    let (c, sn) = (s.cos(), s.sin());
    b * (ch - c) * (ch - c) - (sh - b / s * sn) * (b * sh + s * sn)
}

/// The `count` lowest strong-form eigenvalues: sign-change scan in `s` from
/// `pi`, then bisection. Independent of any quadrature.
pub fn strong_form_eigenvalues(alpha1: f64, count: usize) -> Vec<f64> {
    let f = |s| clamped_characteristic(s, alpha1);
    let step = 1e-3;
    let mut out = Vec::with_capacity(count);
    let mut lo = std::f64::consts::PI + 1e-9;
    while out.len() < count {
        let hi = lo + step;
        if f(lo).signum() != f(hi).signum() {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if f(m).signum() == f(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            let s = 0.5 * (a + b);
            out.push(s * s);
        }
        lo = hi;
    }
    out
}

/// Exact eigenfunction for a strong-form eigenvalue, scaled to unit maximum
/// with a positive first lobe (the sign convention of [`build_basis`]).
pub fn strong_form_eigenfunction(alpha1: f64, lambda: f64) -> impl Fn(f64) -> f64 + Clone + Send + Sync {
    let b = 1.0 / alpha1;
    let s = lambda.sqrt();
    let (ch, sh) = (b.cosh(), b.sinh());
    // the bottom wall forces C = -A, D = -b B / s; the top wall fixes A : B
    let (mut a, mut bb) = (sh - b / s * s.sin(), -(ch - s.cos()));
    if a.abs() + bb.abs() < 1e-12 {
        a = b * sh + s * s.sin();
        bb = -b * (ch - s.cos());
    }
    let raw = move |z: f64| {
        a * (b * z).cosh() + bb * (b * z).sinh() - a * (s * z).cos() - b * bb / s * (s * z).sin()
    };
    let (mut peak, mut first) = (0.0f64, 0.0);
    for i in 1..4000 {
        let v = raw(i as f64 / 4000.0);
        if first == 0.0 && v.abs() > 1e-6 {
            first = v;
        }
        peak = peak.max(v.abs());
    }
    let scale = first.signum() / peak;
    move |z| scale * raw(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(nz: usize) -> Arc<Grid> {
        Arc::new(Grid::with_default_period(8, nz).unwrap())
    }

    fn profile(g: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        g.z_nodes().iter().map(|&z| f(z)).collect()
    }

    #[test]
    fn inner_product_examples() {
        let g = grid(48);
        let f = profile(&g, |z| z * (1.0 - z));
        assert!((h10_inner(&g, &f, &f, 1.0) - 11.0 / 30.0).abs() < 1e-10);
        let b = profile(&g, |z| z * z * (1.0 - z) * (1.0 - z));
        assert!((h20_inner(&g, &b, &b, 1.0) - (0.8 + 2.0 / 105.0)).abs() < 1e-8);
        assert_eq!(h10_inner(&g, &f, &vec![0.0; 48], 1.0), 0.0);
    }

    #[test]
    fn basis_invariants() {
        let g = grid(48);
        let b = build_basis(&g, 10, 1.0).unwrap();
        let d1 = b.e_tilde_derivative(1).unwrap();
        for j in 0..10 {
            let ej = b.e_tilde.row(j).to_vec();
            for k in 0..10 {
                let ek = b.e_tilde.row(k).to_vec();
                let d = if j == k { 1.0 } else { 0.0 };
                assert!((h10_inner(&g, &ej, &ek, 1.0) - d).abs() < 1e-10);
                let lam = b.lambdas[k];
                assert!((h20_inner(&g, &ej, &ek, 1.0) - lam * d).abs() < 1e-8 * lam);
                let oj = b.e_orth.row(j);
                assert!((l2(&g, oj, b.e_orth.row(k)) - d).abs() < 1e-11);
            }
            for wall in [0, 47] {
                assert!(b.e_tilde[[j, wall]].abs() < 1e-9);
                assert!(d1[[j, wall]].abs() < 1e-9);
            }
            assert!(b.lambdas[j] >= PI * PI);
            // span preservation
            let back = project_pn(&ej, &b);
            assert!(back.iter().zip(&ej).all(|(a, c)| (a - c).abs() < 1e-9));
        }
        assert!(b.lambdas.windows(2).all(|w| w[1] > w[0]));
        assert!(b.warnings().is_empty());
    }

    #[test]
    fn first_eigenvalue_oracles() {
        for alpha1 in [1.0, 0.5] {
            let l48 = build_basis(&grid(48), 8, alpha1).unwrap().lambdas[0];
            let l96 = build_basis(&grid(96), 8, alpha1).unwrap().lambdas[0];
            assert!((l48 - l96).abs() < 1e-3 * l96);
            let oracle = strong_form_eigenvalues(alpha1, 1)[0];
            assert!((l48 - oracle).abs() < 1e-3 * oracle, "{l48} vs {oracle}");
        }
    }

    #[test]
    fn eigenpairs_match_strong_form() {
        let g = grid(48);
        let b = build_basis(&g, 8, 1.0).unwrap();
        let lams = strong_form_eigenvalues(1.0, 4);
        for k in 0..4 {
            assert!((b.lambdas[k] - lams[k]).abs() < 1e-6 * lams[k], "{k}");
            let phi = strong_form_eigenfunction(1.0, lams[k]);
            assert!(phi(0.0).abs() < 1e-12 && phi(1.0).abs() < 1e-9);
            let exact = profile(&g, phi);
            let nrm = h10_inner(&g, &exact, &exact, 1.0).sqrt();
            let diff = exact
                .iter()
                .zip(b.e_tilde.row(k).iter())
                .fold(0.0f64, |m, (x, y)| m.max((x / nrm - y).abs()));
            assert!(diff < 1e-7, "mode {k}: {diff:e}");
        }
    }

    #[test]
    fn enrichment_lowers_first_eigenvalue() {
        let g = grid(48);
        let mut prev = f64::INFINITY;
        for n in [1, 2, 4, 8, 16] {
            let l = build_basis(&g, n, 1.0).unwrap().lambdas[0];
            assert!(l <= prev * (1.0 + 1e-12));
            prev = l;
        }
    }

    #[test]
    fn projection_and_coordinates() {
        let g = grid(32);
        let b = build_basis(&g, 6, 1.0).unwrap();
        let f = profile(&g, |z| (3.0 * z).sin() + z * z);
        let h = profile(&g, |z| (5.0 * z).cos());
        let pf = project_pn(&f, &b);
        let ppf = project_pn(&pf, &b);
        assert!(pf.iter().zip(&ppf).all(|(a, c)| (a - c).abs() < 1e-12));
        let lhs = l2_inner(&g, &pf, &h);
        let rhs = l2_inner(&g, &f, &project_pn(&h, &b));
        assert!((lhs - rhs).abs() < 1e-12);

        let mut a = vec![0.0; 6];
        a[0] = 1.0;
        a[2] = 2.0;
        let s = synthesize(&a, &b).unwrap();
        let back = analyze(&s, &b);
        assert!(back.iter().zip(&a).all(|(x, y)| (x - y).abs() < 1e-10));
        a[2] = 0.0;
        let e1 = synthesize(&a, &b).unwrap();
        assert_eq!(e1, b.e_tilde.row(0).to_vec());
        assert!(synthesize(&[1.0], &b).is_err());
    }

    #[test]
    fn orthonormal_input_is_kept() {
        let g = grid(32);
        let mut b = build_basis(&g, 5, 1.0).unwrap();
        let before = b.e_orth.clone();
        b.e_tilde = before.clone();
        gram_schmidt_l2(&mut b).unwrap();
        let diff = (&b.e_orth - &before).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff < 1e-12);
        let mut bad = b.clone();
        let r0 = bad.e_tilde.row(0).to_owned();
        bad.e_tilde.row_mut(1).assign(&r0);
        assert!(gram_schmidt_l2(&mut bad).is_err());
    }

    #[test]
    fn rejects_bad_requests() {
        let g = grid(16);
        assert!(build_basis(&g, 11, 1.0).is_err());
        assert!(build_basis(&g, 0, 1.0).is_err());
        assert!(build_basis(&g, 4, 0.0).is_err());
    }
}

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{param, Result};

/// Tensor grid on the strip: `nx` equispaced periodic samples in x and
/// `nz` Chebyshev-Gauss-Lobatto nodes in z mapped to `[0, 1]`.
#[derive(Clone)]
pub struct Grid {
    nx: usize,
    nz: usize,
    lx: f64,
    z_nodes: Vec<f64>,
    z_weights: Vec<f64>,
    dz: Array2<f64>,
    dz_powers: [Array2<f64>; 4],
    antiderivative: Array2<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("nz", &self.nz)
            .field("lx", &self.lx)
            .finish_non_exhaustive()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.nz == other.nz && self.lx.to_bits() == other.lx.to_bits()
    }
}

impl Grid {
    /// Builds the grid. `nx` must be even and at least 8, `nz` at least 8,
    /// `lx` finite and positive.
    pub fn new(nx: usize, nz: usize, lx: f64) -> Result<Self> {
        if nx < 8 || nx % 2 != 0 {
            return param(format!("Nx must be even and >= 8, got {nx}"));
        }
        if nz < 8 {
            return param(format!("Nz must be >= 8, got {nz}"));
        }
        if !(lx.is_finite() && lx > 0.0) {
            return param(format!("Lx must be finite and positive, got {lx}"));
        }
        let n = nz - 1;
        let z_nodes: Vec<f64> = (0..nz)
            .map(|j| {
                let s = (PI * j as f64 / (2.0 * n as f64)).sin();
                s * s
            })
            .collect();
        let z_weights = clenshaw_curtis(n);
        let dz = barycentric_derivative(&z_nodes);
        let d2 = dz.dot(&dz);
        let d3 = d2.dot(&dz);
        let d4 = d3.dot(&dz);
        let antiderivative = chebyshev_antiderivative(n);
        let mut planner = FftPlanner::new();
        Ok(Self {
            nx,
            nz,
            lx,
            z_nodes,
            z_weights,
            dz_powers: [dz.clone(), d2, d3, d4],
            dz,
            antiderivative,
            fft_forward: planner.plan_fft_forward(nx),
            fft_inverse: planner.plan_fft_inverse(nx),
        })
    }

    /// Default x period `2*pi`.
    pub fn with_default_period(nx: usize, nz: usize) -> Result<Self> {
        Self::new(nx, nz, 2.0 * PI)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn z_nodes(&self) -> &[f64] {
        &self.z_nodes
    }

    /// Clenshaw-Curtis weights on `[0, 1]`; they sum to one.
    pub fn z_weights(&self) -> &[f64] {
        &self.z_weights
    }

    /// Dense first-derivative collocation matrix on the z nodes.
    pub fn dz(&self) -> &Array2<f64> {
        &self.dz
    }

    /// `Dz^m` for `m` in `1..=4`.
    pub fn dz_power(&self, m: usize) -> Result<&Array2<f64>> {
        match m {
            1..=4 => Ok(&self.dz_powers[m - 1]),
            _ => param(format!("z-derivative order must be in 1..=4, got {m}")),
        }
    }

    /// Cumulative integration matrix: `(Q f)_j = int_0^{z_j} p_f`, where
    /// `p_f` is the polynomial interpolant of the nodal values `f`.
    pub fn antiderivative_matrix(&self) -> &Array2<f64> {
        &self.antiderivative
    }

    pub fn x_points(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|i| self.lx * i as f64 / self.nx as f64)
            .collect()
    }

    /// Signed integer wavenumber stored at FFT row `idx`, in
    /// `-nx/2+1 ..= nx/2`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx <= self.nx / 2 {
            idx as i64
        } else {
            idx as i64 - self.nx as i64
        }
    }

    /// FFT row of the signed wavenumber `k`, if represented.
    pub fn row_of(&self, k: i64) -> Option<usize> {
        let half = (self.nx / 2) as i64;
        if k > half || k <= -half {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + self.nx as i64) as usize)
        }
    }

    /// Angular frequency `2*pi*k/Lx` at FFT row `idx`.
    pub fn xi(&self, idx: usize) -> f64 {
        2.0 * PI * self.wavenumber(idx) as f64 / self.lx
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        idx == self.nx / 2
    }

    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.fft_forward.process(buf);
    }

    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.fft_inverse.process(buf);
    }

    /// Applies a dense z operator to a nodal profile.
    pub fn apply_z(&self, op: &Array2<f64>, profile: &[f64]) -> Vec<f64> {
        (0..op.nrows())
            .map(|i| {
                op.row(i)
                    .iter()
                    .zip(profile)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Quadrature of `int_0^1 f dz` for a nodal profile.
    pub fn z_quadrature(&self, profile: &[f64]) -> f64 {
        self.z_weights.iter().zip(profile).map(|(w, f)| w * f).sum()
    }
}

/// Clenshaw-Curtis weights for `n + 1` Lobatto nodes, scaled to `[0, 1]`.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let theta = |j: usize| PI * j as f64 / nf;
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let mut v = 1.0;
            for k in 1..n / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta(j)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= (nf * theta(j)).cos() / (nf * nf - 1.0);
            *wj = 2.0 * v / nf;
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let mut v = 1.0;
            for k in 1..=(n - 1) / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta(j)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            *wj = 2.0 * v / nf;
        }
    }
    // [-1, 1] -> [0, 1]
    w.iter().map(|x| 0.5 * x).collect()
}

/// Differentiation matrix from the barycentric formula; the diagonal uses
/// the negative row-sum so constants are annihilated to rounding.
fn barycentric_derivative(nodes: &[f64]) -> Array2<f64> {
    let m = nodes.len();
    let n = m - 1;
    let weight = |j: usize| {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            0.5 * sign
        } else {
            sign
        }
    };
    let mut d = Array2::zeros((m, m));
    for i in 0..m {
        let mut row_sum = 0.0;
        for j in 0..m {
            if i != j {
                let v = weight(j) / weight(i) / (nodes[i] - nodes[j]);
                d[[i, j]] = v;
                row_sum += v;
            }
        }
        d[[i, i]] = -row_sum;
    }
    d
}

/// Nodal values -> Chebyshev coefficients in `t = 2z - 1`, integrate in
/// coefficient space, evaluate at the nodes, and pin the value at `z = 0`.
fn chebyshev_antiderivative(n: usize) -> Array2<f64> {
    let nf = n as f64;
    let m = n + 1;
    // node j sits at t_j = cos(theta_j), theta_j = pi (n - j) / n
    let theta: Vec<f64> = (0..m).map(|j| PI * (n - j) as f64 / nf).collect();
    let end = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };

    let mut to_coeffs = Array2::<f64>::zeros((m, m));
    for k in 0..m {
        for j in 0..m {
            to_coeffs[[k, j]] = 2.0 / (nf * end(k) * end(j)) * (k as f64 * theta[j]).cos();
        }
    }
    // b_k = (c_{k-1} a_{k-1} - a_{k+1}) / (2k), k = 1..=n+1
    let mut integrate = Array2::<f64>::zeros((m + 1, m));
    for k in 1..=m {
        let c = if k == 1 { 2.0 } else { 1.0 };
        integrate[[k, k - 1]] += c / (2.0 * k as f64);
        if k + 1 < m {
            integrate[[k, k + 1]] -= 1.0 / (2.0 * k as f64);
        }
    }
    // evaluate at nodes minus the value at t = -1
    let mut evaluate = Array2::<f64>::zeros((m, m + 1));
    for j in 0..m {
        for k in 0..=m {
            let at_left = if k % 2 == 0 { 1.0 } else { -1.0 };
            evaluate[[j, k]] = (k as f64 * theta[j]).cos() - at_left;
        }
    }
    // dz = dt / 2
    let mut q = evaluate.dot(&integrate).dot(&to_coeffs) * 0.5;
    q.row_mut(0).fill(0.0);
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(7, 9, 1.0).is_err());
        assert!(Grid::new(6, 9, 1.0).is_err());
        assert!(Grid::new(8, 7, 1.0).is_err());
        assert!(Grid::new(8, 9, -1.0).is_err());
    }

    #[test]
    fn nodes_and_weights() {
        for nz in [8, 9, 24, 48, 49] {
            let g = Grid::with_default_period(8, nz).unwrap();
            let z = g.z_nodes();
            assert_eq!(z[0], 0.0);
            assert_eq!(z[nz - 1], 1.0);
            assert!(z.windows(2).all(|w| w[1] > w[0]));
            let total: f64 = g.z_weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "nz={nz} sum={total}");
        }
    }

    #[test]
    fn derivative_of_constant_and_identity() {
        let g = Grid::with_default_period(8, 48).unwrap();
        let ones = vec![1.0; 48];
        assert!(g.apply_z(g.dz(), &ones).iter().all(|v| v.abs() <= 1e-11));
        let d = g.apply_z(g.dz(), g.z_nodes());
        for v in &d[1..47] {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_cubic() {
        let g = Grid::with_default_period(8, 9).unwrap();
        let f: Vec<f64> = g.z_nodes().iter().map(|z| z * z * z).collect();
        let d = g.apply_z(g.dz(), &f);
        // node 4 of 9 is z = 0.5
        assert!((g.z_nodes()[4] - 0.5).abs() < 1e-15);
        assert!((d[4] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn antiderivative_matches_weights_at_top() {
        let g = Grid::with_default_period(8, 33).unwrap();
        let q = g.antiderivative_matrix();
        for j in 0..33 {
            assert!((q[[32, j]] - g.z_weights()[j]).abs() < 1e-14);
            assert_eq!(q[[0, j]], 0.0);
        }
    }
}

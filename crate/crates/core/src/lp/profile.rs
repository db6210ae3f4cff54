use crate::error::{param, Result};
use crate::field::Grid;

const PLATEAU: f64 = 0.75;
const SUPPORT: f64 = 4.0 / 3.0;

/// Radial cut-off: `1` on `|xi| <= 3/4`, `0` on `|xi| >= 4/3`, and the
/// quintic smoothstep `s(t) = t^3 (10 - 15 t + 6 t^2)` of
/// `t = (4/3 - |xi|) / (4/3 - 3/4)` in between (C^2 across both joints).
pub fn chi(xi: f64) -> f64 {
    let r = xi.abs();
    if r <= PLATEAU {
        1.0
    } else if r >= SUPPORT {
        0.0
    } else {
        let t = (SUPPORT - r) / (SUPPORT - PLATEAU);
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Ring function `psi(xi) = chi(xi/2) - chi(xi)`, supported in
/// `3/4 <= |xi| <= 8/3` and equal to one on `4/3 <= |xi| <= 3/2`.
pub fn psi(xi: f64) -> f64 {
    chi(0.5 * xi) - chi(xi)
}

/// Range of dyadic blocks `q_min..=q_max` in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicProfile {
    q_min: i32,
    q_max: i32,
}

impl DyadicProfile {
    pub fn new(q_min: i32, q_max: i32) -> Result<Self> {
        if q_min > q_max {
            return param(format!("empty dyadic range {q_min}..={q_max}"));
        }
        Ok(Self { q_min, q_max })
    }

    /// Smallest range whose rings cover every nonzero frequency of `grid`.
    pub fn for_grid(grid: &Grid) -> Self {
        let xi_min = 2.0 * std::f64::consts::PI / grid.lx();
        let xi_max = xi_min * (grid.nx() / 2) as f64;
        Self::covering(xi_min, xi_max)
    }

    /// Smallest range covering `xi_min <= |xi| <= xi_max`.
    pub fn covering(xi_min: f64, xi_max: f64) -> Self {
        // block q is nonzero exactly on 2^q (3/4, 8/3)
        let q_min = (xi_min * 3.0 / 8.0).log2().floor() as i32;
        let q_max = (xi_max * 4.0 / 3.0).log2().ceil() as i32;
        Self { q_min, q_max }
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn blocks(&self) -> impl Iterator<Item = i32> + Clone {
        self.q_min..=self.q_max
    }

    /// `psi(2^-q xi)`.
    pub fn psi_q(&self, q: i32, xi: f64) -> f64 {
        psi(xi * 2f64.powi(-q))
    }

    /// `chi(2^-q xi)`.
    pub fn chi_q(&self, q: i32, xi: f64) -> f64 {
        chi(xi * 2f64.powi(-q))
    }

    /// True when the blocks partition unity at every nonzero frequency of
    /// `grid`.
    pub fn covers(&self, grid: &Grid) -> bool {
        let other = Self::for_grid(grid);
        self.q_min <= other.q_min && self.q_max >= other.q_max
    }

    pub(crate) fn require_cover(&self, grid: &Grid) -> Result<()> {
        if self.covers(grid) {
            Ok(())
        } else {
            let need = Self::for_grid(grid);
            param(format!(
                "dyadic range {}..={} does not cover the grid (needs {}..={})",
                self.q_min, self.q_max, need.q_min, need.q_max
            ))
        }
    }
}

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::DyadicProfile;
use crate::error::{param, Error, Result};
use crate::field::{Field, Grid};

/// `Delta_q f = F^-1(psi(2^-q |xi|) f^)`. The mean mode is always removed.
pub fn delta_q(f: &Field, q: i32, profile: &DyadicProfile) -> Field {
    f.real_multiplier(|xi| profile.psi_q(q, xi))
        .expect("dyadic symbols are finite")
}

/// `S_q f = F^-1(chi(2^-q |xi|) f^)`; keeps the mean mode since `chi(0) = 1`.
pub fn s_q(f: &Field, q: i32, profile: &DyadicProfile) -> Field {
    f.real_multiplier(|xi| profile.chi_q(q, xi))
        .expect("dyadic symbols are finite")
}

/// The `k = 0` part of `f`.
pub fn zero_mode(f: &Field) -> Field {
    f.real_multiplier(|xi| if xi == 0.0 { 1.0 } else { 0.0 })
        .expect("finite")
}

/// Number of x-derivatives taken before applying the base definition:
/// zero for `s <= 1/2`, otherwise the `k >= 1` with `s in (k - 1/2, k + 1/2]`.
pub fn derivative_shift(s: f64) -> u32 {
    if s <= 0.5 {
        0
    } else {
        (s - 0.5).ceil() as u32
    }
}

/// `||Delta_q f||_{L^2}` for every block, from the per-wavenumber z spectrum.
pub fn block_norms(f: &Field, profile: &DyadicProfile) -> Vec<(i32, f64)> {
    block_norms_from_spectrum(f.grid(), &f.z_spectrum(), profile)
}

/// Block norms from `spectrum[r] = sum_j w_j |c_rj|^2` (FFT row order).
pub(crate) fn block_norms_from_spectrum(
    grid: &Grid,
    spectrum: &[f64],
    profile: &DyadicProfile,
) -> Vec<(i32, f64)> {
    let xis: Vec<f64> = (0..grid.nx()).map(|r| grid.xi(r)).collect();
    profile
        .blocks()
        .map(|q| {
            let mut acc = 0.0;
            for (xi, s) in xis.iter().zip(spectrum) {
                let p = profile.psi_q(q, *xi);
                if p != 0.0 {
                    acc += p * p * s;
                }
            }
            (q, (grid.lx() * acc).sqrt())
        })
        .collect()
}

/// `partial_x^k f` with the Nyquist row dropped.
pub(crate) fn x_derivative_power(f: &Field, k: u32) -> Field {
    if k == 0 {
        return f.clone();
    }
    f.fourier_multiplier(|xi| Complex64::new(0.0, xi).powu(k))
        .expect("finite")
        .truncate(f.grid().nx() / 2 - 1)
}

/// A Besov norm together with its block contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRecord {
    pub s: f64,
    pub value: f64,
    /// `q -> 2^{q (s - k)} ||Delta_q partial_x^k f||_{L^2}`.
    pub per_block: BTreeMap<i32, f64>,
    /// L2 norm of the mean (`k = 0`) part, which no block sees.
    pub zero_mode: f64,
}

/// `||f||_{B^s} = sum_q 2^{qs} ||Delta_q f||_{L^2}`, with `s > 1/2` reduced
/// to `||partial_x^k f||_{B^{s-k}}`.
pub fn besov_norm(f: &Field, s: f64, profile: &DyadicProfile) -> Result<NormRecord> {
    profile.require_cover(f.grid())?;
    let k = derivative_shift(s);
    let g = x_derivative_power(f, k);
    Ok(record_from_blocks(
        s,
        k,
        &block_norms(&g, profile),
        mean_norm(f),
    ))
}

pub(crate) fn mean_norm(f: &Field) -> f64 {
    (f.grid().lx() * f.z_spectrum()[0]).sqrt()
}

pub(crate) fn record_from_blocks(s: f64, k: u32, blocks: &[(i32, f64)], zero: f64) -> NormRecord {
    let shifted = s - k as f64;
    let per_block: BTreeMap<i32, f64> = blocks
        .iter()
        .map(|&(q, n)| (q, 2f64.powf(q as f64 * shifted) * n))
        .collect();
    let value = per_block.values().sum();
    NormRecord {
        s,
        value,
        per_block,
        zero_mode: zero,
    }
}

/// Normalized block weights `d_q = 2^{qs} ||Delta_q f|| / ||f||_{B^s}`.
pub fn dq_sequence(f: &Field, s: f64, profile: &DyadicProfile) -> Result<BTreeMap<i32, f64>> {
    let rec = besov_norm(f, s, profile)?;
    if rec.value <= 0.0 {
        return Err(Error::Numeric(
            "undefined d_q: the B^s norm vanishes".into(),
        ));
    }
    Ok(rec
        .per_block
        .iter()
        .map(|(&q, &v)| (q, v / rec.value))
        .collect())
}

/// Time exponent of a Chemin-Lerner norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeExponent {
    One,
    Two,
    Infinity,
}

/// `sum_q 2^{qs} (int_0^T w(t) ||Delta_q u(t)||^p dt)^{1/p}` with the time
/// integral by trapezoid over the samples. For `p = infinity` the weight
/// multiplies the block norm: `sum_q 2^{qs} sup_t w(t) ||Delta_q u(t)||`.
pub fn chemin_lerner_norm(
    trajectory: &[(f64, Field)],
    p: TimeExponent,
    s: f64,
    weight: impl Fn(f64) -> f64,
    profile: &DyadicProfile,
) -> Result<f64> {
    let first = match trajectory.first() {
        Some((_, f)) => f,
        None => return param("empty trajectory"),
    };
    profile.require_cover(first.grid())?;
    let k = derivative_shift(s);
    let samples: Vec<(f64, Vec<f64>)> = trajectory
        .iter()
        .map(|(t, f)| {
            let g = x_derivative_power(f, k);
            (*t, block_norms(&g, profile).into_iter().map(|(_, n)| n).collect())
        })
        .collect();
    chemin_lerner_from_blocks(&samples, p, s - k as f64, &weight, profile)
}

/// Chemin-Lerner norm from precomputed block norms (one vector per sample,
/// ordered like `profile.blocks()`); `s` is the already shifted index.
pub(crate) fn chemin_lerner_from_blocks(
    samples: &[(f64, Vec<f64>)],
    p: TimeExponent,
    s: f64,
    weight: &dyn Fn(f64) -> f64,
    profile: &DyadicProfile,
) -> Result<f64> {
    if samples.is_empty() {
        return param("empty trajectory");
    }
    if samples.windows(2).any(|w| w[1].0 < w[0].0) {
        return param("trajectory times must be nondecreasing");
    }
    let weights: Vec<f64> = samples.iter().map(|(t, _)| weight(*t)).collect();
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Numeric("time weight must be finite and >= 0".into()));
    }
    let mut total = 0.0;
    for (i, q) in profile.blocks().enumerate() {
        let series = samples.iter().map(|(_, b)| b[i]);
        let time_part = match p {
            TimeExponent::Infinity => series
                .zip(&weights)
                .map(|(b, w)| w * b)
                .fold(0.0, f64::max),
            TimeExponent::One | TimeExponent::Two => {
                let power = if p == TimeExponent::One { 1 } else { 2 };
                let vals: Vec<f64> = series
                    .zip(&weights)
                    .map(|(b, w)| w * b.powi(power))
                    .collect();
                let mut integral = 0.0;
                for j in 1..samples.len() {
                    let dt = samples[j].0 - samples[j - 1].0;
                    integral += 0.5 * dt * (vals[j] + vals[j - 1]);
                }
                if power == 1 {
                    integral
                } else {
                    integral.sqrt()
                }
            }
        };
        total += 2f64.powf(q as f64 * s) * time_part;
    }
    Ok(total)
}

//! Littlewood-Paley calculus in the horizontal variable.
//!
//! On the torus the `k = 0` mode belongs to no homogeneous block: every
//! [`delta_q`] annihilates it, Besov norms and `d_q` sequences are sums over
//! `k != 0`, and the mean part is available through [`zero_mode`].
//! [`s_q`] follows its symbol `chi(2^-q |xi|)` and therefore keeps the mean.

mod blocks;
mod bony;
pub mod inequalities;
mod profile;
mod weight;

pub(crate) use blocks::{block_norms_from_spectrum, chemin_lerner_from_blocks, x_derivative_power};
pub use blocks::{
    besov_norm, block_norms, chemin_lerner_norm, delta_q, derivative_shift, dq_sequence, s_q,
    zero_mode, NormRecord, TimeExponent,
};
pub use bony::{bony_parts, paraproduct_terms, plus_part, BonyParts};
pub use profile::{chi, psi, DyadicProfile};
pub use weight::{analytic_weight, inverse_analytic_weight, AnalyticWeightParams};

use num_complex::Complex64;

use super::{delta_q, zero_mode, DyadicProfile};
use crate::error::Result;
use crate::field::Field;

/// `f+ = F^-1(|f^|)`, coefficient-wise modulus at every z node.
pub fn plus_part(f: &Field) -> Field {
    let coeffs = f.coeffs().mapv(|c| Complex64::new(c.norm(), 0.0));
    Field::from_coeffs(f.grid(), coeffs).expect("same shape")
}

/// Pieces of `ab = T_a b + T_b a + R(a, b) + a_0 b_0`.
///
/// The low-frequency cut-off `S_{q-1}` keeps the mean mode, so `T_a b`
/// carries `a_0 (b - b_0)` and `T_b a` carries `b_0 (a - a_0)`; the product
/// of the two means is the only piece no block sees.
#[derive(Debug, Clone)]
pub struct BonyParts {
    pub t_ab: Field,
    pub t_ba: Field,
    pub remainder: Field,
    pub zero_modes: Field,
}

impl BonyParts {
    pub fn total(&self) -> Field {
        &(&(&self.t_ab + &self.t_ba) + &self.remainder) + &self.zero_modes
    }
}

/// Blocks of `f` ordered like `profile.blocks()`, and the low-pass sums
/// `S_{q-1} f = f_0 + sum_{q' <= q-2} Delta_q' f`.
fn blocks_and_lows(f: &Field, profile: &DyadicProfile) -> (Vec<Field>, Vec<Field>) {
    let blocks: Vec<Field> = profile.blocks().map(|q| delta_q(f, q, profile)).collect();
    let mut lows = Vec::with_capacity(blocks.len());
    let mut acc = zero_mode(f);
    for i in 0..blocks.len() {
        if i >= 2 {
            acc = &acc + &blocks[i - 2];
        }
        lows.push(acc.clone());
    }
    (blocks, lows)
}

/// `S_{q-1} a * Delta_q b` for each block `q` of the profile.
pub fn paraproduct_terms(a: &Field, b: &Field, profile: &DyadicProfile) -> Result<Vec<(i32, Field)>> {
    a.same_grid(b)?;
    profile.require_cover(a.grid())?;
    let (_, lows) = blocks_and_lows(a, profile);
    Ok(profile
        .blocks()
        .zip(lows)
        .map(|(q, low)| (q, low.product(&delta_q(b, q, profile)).expect("same grid")))
        .collect())
}

pub fn bony_parts(a: &Field, b: &Field, profile: &DyadicProfile) -> Result<BonyParts> {
    a.same_grid(b)?;
    profile.require_cover(a.grid())?;
    let (ab, al) = blocks_and_lows(a, profile);
    let (bb, bl) = blocks_and_lows(b, profile);
    let n = ab.len();
    let mut t_ab = Field::zeros(a.grid());
    let mut t_ba = Field::zeros(a.grid());
    let mut remainder = Field::zeros(a.grid());
    for i in 0..n {
        t_ab = &t_ab + &al[i].product(&bb[i])?;
        t_ba = &t_ba + &bl[i].product(&ab[i])?;
        // tilde Delta_q a = sum_{|q - q'| <= 1} Delta_q' a
        let mut wide = ab[i].clone();
        if i > 0 {
            wide = &wide + &ab[i - 1];
        }
        if i + 1 < n {
            wide = &wide + &ab[i + 1];
        }
        remainder = &remainder + &wide.product(&bb[i])?;
    }
    let zero_modes = zero_mode(a).product(&zero_mode(b))?;
    Ok(BonyParts {
        t_ab,
        t_ba,
        remainder,
        zero_modes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn band_limited(g: &Arc<Grid>, kmax: i64, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Field::zeros(g);
        for k in 0..=kmax {
            for j in 0..g.nz() {
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let c = if k == 0 { Complex64::new(c.re, 0.0) } else { c };
                f.coeffs_mut()[[g.row_of(k).unwrap(), j]] = c;
                f.coeffs_mut()[[g.row_of(-k).unwrap(), j]] = c.conj();
            }
        }
        f
    }

    #[test]
    fn reconstruction() {
        let g = Arc::new(Grid::with_default_period(64, 10).unwrap());
        let p = DyadicProfile::for_grid(&g);
        let a = band_limited(&g, 15, 1);
        let b = band_limited(&g, 15, 2);
        let parts = bony_parts(&a, &b, &p).unwrap();
        let ab = a.product(&b).unwrap();
        assert!(parts.total().max_diff(&ab) <= 1e-12 * ab.max_abs());
    }

    #[test]
    fn cosine_square() {
        let g = Arc::new(Grid::with_default_period(32, 8).unwrap());
        let p = DyadicProfile::for_grid(&g);
        let c = Field::from_fn(&g, |x, _| x.cos());
        let parts = bony_parts(&c, &c, &p).unwrap();
        let oracle = Field::from_fn(&g, |x, _| 0.5 * (1.0 + (2.0 * x).cos()));
        assert!(parts.total().max_diff(&oracle) < 1e-12);
        // both factors live in block 0 only (xi = 1 in [3/4, 4/3]) -> all remainder
        assert!(parts.t_ab.max_abs() < 1e-15 && parts.t_ba.max_abs() < 1e-15);
    }

    #[test]
    fn paraproduct_support() {
        let g = Arc::new(Grid::with_default_period(128, 8).unwrap());
        let p = DyadicProfile::for_grid(&g);
        // total bandwidth 2 * 31 < 64 keeps the products alias-free
        let a = band_limited(&g, 31, 3);
        let b = band_limited(&g, 31, 4);
        let scale = a.max_abs() * b.max_abs();
        for (q2, term) in paraproduct_terms(&a, &b, &p).unwrap() {
            for q in p.blocks() {
                if (q - q2).abs() >= 5 {
                    assert!(delta_q(&term, q, &p).max_abs() <= 1e-14 * scale, "q={q} q'={q2}");
                }
            }
        }
    }

    #[test]
    fn plus_part_properties() {
        let g = Arc::new(Grid::with_default_period(32, 8).unwrap());
        let p = DyadicProfile::for_grid(&g);
        let c = Field::from_fn(&g, |x, _| x.cos());
        assert!(plus_part(&c.scale(-1.0)).max_diff(&c) < 1e-15);
        assert!(plus_part(&c).max_diff(&c) < 1e-15);
        let f = band_limited(&g, 12, 5);
        let fp = plus_part(&f);
        assert!(fp.conjugate_symmetry_defect() == 0.0);
        assert!((fp.l2_norm() - f.l2_norm()).abs() < 1e-13 * f.l2_norm());
        for q in p.blocks() {
            let lhs = delta_q(&fp, q, &p);
            let rhs = plus_part(&delta_q(&f, q, &p));
            assert!(lhs.max_diff(&rhs) <= 1e-13 * f.max_abs());
        }
        assert!(bony_parts(&f, &Field::zeros(&Arc::new(Grid::with_default_period(16, 8).unwrap())), &p).is_err());
    }
}

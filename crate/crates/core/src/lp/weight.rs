use crate::error::{Error, Result};
use crate::field::Field;

/// Analytic band `a`, slope `lambda`, and the current band consumption `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticWeightParams {
    pub a: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl AnalyticWeightParams {
    /// Remaining band `a - lambda * theta`.
    pub fn band(&self) -> f64 {
        self.a - self.lambda * self.theta
    }

    fn checked_band(&self) -> Result<f64> {
        let b = self.band();
        if b.is_nan() || b <= 0.0 {
            Err(Error::BandExhausted(b))
        } else {
            Ok(b)
        }
    }
}

/// `f_phi = F^-1(e^{(a - lambda theta)|xi|} f^)`.
pub fn analytic_weight(f: &Field, params: AnalyticWeightParams) -> Result<Field> {
    let band = params.checked_band()?;
    f.real_multiplier(|xi| (band * xi.abs()).exp())
}

/// Inverse of [`analytic_weight`].
pub fn inverse_analytic_weight(f: &Field, params: AnalyticWeightParams) -> Result<Field> {
    let band = params.checked_band()?;
    f.real_multiplier(|xi| (-band * xi.abs()).exp())
}

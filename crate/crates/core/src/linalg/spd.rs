use nalgebra::DMatrix;

use super::{check_finite, symmetrize};
use crate::error::{Error, Result};

/// Inverse and log-determinant of a symmetric positive definite matrix via
/// Cholesky. The inverse is returned exactly symmetric.
pub fn spd_inverse_and_logdet(w: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if !w.is_square() {
        return Err(Error::dim("SPD inverse needs a square matrix"));
    }
    check_finite(w, "SPD inverse input")?;
    let chol = w.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let mut logdet = 0.0;
    for i in 0..w.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        logdet += d.ln();
    }
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    check_finite(&inv, "SPD inverse")?;
    Ok((inv, 2.0 * logdet))
}

//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham 2005 coefficients).

use nalgebra::DMatrix;

use super::check_finite;
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Computes `exp(A t)`.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::dim("matrix exponential needs a square matrix"));
    }
    check_finite(a, "matrix exponential input")?;
    if !t.is_finite() {
        return Err(Error::NonFinite("matrix exponential time"));
    }
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    if t == 0.0 {
        return Ok(ident);
    }
    let mut at = a * t;
    let norm = one_norm(&at);
    if norm == 0.0 {
        return Ok(ident);
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(Error::Numerical(format!(
            "matrix exponential overflow: ‖At‖₁ = {norm:e}"
        )));
    }
    if squarings > 0 {
        at /= 2f64.powi(squarings);
    }

    let b = &PADE13;
    let a2 = &at * &at;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &at * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let lu = (&v - &u).lu();
    let mut r = lu.solve(&(&v + &u)).ok_or_else(|| {
        Error::Numerical("singular Padé denominator in matrix exponential".into())
    })?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!(
            "matrix exponential overflow: ‖At‖₁ = {norm:e}"
        )));
    }
    Ok(r)
}

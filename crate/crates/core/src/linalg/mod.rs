//! Dense real linear-algebra kernel: real Schur form, spectra, Lyapunov
//! solves, the matrix exponential, and SPD inverse/log-determinant.
//!
//! Storage is `nalgebra::DMatrix<f64>` throughout.

mod expm;
mod lyapunov;
mod schur;
mod spd;

use nalgebra::DMatrix;

pub use expm::matrix_exponential;
pub use lyapunov::{solve_lyapunov, LyapunovSolver};
pub use schur::{schur_decompose, RealSchur};
pub use spd::spd_inverse_and_logdet;

use crate::error::{Error, Result};

pub type Complex64 = nalgebra::Complex<f64>;

/// Eigenvalues of a square matrix together with their maximum real part.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<Complex64>,
    pub spectral_abscissa: f64,
}

impl SpectralSummary {
    pub fn is_hurwitz(&self) -> bool {
        self.spectral_abscissa < 0.0
    }
}

pub fn spectral_summary(a: &DMatrix<f64>) -> Result<SpectralSummary> {
    let eigenvalues = schur_decompose(a)?.eigenvalues();
    let spectral_abscissa = eigenvalues
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralSummary {
        eigenvalues,
        spectral_abscissa,
    })
}

/// Maximum real part over the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    Ok(spectral_summary(a)?.spectral_abscissa)
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Replaces `m` by `(m + mᵀ)/2` in place.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Reference Lyapunov solve through the vectorized Kronecker system
/// `(I ⊗ A + A ⊗ I) vec(X) = −vec(Q)`. O(n⁶); for cross-checking only.
#[doc(hidden)]
pub fn kron_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let k = ident.kronecker(a) + a.kronecker(&ident);
    let rhs = -nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Kronecker system".into()))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

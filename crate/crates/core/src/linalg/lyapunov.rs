//! Bartels–Stewart solver for the continuous Lyapunov equation
//! `A X + X Aᵀ + Q = 0`.

use nalgebra::DMatrix;

use super::schur::{schur_decompose, RealSchur};
use super::{check_finite, symmetrize};
use crate::error::{Error, Result};

/// A Lyapunov solver bound to one Hurwitz matrix `A`.
///
/// The real Schur form of `A` is computed once, so repeated solves against
/// different right-hand sides (one per edge when building the centrality
/// matrix) cost O(n³) each without refactoring.
#[derive(Debug, Clone)]
pub struct LyapunovSolver {
    schur: RealSchur,
    blocks: Vec<(usize, usize)>,
    abscissa: f64,
}

impl LyapunovSolver {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let schur = schur_decompose(a)?;
        let abscissa = schur
            .eigenvalues()
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(abscissa < 0.0) {
            return Err(Error::Unstable { abscissa });
        }
        let blocks = schur.blocks();
        Ok(Self {
            schur,
            blocks,
            abscissa,
        })
    }

    pub fn dim(&self) -> usize {
        self.schur.t.nrows()
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.abscissa
    }

    pub fn schur(&self) -> &RealSchur {
        &self.schur
    }

    /// Solves `A X + X Aᵀ + Q = 0` for symmetric `Q`; the returned `X` is
    /// exactly symmetric.
    pub fn solve(&self, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::dim(format!(
                "lyapunov right-hand side is {}x{}, expected {n}x{n}",
                q.nrows(),
                q.ncols()
            )));
        }
        check_finite(q, "lyapunov right-hand side")?;
        let scale = q.amax().max(1.0);
        if (q - q.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument(
                "lyapunov right-hand side must be symmetric".into(),
            ));
        }

        let z = &self.schur.q;
        let t = &self.schur.t;
        // T Y + Y Tᵀ = C with Y = Zᵀ X Z.
        let c = -(z.transpose() * q * z);
        let mut y = DMatrix::<f64>::zeros(n, n);

        for &(rk, p) in self.blocks.iter().rev() {
            for &(rl, ql) in self.blocks.iter().rev() {
                let mut rhs = [0.0f64; 4];
                for c_ in 0..ql {
                    let j = rl + c_;
                    for r in 0..p {
                        let i = rk + r;
                        let mut acc = c[(i, j)];
                        for m in rk + p..n {
                            acc -= t[(i, m)] * y[(m, j)];
                        }
                        for m in rl + ql..n {
                            acc -= y[(i, m)] * t[(j, m)];
                        }
                        rhs[r + p * c_] = acc;
                    }
                }
                let sol = solve_small_sylvester(t, rk, p, rl, ql, rhs)?;
                for c_ in 0..ql {
                    for r in 0..p {
                        y[(rk + r, rl + c_)] = sol[r + p * c_];
                    }
                }
            }
        }

        let mut x = z * y * z.transpose();
        symmetrize(&mut x);
        check_finite(&x, "lyapunov solution")?;
        Ok(x)
    }
}

/// Solves `T_kk Y + Y T_llᵀ = R` for a block of size `p × q` (p, q ≤ 2), with
/// `R` and the solution stored column-major.
fn solve_small_sylvester(
    t: &DMatrix<f64>,
    rk: usize,
    p: usize,
    rl: usize,
    q: usize,
    rhs: [f64; 4],
) -> Result<[f64; 4]> {
    let dim = p * q;
    let mut k = [[0.0f64; 5]; 4];
    for c in 0..q {
        for r in 0..p {
            let row = r + p * c;
            for a in 0..p {
                k[row][a + p * c] += t[(rk + r, rk + a)];
            }
            for b in 0..q {
                k[row][r + p * b] += t[(rl + c, rl + b)];
            }
            k[row][4] = rhs[row];
        }
    }
    let scale = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| k[i][j].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);

    // Gaussian elimination with partial pivoting.
    for col in 0..dim {
        let piv = (col..dim)
            .max_by(|&a, &b| k[a][col].abs().total_cmp(&k[b][col].abs()))
            .unwrap_or(col);
        if k[piv][col].abs() <= 1e3 * f64::EPSILON * scale {
            return Err(Error::Numerical(
                "singular block in Lyapunov back-substitution (eigenvalues sum to zero)".into(),
            ));
        }
        k.swap(col, piv);
        let pivot = k[col];
        for row in k.iter_mut().take(dim).skip(col + 1) {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (x, p) in row[col..dim].iter_mut().zip(&pivot[col..dim]) {
                    *x -= f * p;
                }
                row[4] -= f * pivot[4];
            }
        }
    }
    let mut out = [0.0f64; 4];
    for row in (0..dim).rev() {
        let mut acc = k[row][4];
        for j in row + 1..dim {
            acc -= k[row][j] * out[j];
        }
        out[row] = acc / k[row][row];
    }
    Ok(out)
}

/// Solves `A X + X Aᵀ + Q = 0` for Hurwitz `A` and symmetric `Q`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    LyapunovSolver::new(a)?.solve(q)
}

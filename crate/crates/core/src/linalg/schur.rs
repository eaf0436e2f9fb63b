//! Real Schur decomposition by Householder reduction to Hessenberg form
//! followed by Francis double-shift QR sweeps.
//!
//! The output `T` is quasi-upper-triangular: 1×1 diagonal blocks carry real
//! eigenvalues and 2×2 blocks carry complex-conjugate pairs. Real pairs that
//! converge together are split, so every 2×2 block has a strictly complex
//! spectrum.

use nalgebra::DMatrix;

use super::Complex64;

use crate::error::{Error, Result};

/// `A = Q T Qᵀ` with `Q` orthogonal and `T` quasi-upper-triangular.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

impl RealSchur {
    /// Diagonal block structure of `T` as `(start, size)` pairs.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        diagonal_blocks(&self.t)
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.t.nrows());
        for (k, size) in self.blocks() {
            if size == 1 {
                out.push(Complex64::new(self.t[(k, k)], 0.0));
            } else {
                let (a, b, c, d) = (
                    self.t[(k, k)],
                    self.t[(k, k + 1)],
                    self.t[(k + 1, k)],
                    self.t[(k + 1, k + 1)],
                );
                let (l1, l2) = eig2x2(a, b, c, d);
                out.push(l1);
                out.push(l2);
            }
        }
        out
    }
}

pub(crate) fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}

fn eig2x2(a: f64, b: f64, c: f64, d: f64) -> (Complex64, Complex64) {
    let half_tr = 0.5 * (a + d);
    let p = 0.5 * (a - d);
    let disc = p * p + b * c;
    if disc >= 0.0 {
        let r = disc.sqrt();
        (
            Complex64::new(half_tr + r, 0.0),
            Complex64::new(half_tr - r, 0.0),
        )
    } else {
        let r = (-disc).sqrt();
        (Complex64::new(half_tr, r), Complex64::new(half_tr, -r))
    }
}

/// Computes the real Schur form of a square matrix.
pub fn schur_decompose(a: &DMatrix<f64>) -> Result<RealSchur> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "schur decomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("schur input"));
    }
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok(RealSchur { q, t: h });
    }
    hessenberg(&mut h, &mut q);
    francis_qr(&mut h, &mut q)?;
    split_real_pairs(&mut h, &mut q);
    Ok(RealSchur { q, t: h })
}

/// Householder vector `v` and `beta` such that `(I - beta v vᵀ) x = ±‖x‖ e₁`.
/// Returns `None` when `x` is already a multiple of `e₁`.
fn householder(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tail = x[1..].iter().map(|v| v * v).sum::<f64>();
    if norm == 0.0 || tail == 0.0 {
        return None;
    }
    let alpha = if x[0] >= 0.0 { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vtv: f64 = v.iter().map(|e| e * e).sum();
    Some((v, 2.0 / vtv))
}

/// Applies `P = I - beta v vᵀ` from the left to rows `r0..r0+len(v)`,
/// columns `c_lo..c_hi`.
fn reflect_rows(m: &mut DMatrix<f64>, v: &[f64], beta: f64, r0: usize, c_lo: usize, c_hi: usize) {
    for j in c_lo..c_hi {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += vk * m[(r0 + k, j)];
        }
        s *= beta;
        for (k, vk) in v.iter().enumerate() {
            m[(r0 + k, j)] -= s * vk;
        }
    }
}

/// Applies `P` from the right to columns `c0..c0+len(v)`, rows `r_lo..r_hi`.
fn reflect_cols(m: &mut DMatrix<f64>, v: &[f64], beta: f64, c0: usize, r_lo: usize, r_hi: usize) {
    for i in r_lo..r_hi {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += vk * m[(i, c0 + k)];
        }
        s *= beta;
        for (k, vk) in v.iter().enumerate() {
            m[(i, c0 + k)] -= s * vk;
        }
    }
}

fn hessenberg(h: &mut DMatrix<f64>, q: &mut DMatrix<f64>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        if let Some((v, beta)) = householder(&x) {
            reflect_rows(h, &v, beta, k + 1, k, n);
            reflect_cols(h, &v, beta, k + 1, 0, n);
            reflect_cols(q, &v, beta, k + 1, 0, n);
        }
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
}

fn francis_qr(h: &mut DMatrix<f64>, q: &mut DMatrix<f64>) -> Result<()> {
    let n = h.nrows();
    let eps = f64::EPSILON;
    let norm = h
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let max_iter = 100 * n.max(1);
    let mut total = 0usize;
    let mut hi = n - 1;
    let mut iter_here = 0usize;

    loop {
        // Find the start of the unreduced block ending at `hi`.
        let mut lo = hi;
        while lo > 0 {
            let mut s = h[(lo - 1, lo - 1)].abs() + h[(lo, lo)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(lo, lo - 1)].abs() < eps * s {
                h[(lo, lo - 1)] = 0.0;
                break;
            }
            lo -= 1;
        }

        let size = hi - lo + 1;
        if size <= 2 {
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            iter_here = 0;
            continue;
        }

        total += 1;
        iter_here += 1;
        if total > max_iter {
            return Err(Error::Numerical(format!(
                "QR iteration did not converge after {max_iter} sweeps"
            )));
        }

        // Shift polynomial (sum and product of the trailing 2x2 eigenvalues).
        let (mut s, mut t) = {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            (a + d, a * d - b * c)
        };
        if iter_here % 11 == 10 {
            // Exceptional shift to break cycles.
            let w = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
            s = 1.5 * w;
            t = w * w;
        }

        let mut x =
            h[(lo, lo)] * h[(lo, lo)] + h[(lo, lo + 1)] * h[(lo + 1, lo)] - s * h[(lo, lo)] + t;
        let mut y = h[(lo + 1, lo)] * (h[(lo, lo)] + h[(lo + 1, lo + 1)] - s);
        let mut z = h[(lo + 1, lo)] * h[(lo + 2, lo + 1)];

        for k in lo..=hi - 2 {
            if let Some((v, beta)) = householder(&[x, y, z]) {
                let c_lo = if k > lo { k - 1 } else { lo };
                reflect_rows(h, &v, beta, k, c_lo, n);
                let r_hi = (k + 3).min(hi) + 1;
                reflect_cols(h, &v, beta, k, 0, r_hi);
                reflect_cols(q, &v, beta, k, 0, n);
            }
            if k > lo {
                h[(k + 1, k - 1)] = 0.0;
                h[(k + 2, k - 1)] = 0.0;
            }
            x = h[(k + 1, k)];
            y = h[(k + 2, k)];
            if k + 3 <= hi {
                z = h[(k + 3, k)];
            }
        }
        if let Some((v, beta)) = householder(&[x, y]) {
            reflect_rows(h, &v, beta, hi - 1, hi - 2, n);
            reflect_cols(h, &v, beta, hi - 1, 0, hi + 1);
            reflect_cols(q, &v, beta, hi - 1, 0, n);
        }
        h[(hi, hi - 2)] = 0.0;
    }
    Ok(())
}

/// Rotates every 2x2 diagonal block with real eigenvalues into upper
/// triangular form.
fn split_real_pairs(h: &mut DMatrix<f64>, q: &mut DMatrix<f64>) {
    let n = h.nrows();
    let mut k = 0;
    while k + 1 < n {
        if h[(k + 1, k)] == 0.0 {
            k += 1;
            continue;
        }
        let (a, b, c, d) = (h[(k, k)], h[(k, k + 1)], h[(k + 1, k)], h[(k + 1, k + 1)]);
        let p = 0.5 * (a - d);
        let disc = p * p + b * c;
        if disc < 0.0 {
            k += 2;
            continue;
        }
        // Eigenvector of the larger-magnitude root for stability.
        let r = disc.sqrt();
        let lambda = if p >= 0.0 { d + p + r } else { d + p - r };
        let (mut e0, mut e1) = if (lambda - d).abs() + c.abs() >= (lambda - a).abs() + b.abs() {
            (lambda - d, c)
        } else {
            (b, lambda - a)
        };
        let nrm = e0.hypot(e1);
        if nrm == 0.0 {
            h[(k + 1, k)] = 0.0;
            k += 2;
            continue;
        }
        e0 /= nrm;
        e1 /= nrm;
        // G = [[e0, -e1], [e1, e0]]; apply Gᵀ H G.
        for j in k..n {
            let u = h[(k, j)];
            let w = h[(k + 1, j)];
            h[(k, j)] = e0 * u + e1 * w;
            h[(k + 1, j)] = -e1 * u + e0 * w;
        }
        for i in 0..=k + 1 {
            let u = h[(i, k)];
            let w = h[(i, k + 1)];
            h[(i, k)] = e0 * u + e1 * w;
            h[(i, k + 1)] = -e1 * u + e0 * w;
        }
        for i in 0..n {
            let u = q[(i, k)];
            let w = q[(i, k + 1)];
            q[(i, k)] = e0 * u + e1 * w;
            q[(i, k + 1)] = -e1 * u + e0 * w;
        }
        h[(k + 1, k)] = 0.0;
        k += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &DMatrix<f64>, s: &RealSchur) -> f64 {
        (&s.q * &s.t * s.q.transpose() - a).norm()
    }

    fn orth_err(q: &DMatrix<f64>) -> f64 {
        let n = q.nrows();
        (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm()
    }

    fn assert_quasi_triangular(t: &DMatrix<f64>) {
        let n = t.nrows();
        for i in 0..n {
            for j in 0..i.saturating_sub(1) {
                assert_eq!(t[(i, j)], 0.0, "entry ({i},{j}) below the subdiagonal");
            }
        }
        for i in 1..n.saturating_sub(1) {
            assert!(
                t[(i, i - 1)] == 0.0 || t[(i + 1, i)] == 0.0,
                "two consecutive nonzero subdiagonals at {i}"
            );
        }
    }

    #[test]
    fn identity_is_its_own_schur_form() {
        let a = DMatrix::<f64>::identity(3, 3);
        let s = schur_decompose(&a).unwrap();
        assert!((s.t.clone() - &a).norm() < 1e-15);
        assert!(orth_err(&s.q) < 1e-15);
    }

    #[test]
    fn diagonal_matrix_keeps_its_entries() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0]));
        let s = schur_decompose(&a).unwrap();
        let mut d: Vec<f64> = (0..2).map(|i| s.t[(i, i)]).collect();
        d.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(d, vec![-2.0, -1.0]);
        assert_eq!(s.t[(1, 0)], 0.0);
    }

    #[test]
    fn random_matrices_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 3, 5, 8, 13, 32] {
            for _ in 0..10 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let s = schur_decompose(&a).unwrap();
                let scale = a.norm().max(1.0);
                assert!(
                    residual(&a, &s) <= 1e-10 * scale,
                    "n={n}: {}",
                    residual(&a, &s)
                );
                assert!(orth_err(&s.q) <= 1e-10);
                assert_quasi_triangular(&s.t);
            }
        }
    }

    #[test]
    fn rotation_has_complex_block() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = schur_decompose(&a).unwrap();
        let ev = s.eigenvalues();
        assert_eq!(s.blocks(), vec![(0, 2)]);
        for l in ev {
            assert!(l.re.abs() < 1e-15);
            assert!((l.im.abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn real_pair_is_split() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let s = schur_decompose(&a).unwrap();
        assert_eq!(s.t[(1, 0)], 0.0);
        assert!(residual(&a, &s) < 1e-13);
    }

    #[test]
    fn permutation_and_companion_matrices() {
        // Cyclic permutation: eigenvalues on the unit circle, a classic
        // stall case for unshifted QR.
        let n = 6;
        let p = DMatrix::from_fn(n, n, |i, j| if (i + 1) % n == j { 1.0 } else { 0.0 });
        let s = schur_decompose(&p).unwrap();
        assert!(residual(&p, &s) < 1e-12);
        for l in s.eigenvalues() {
            assert!((l.norm() - 1.0).abs() < 1e-10);
        }
        let zero = DMatrix::<f64>::zeros(4, 4);
        let s = schur_decompose(&zero).unwrap();
        assert_eq!(s.t, zero);
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(matches!(
            schur_decompose(&DMatrix::<f64>::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
        let mut a = DMatrix::<f64>::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(schur_decompose(&a), Err(Error::NonFinite(_))));
    }
}

//! Generator-network model: the susceptance Laplacian, the linearized swing
//! state space, and the projection that removes the uniform-angle mode.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_abscissa, symmetrize};

/// An unordered generator pair stored canonically with `i > j` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    // Field order gives the lexicographic (j, i) ordering used for tie-breaks.
    j: usize,
    i: usize,
}

impl EdgeId {
    /// Builds the canonical edge for nodes `a` and `b` (1-based, any order).
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::InvalidArgument(format!(
                "edge ({a},{b}): node indices are 1-based"
            )));
        }
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "edge ({a},{b}) is a self-loop"
            )));
        }
        Ok(Self {
            i: a.max(b),
            j: a.min(b),
        })
    }

    /// Larger endpoint (1-based).
    pub fn i(&self) -> usize {
        self.i
    }

    /// Smaller endpoint (1-based).
    pub fn j(&self) -> usize {
        self.j
    }

    pub(crate) fn hi0(&self) -> usize {
        self.i - 1
    }

    pub(crate) fn lo0(&self) -> usize {
        self.j - 1
    }

    pub fn check_bounds(&self, n: usize) -> Result<()> {
        if self.i > n {
            Err(Error::InvalidArgument(format!(
                "edge {self} is out of range for {n} generators"
            )))
        } else {
            Ok(())
        }
    }

    /// `V = E_jj − E_ji − E_ij + E_ii`, the Laplacian direction of this edge.
    pub fn direction(&self, n: usize) -> DMatrix<f64> {
        let mut v = DMatrix::zeros(n, n);
        let (a, b) = (self.lo0(), self.hi0());
        v[(a, a)] = 1.0;
        v[(b, b)] = 1.0;
        v[(a, b)] = -1.0;
        v[(b, a)] = -1.0;
        v
    }

    /// All pairs `i > j` over `n` nodes in lexicographic `(j, i)` order.
    pub fn all_pairs(n: usize) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for j in 1..=n {
            for i in j + 1..=n {
                out.push(EdgeId { i, j });
            }
        }
        out
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Kron-reduced admittance data at an operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedAdmittanceData {
    pub y_real: DMatrix<f64>,
    pub y_imag: DMatrix<f64>,
    /// q-axis voltages, per unit.
    pub e: DVector<f64>,
    /// Equilibrium rotor angles, radians.
    pub theta_eq: DVector<f64>,
}

impl ReducedAdmittanceData {
    pub fn n(&self) -> usize {
        self.e.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.y_real.shape() != (n, n)
            || self.y_imag.shape() != (n, n)
            || self.theta_eq.len() != n
        {
            return Err(Error::dim(format!(
                "admittance data must be {n}x{n} with {n} voltages and angles"
            )));
        }
        for (name, m) in [("y_real", &self.y_real), ("y_imag", &self.y_imag)] {
            let scale = m.amax().max(1.0);
            for r in 0..n {
                for c in 0..r {
                    if (m[(r, c)] - m[(c, r)]).abs() > 1e-12 * scale {
                        return Err(Error::InvalidNetwork(format!(
                            "{name} is not symmetric at ({},{})",
                            r + 1,
                            c + 1
                        )));
                    }
                }
            }
        }
        if let Some(k) = self.e.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::InvalidNetwork(format!(
                "q-axis voltage e[{}] must be positive",
                k + 1
            )));
        }
        Ok(())
    }

    /// Phase shift `φ_ab = −sign(a−b)·arctan(Re y_ab / Im y_ab)` for 0-based `a, b`.
    pub fn phase_shift(&self, a: usize, b: usize) -> f64 {
        let sign = (a as f64 - b as f64).signum();
        let re = self.y_real[(a, b)];
        let im = self.y_imag[(a, b)];
        if re == 0.0 {
            return 0.0;
        }
        -sign * (re / im).atan()
    }

    /// Off-diagonal susceptance-Laplacian entry for 0-based `a ≠ b`.
    pub fn laplacian_entry(&self, a: usize, b: usize) -> f64 {
        let re = self.y_real[(a, b)];
        let im = self.y_imag[(a, b)];
        let mag = re.hypot(im);
        if mag == 0.0 {
            return 0.0;
        }
        let phi = self.phase_shift(a, b);
        -mag * self.e[a] * self.e[b] * (self.theta_eq[a] - self.theta_eq[b] - phi).cos()
    }
}

/// Builds the susceptance Laplacian from reduced admittance data using the
/// sign-corrected phase shift, which keeps `L` symmetric.
pub fn laplacian_from_admittance(data: &ReducedAdmittanceData) -> Result<DMatrix<f64>> {
    data.validate()?;
    let n = data.n();
    let mut l = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a != b {
                l[(a, b)] = data.laplacian_entry(a, b);
            }
        }
    }
    let scale = l.amax().max(1.0);
    for a in 0..n {
        for b in 0..a {
            if (l[(a, b)] - l[(b, a)]).abs() > 1e-12 * scale {
                return Err(Error::ModelInconsistency(format!(
                    "Laplacian asymmetric at ({},{}): {} vs {}",
                    a + 1,
                    b + 1,
                    l[(a, b)],
                    l[(b, a)]
                )));
            }
            if l[(a, b)] > 1e-12 {
                return Err(Error::ModelInconsistency(format!(
                    "positive off-diagonal l[{}][{}] = {}; equilibrium angles push the coupling past 90°",
                    a + 1,
                    b + 1,
                    l[(a, b)]
                )));
            }
        }
    }
    for a in 0..n {
        let off: f64 = (0..n).filter(|&b| b != a).map(|b| l[(a, b)]).sum();
        l[(a, a)] = -off;
    }
    Ok(l)
}

/// Inertia, damping, and susceptance Laplacian for `N` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorNetwork {
    m: DVector<f64>,
    d: DVector<f64>,
    l: DMatrix<f64>,
    admittance: Option<ReducedAdmittanceData>,
}

/// What canonicalization changed when a raw Laplacian was ingested.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Canonicalization {
    pub max_asymmetry: f64,
    pub max_diagonal_shift: f64,
}

impl GeneratorNetwork {
    /// Validates every Laplacian and parameter invariant without modifying
    /// the input.
    pub fn new(m: Vec<f64>, d: Vec<f64>, l: DMatrix<f64>) -> Result<Self> {
        let net = Self {
            m: DVector::from_vec(m),
            d: DVector::from_vec(d),
            l,
            admittance: None,
        };
        net.validate()?;
        Ok(net)
    }

    /// Re-symmetrizes `L` and resets its diagonal to the negated off-diagonal
    /// row sums before validating. Printed matrices carry rounding noise.
    pub fn from_raw_laplacian(
        m: Vec<f64>,
        d: Vec<f64>,
        mut l: DMatrix<f64>,
    ) -> Result<(Self, Canonicalization)> {
        let n = l.nrows();
        if !l.is_square() {
            return Err(Error::dim(format!("L is {}x{}", l.nrows(), l.ncols())));
        }
        let mut report = Canonicalization {
            max_asymmetry: (&l - l.transpose()).amax(),
            ..Default::default()
        };
        symmetrize(&mut l);
        for a in 0..n {
            let off: f64 = (0..n).filter(|&b| b != a).map(|b| l[(a, b)]).sum();
            report.max_diagonal_shift = report.max_diagonal_shift.max((l[(a, a)] + off).abs());
            l[(a, a)] = -off;
        }
        Ok((Self::new(m, d, l)?, report))
    }

    pub fn from_admittance(m: Vec<f64>, d: Vec<f64>, data: ReducedAdmittanceData) -> Result<Self> {
        let l = laplacian_from_admittance(&data)?;
        let mut net = Self::new(m, d, l)?;
        net.admittance = Some(data);
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let n = self.m.len();
        if n < 2 {
            return Err(Error::InvalidNetwork(format!(
                "need at least 2 generators, got {n}"
            )));
        }
        if self.d.len() != n {
            return Err(Error::InvalidNetwork(format!(
                "damping has {} entries, inertia has {n}",
                self.d.len()
            )));
        }
        if self.l.shape() != (n, n) {
            return Err(Error::InvalidNetwork(format!(
                "L is {}x{}, expected {n}x{n}",
                self.l.nrows(),
                self.l.ncols()
            )));
        }
        for (name, v) in [("m", &self.m), ("d", &self.d)] {
            if let Some(k) = v.iter().position(|x| !(x.is_finite() && *x > 0.0)) {
                return Err(Error::InvalidNetwork(format!(
                    "{name}[{}] = {} must be positive",
                    k + 1,
                    v[k]
                )));
            }
        }
        if self.l.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidNetwork("L has non-finite entries".into()));
        }
        let scale = self.l.amax().max(1.0);
        for a in 0..n {
            for b in 0..a {
                if (self.l[(a, b)] - self.l[(b, a)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidNetwork(format!(
                        "L is not symmetric at l[{}][{}]",
                        a + 1,
                        b + 1
                    )));
                }
            }
            for b in 0..n {
                if a != b && self.l[(a, b)] > 1e-12 {
                    return Err(Error::InvalidNetwork(format!(
                        "L has a positive off-diagonal l[{}][{}] = {}",
                        a + 1,
                        b + 1,
                        self.l[(a, b)]
                    )));
                }
            }
            let row: f64 = self.l.row(a).sum();
            if row.abs() > 1e-10 * scale {
                return Err(Error::InvalidNetwork(format!(
                    "row {} of L sums to {row:e}, not zero",
                    a + 1
                )));
            }
        }
        let min_eig = self.l.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::InvalidNetwork(format!(
                "L is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn inertia(&self) -> &DVector<f64> {
        &self.m
    }

    pub fn damping(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn admittance(&self) -> Option<&ReducedAdmittanceData> {
        self.admittance.as_ref()
    }

    /// Edge weight `g_ji = −l_ji`.
    pub fn weight(&self, edge: EdgeId) -> f64 {
        -self.l[(edge.hi0(), edge.lo0())]
    }

    /// Same machines with a different Laplacian; the replacement is validated.
    pub fn with_laplacian(&self, l: DMatrix<f64>) -> Result<Self> {
        let mut net = Self::new(self.m.as_slice().to_vec(), self.d.as_slice().to_vec(), l)?;
        net.admittance = self.admittance.clone();
        Ok(net)
    }

    /// Edges with weight above `1e-12`, in lexicographic `(j, i)` order.
    pub fn support(&self) -> Vec<EdgeId> {
        EdgeId::all_pairs(self.n())
            .into_iter()
            .filter(|&e| self.weight(e) > 1e-12)
            .collect()
    }
}

/// Orthonormal basis `U` of the complement of `1_N` and `T = blockdiag(U, I_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub u: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

/// `U` is taken as columns `2..N` of the Householder reflector that maps
/// `1_N/√N` to `e₁`, so it is deterministic.
pub fn build_projection(n: usize) -> Result<Projection> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "projection needs N ≥ 2, got {n}"
        )));
    }
    let inv_sqrt = 1.0 / (n as f64).sqrt();
    let mut w = DVector::from_element(n, inv_sqrt);
    w[0] -= 1.0;
    let wtw = w.norm_squared();
    let reflector = DMatrix::<f64>::identity(n, n) - (&w * w.transpose()) * (2.0 / wtw);
    let u = reflector.columns(1, n - 1).into_owned();
    let mut t = DMatrix::zeros(2 * n, 2 * n - 1);
    t.view_mut((0, 0), (n, n - 1)).copy_from(&u);
    t.view_mut((n, n - 1), (n, n)).fill_with_identity();
    Ok(Projection { u, t })
}

/// The `(2N−1)`-dimensional swing model with the average angle removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub projection: Projection,
}

impl ReducedSystem {
    pub fn n_generators(&self) -> usize {
        self.b.ncols()
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `B Bᵀ`.
    pub fn input_gram(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose()
    }
}

/// Full rotor-angle/frequency state matrix `Ā = [[0, I], [−M⁻¹L, −M⁻¹D]]`.
pub fn full_state_matrix(m: &DVector<f64>, d: &DVector<f64>, l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.len();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        a[(r, n + r)] = 1.0;
        for c in 0..n {
            a[(n + r, c)] = -l[(r, c)] / m[r];
        }
        a[(n + r, n + r)] = -d[r] / m[r];
    }
    a
}

/// `A(L) = Tᵀ Ā(L) T` without any stability check. Affine in `L`.
pub fn reduced_state_matrix(
    m: &DVector<f64>,
    d: &DVector<f64>,
    l: &DMatrix<f64>,
    projection: &Projection,
) -> DMatrix<f64> {
    let t = &projection.t;
    t.transpose() * full_state_matrix(m, d, l) * t
}

fn reduced_input_matrix(m: &DVector<f64>, projection: &Projection) -> DMatrix<f64> {
    let n = m.len();
    let mut b_full = DMatrix::zeros(2 * n, n);
    for r in 0..n {
        b_full[(n + r, r)] = 1.0 / m[r];
    }
    projection.t.transpose() * b_full
}

/// Projects the swing model onto the complement of the average mode and
/// checks that the result is Hurwitz.
pub fn build_reduced_system(net: &GeneratorNetwork) -> Result<ReducedSystem> {
    build_reduced_system_with(net, net.laplacian())
}

/// Same as [`build_reduced_system`] with `L` replaced by `l`. The
/// replacement is not validated as a Laplacian.
pub fn build_reduced_system_with(
    net: &GeneratorNetwork,
    l: &DMatrix<f64>,
) -> Result<ReducedSystem> {
    let projection = build_projection(net.n())?;
    let a = reduced_state_matrix(net.inertia(), net.damping(), l, &projection);
    let abscissa = spectral_abscissa(&a)?;
    if !(abscissa < 0.0) {
        return Err(Error::Unstable { abscissa });
    }
    let b = reduced_input_matrix(net.inertia(), &projection);
    Ok(ReducedSystem { a, b, projection })
}

/// Recovers a modified admittance `ŷ_ji` realizing `l_ji − γ` for the edge,
/// parameterized by `ρ = tan|φ̂_ji|`.
pub fn recover_modified_admittance(
    data: &ReducedAdmittanceData,
    edge: EdgeId,
    gamma: f64,
    rho: f64,
) -> Result<(f64, f64)> {
    data.validate()?;
    edge.check_bounds(data.n())?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rho must be non-negative, got {rho}"
        )));
    }
    let (jj, ii) = (edge.lo0(), edge.hi0());
    let l_ji = data.laplacian_entry(jj, ii);
    let sign = (jj as f64 - ii as f64).signum();
    let denom_cos = (data.theta_eq[jj] - data.theta_eq[ii] + sign * rho.atan()).cos();
    // A non-positive cosine cannot reproduce a non-positive Laplacian entry.
    if denom_cos <= 1e-9 {
        return Err(Error::DegenerateEquilibrium(format!(
            "cos(θ_j − θ_i + sign(j−i)·atan ρ) = {denom_cos:e} for edge {edge}"
        )));
    }
    let denom = data.e[jj] * data.e[ii] * denom_cos;
    let norm = (rho * rho + 1.0).sqrt();
    let target = gamma - l_ji;
    Ok((rho / norm * target / denom, target / norm / denom))
}

//! Controllability Gramians, the three Gramian metrics, minimum-energy
//! steering, and damping ratios.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    matrix_exponential, schur_decompose, spd_inverse_and_logdet, Complex64, LyapunovSolver,
};
use crate::power::ReducedSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramianMetricKind {
    /// `tr W`
    Trace,
    /// `log det W`
    #[serde(rename = "logdet")]
    LogDet,
    /// `−tr W⁻¹`
    NegTraceInv,
}

impl GramianMetricKind {
    pub const ALL: [GramianMetricKind; 3] = [Self::Trace, Self::LogDet, Self::NegTraceInv];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Trace => "trace",
            Self::LogDet => "logdet",
            Self::NegTraceInv => "neg-trace-inv",
        }
    }
}

impl fmt::Display for GramianMetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GramianMetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(Self::Trace),
            "logdet" => Ok(Self::LogDet),
            "neg-trace-inv" => Ok(Self::NegTraceInv),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric '{other}' (expected trace, logdet or neg-trace-inv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    Infinite,
    Finite(f64),
}

/// All three metrics of one Gramian. The inverse-based ones are `None` when
/// the Gramian is not positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub trace: f64,
    pub logdet: Option<f64>,
    pub neg_trace_inv: Option<f64>,
}

impl MetricValues {
    pub fn get(&self, kind: GramianMetricKind) -> Option<f64> {
        match kind {
            GramianMetricKind::Trace => Some(self.trace),
            GramianMetricKind::LogDet => self.logdet,
            GramianMetricKind::NegTraceInv => self.neg_trace_inv,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramianResult {
    pub w: DMatrix<f64>,
    pub horizon: Horizon,
    pub metrics: MetricValues,
    /// False when Cholesky fails, i.e. the pair is numerically uncontrollable.
    pub positive_definite: bool,
}

impl GramianResult {
    fn from_w(w: DMatrix<f64>, horizon: Horizon) -> Self {
        let trace = w.trace();
        let (logdet, neg_trace_inv) = match spd_inverse_and_logdet(&w) {
            Ok((inv, ld)) => (Some(ld), Some(-inv.trace())),
            Err(_) => (None, None),
        };
        Self {
            positive_definite: logdet.is_some(),
            w,
            horizon,
            metrics: MetricValues {
                trace,
                logdet,
                neg_trace_inv,
            },
        }
    }

    pub fn metric(&self, kind: GramianMetricKind) -> Result<f64> {
        self.metrics.get(kind).ok_or(Error::NotPositiveDefinite)
    }
}

/// Solves `A W + W Aᵀ + B Bᵀ = 0`.
pub fn gramian_infinite(sys: &ReducedSystem) -> Result<GramianResult> {
    let solver = LyapunovSolver::new(&sys.a)?;
    gramian_with_solver(&solver, sys, Horizon::Infinite)
}

/// Finite-horizon Gramian `∫₀^t_f e^{At} B Bᵀ e^{Aᵀt} dt`, via the shifted
/// Lyapunov equation.
pub fn gramian_finite(sys: &ReducedSystem, t_f: f64) -> Result<GramianResult> {
    let solver = LyapunovSolver::new(&sys.a)?;
    gramian_with_solver(&solver, sys, Horizon::Finite(t_f))
}

pub fn gramian(sys: &ReducedSystem, horizon: Horizon) -> Result<GramianResult> {
    let solver = LyapunovSolver::new(&sys.a)?;
    gramian_with_solver(&solver, sys, horizon)
}

/// Gramian using a solver already bound to `sys.a`.
pub fn gramian_with_solver(
    solver: &LyapunovSolver,
    sys: &ReducedSystem,
    horizon: Horizon,
) -> Result<GramianResult> {
    let bbt = sys.input_gram();
    let q = match horizon {
        Horizon::Infinite => bbt,
        Horizon::Finite(t_f) => {
            if !(t_f > 0.0 && t_f.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "finite horizon must be positive, got {t_f}"
                )));
            }
            let e = matrix_exponential(&sys.a, t_f)?;
            let mut q = &bbt - &e * &bbt * e.transpose();
            crate::linalg::symmetrize(&mut q);
            q
        }
    };
    Ok(GramianResult::from_w(solver.solve(&q)?, horizon))
}

/// The default finite horizon `−1/α(A)`.
pub fn default_horizon(sys: &ReducedSystem) -> Result<f64> {
    let alpha = crate::linalg::spectral_abscissa(&sys.a)?;
    if !(alpha < 0.0) {
        return Err(Error::Unstable { abscissa: alpha });
    }
    Ok(-1.0 / alpha)
}

/// Evaluates `tr W`, `log det W` or `−tr W⁻¹`.
pub fn metric_value(w: &DMatrix<f64>, kind: GramianMetricKind) -> Result<f64> {
    match kind {
        GramianMetricKind::Trace => {
            if !w.is_square() {
                return Err(Error::dim("metric needs a square Gramian"));
            }
            Ok(w.trace())
        }
        GramianMetricKind::LogDet => Ok(spd_inverse_and_logdet(w)?.1),
        GramianMetricKind::NegTraceInv => Ok(-spd_inverse_and_logdet(w)?.0.trace()),
    }
}

fn check_state(sys: &ReducedSystem, x0: &DVector<f64>) -> Result<()> {
    if x0.len() != sys.dim() {
        return Err(Error::dim(format!(
            "state vector has length {}, expected {}",
            x0.len(),
            sys.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("state vector"));
    }
    Ok(())
}

/// Minimum input energy `x0ᵀ W⁻¹ x0` for the given horizon.
pub fn minimum_energy_cost(
    sys: &ReducedSystem,
    x0: &DVector<f64>,
    horizon: Horizon,
) -> Result<f64> {
    check_state(sys, x0)?;
    let g = gramian(sys, horizon)?;
    let (inv, _) = spd_inverse_and_logdet(&g.w)?;
    Ok(x0.dot(&(inv * x0)).max(0.0))
}

/// Precomputed pieces of the minimum-energy input that steers `x0` to the
/// origin over `[0, t_f]`.
#[derive(Debug, Clone)]
pub struct MinimumEnergyControl {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    t_f: f64,
    /// `W(t_f)⁻¹ e^{A t_f} x0`
    costate: DVector<f64>,
}

impl MinimumEnergyControl {
    pub fn new(sys: &ReducedSystem, x0: &DVector<f64>, t_f: f64) -> Result<Self> {
        check_state(sys, x0)?;
        let g = gramian_finite(sys, t_f)?;
        let (inv, _) = spd_inverse_and_logdet(&g.w)?;
        let costate = inv * (matrix_exponential(&sys.a, t_f)? * x0);
        Ok(Self {
            a: sys.a.clone(),
            b: sys.b.clone(),
            t_f,
            costate,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.t_f
    }

    /// `u(t) = −Bᵀ e^{Aᵀ(t_f − t)} W(t_f)⁻¹ e^{A t_f} x0`.
    pub fn input(&self, t: f64) -> Result<DVector<f64>> {
        if !(0.0..=self.t_f).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "time {t} outside [0, {}]",
                self.t_f
            )));
        }
        let e = matrix_exponential(&self.a, self.t_f - t)?;
        Ok(-(self.b.transpose() * (e.transpose() * &self.costate)))
    }
}

pub fn minimum_energy_input(
    sys: &ReducedSystem,
    x0: &DVector<f64>,
    t_f: f64,
    t: f64,
) -> Result<DVector<f64>> {
    MinimumEnergyControl::new(sys, x0, t_f)?.input(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingEntry {
    pub re: f64,
    pub im: f64,
    /// Damping ratio in percent.
    pub zeta: f64,
}

impl DampingEntry {
    pub fn from_pole(p: Complex64) -> Self {
        Self {
            re: p.re,
            im: p.im,
            zeta: damping_ratio(p),
        }
    }

    pub fn pole(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `100·(−Re p)/|p|`.
pub fn damping_ratio(p: Complex64) -> f64 {
    100.0 * (-p.re) / p.re.hypot(p.im)
}

/// Poles of `a` with their damping ratios, zero poles omitted, sorted by
/// `|Im p|` and then by `|Re p|`.
pub fn damping_report(a: &DMatrix<f64>) -> Result<Vec<DampingEntry>> {
    let eig = schur_decompose(a)?.eigenvalues();
    let zero_tol = 1e-12 * a.amax().max(1.0);
    let mut out: Vec<DampingEntry> = eig
        .into_iter()
        .filter(|p| p.norm() > zero_tol)
        .map(DampingEntry::from_pole)
        .collect();
    out.sort_by(|x, y| {
        x.im.abs()
            .total_cmp(&y.im.abs())
            .then(x.re.abs().total_cmp(&y.re.abs()))
            .then(y.im.total_cmp(&x.im))
    });
    Ok(out)
}

/// The oscillatory pair closest to the imaginary axis, reported by its
/// upper-half-plane member.
pub fn slow_mode(report: &[DampingEntry]) -> Option<DampingEntry> {
    report
        .iter()
        .filter(|e| e.im > 0.0)
        .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()))
        .copied()
}

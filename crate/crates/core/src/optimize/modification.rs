//! Budgeted edge modification: the penalized, parameterized objective and
//! its multi-start maximization.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nelder_mead::{nelder_mead_maximize, NelderMeadOptions, NelderMeadOutcome};
use crate::centrality::EcmContext;
use crate::error::{Error, Result};
use crate::gramian::{metric_value, GramianMetricKind};
use crate::linalg::{spectral_abscissa, LyapunovSolver};
use crate::power::{
    build_reduced_system, reduced_state_matrix, EdgeId, GeneratorNetwork, Projection,
};

pub const DEFAULT_XI: f64 = 1e10;

/// Maps the radial coordinate `κ` to a budget fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Parameterization {
    /// `sin(πκ/2)`
    #[default]
    Sin,
    /// `1/(1 + e^{−χκ})`
    Sigmoid { chi: f64 },
}

impl Parameterization {
    pub fn sigmoid() -> Self {
        Self::Sigmoid { chi: 1.0 }
    }

    fn radial(&self, kappa: f64) -> f64 {
        match *self {
            Self::Sin => (PI * kappa / 2.0).sin(),
            Self::Sigmoid { chi } => 1.0 / (1.0 + (-chi * kappa).exp()),
        }
    }

    /// Inverse of the radial map for a fraction in `[0, 1]`.
    fn kappa_for(&self, fraction: f64) -> f64 {
        let r = fraction.clamp(0.0, 1.0);
        match *self {
            Self::Sin => 2.0 / PI * r.asin(),
            Self::Sigmoid { chi } => {
                let r = r.clamp(1e-12, 1.0 - 1e-12);
                (r / (1.0 - r)).ln() / chi
            }
        }
    }
}

/// `C` with column `k` equal to `e_j − e_i` for the k-th edge.
pub fn incidence_matrix(n: usize, edges: &[EdgeId]) -> Result<DMatrix<f64>> {
    let mut c = DMatrix::zeros(n, edges.len());
    for (k, e) in edges.iter().enumerate() {
        e.check_bounds(n)?;
        c[(e.j() - 1, k)] = 1.0;
        c[(e.i() - 1, k)] = -1.0;
    }
    Ok(c)
}

fn check_lengths(edges: &[EdgeId], gamma: &DVector<f64>) -> Result<()> {
    if edges.len() != gamma.len() {
        return Err(Error::dim(format!(
            "{} edges but {} modification entries",
            edges.len(),
            gamma.len()
        )));
    }
    Ok(())
}

/// `Δ(γ) = Σ_k γ_k V_k`.
pub fn delta_matrix(n: usize, edges: &[EdgeId], gamma: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_lengths(edges, gamma)?;
    let mut delta = DMatrix::zeros(n, n);
    for (e, &g) in edges.iter().zip(gamma.iter()) {
        e.check_bounds(n)?;
        let (a, b) = (e.j() - 1, e.i() - 1);
        delta[(a, a)] += g;
        delta[(b, b)] += g;
        delta[(a, b)] -= g;
        delta[(b, a)] -= g;
    }
    Ok(delta)
}

/// `Δ(γ) = C diag(γ) Cᵀ`.
pub fn delta_matrix_incidence(
    n: usize,
    edges: &[EdgeId],
    gamma: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    check_lengths(edges, gamma)?;
    let c = incidence_matrix(n, edges)?;
    Ok(&c * DMatrix::from_diagonal(gamma) * c.transpose())
}

/// `γ = β·r(κ)·ν/‖ν‖` for `η = (ν; κ)`.
pub fn parameterize(
    eta: &DVector<f64>,
    beta: f64,
    param: Parameterization,
) -> Result<DVector<f64>> {
    if eta.len() < 2 {
        return Err(Error::dim("η needs at least one direction entry and κ"));
    }
    let s = eta.len() - 1;
    let nu = eta.rows(0, s);
    let norm = nu.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateDirection);
    }
    let kappa = eta[s];
    Ok(nu.into_owned() * (beta * param.radial(kappa) / norm))
}

/// A point `η` that parameterizes `gamma` exactly (up to rounding), or `None`
/// for `γ = 0` or a budget that cannot hold it.
pub fn eta_from_gamma(
    gamma: &DVector<f64>,
    beta: f64,
    param: Parameterization,
) -> Option<DVector<f64>> {
    let norm = gamma.norm();
    if !(norm > 0.0) || !(beta > 0.0) {
        return None;
    }
    let s = gamma.len();
    let mut eta = DVector::zeros(s + 1);
    eta.rows_mut(0, s).copy_from(&(gamma / norm));
    eta[s] = param.kappa_for(norm / beta);
    Some(eta)
}

/// Budget, metric and penalty shared by every edge set of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSettings {
    pub beta: f64,
    pub metric: GramianMetricKind,
    pub xi: f64,
    pub parameterization: Parameterization,
}

impl ProblemSettings {
    pub fn new(beta: f64, metric: GramianMetricKind) -> Self {
        Self {
            beta,
            metric,
            xi: DEFAULT_XI,
            parameterization: Parameterization::Sin,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "budget beta must be a finite non-negative number, got {}",
                self.beta
            )));
        }
        if !(self.xi >= 1e6) {
            return Err(Error::InvalidArgument(format!(
                "penalty xi must be at least 1e6, got {}",
                self.xi
            )));
        }
        if let Parameterization::Sigmoid { chi } = self.parameterization {
            if !(chi > 0.0 && chi.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "sigmoid chi must be positive, got {chi}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModificationProblem {
    net: GeneratorNetwork,
    edge_set: Vec<EdgeId>,
    settings: ProblemSettings,
}

impl ModificationProblem {
    pub fn new(
        net: GeneratorNetwork,
        edge_set: Vec<EdgeId>,
        settings: ProblemSettings,
    ) -> Result<Self> {
        settings.validate()?;
        if edge_set.is_empty() {
            return Err(Error::InvalidArgument(
                "edge set must contain at least one edge".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for e in &edge_set {
            e.check_bounds(net.n())?;
            if !seen.insert(*e) {
                return Err(Error::InvalidArgument(format!("edge {e} listed twice")));
            }
        }
        Ok(Self {
            net,
            edge_set,
            settings,
        })
    }

    pub fn net(&self) -> &GeneratorNetwork {
        &self.net
    }

    pub fn edge_set(&self) -> &[EdgeId] {
        &self.edge_set
    }

    pub fn settings(&self) -> &ProblemSettings {
        &self.settings
    }

    /// Current weights `g_ji` of the edge set.
    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.edge_set.len(),
            self.edge_set.iter().map(|&e| self.net.weight(e)),
        )
    }
}

/// Everything needed to evaluate the objective cheaply and from many threads.
struct Evaluator {
    n: usize,
    m: DVector<f64>,
    d: DVector<f64>,
    l: DMatrix<f64>,
    projection: Projection,
    bbt: DMatrix<f64>,
    edges: Vec<EdgeId>,
    weights: DVector<f64>,
    settings: ProblemSettings,
}

impl Evaluator {
    fn new(problem: &ModificationProblem) -> Result<Self> {
        let sys = build_reduced_system(&problem.net)?;
        Ok(Self {
            n: problem.net.n(),
            m: problem.net.inertia().clone(),
            d: problem.net.damping().clone(),
            l: problem.net.laplacian().clone(),
            bbt: sys.input_gram(),
            projection: sys.projection,
            edges: problem.edge_set.clone(),
            weights: problem.weights(),
            settings: problem.settings,
        })
    }

    fn bounds_hold(&self, gamma: &DVector<f64>, slack: f64) -> bool {
        gamma
            .iter()
            .zip(self.weights.iter())
            .all(|(g, w)| g + w >= -slack)
    }

    fn modified_laplacian(&self, gamma: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(&self.l + delta_matrix(self.n, &self.edges, gamma)?)
    }

    fn metric_at(&self, gamma: &DVector<f64>) -> Result<f64> {
        let l = self.modified_laplacian(gamma)?;
        let a = reduced_state_matrix(&self.m, &self.d, &l, &self.projection);
        let w = LyapunovSolver::new(&a)?.solve(&self.bbt)?;
        let h = metric_value(&w, self.settings.metric)?;
        if h.is_finite() {
            Ok(h)
        } else {
            Err(Error::NonFinite("metric value"))
        }
    }

    /// `h` when the modified network is stable and every bound holds.
    fn feasible_value(&self, gamma: &DVector<f64>) -> Option<f64> {
        if !self.bounds_hold(gamma, 0.0) {
            return None;
        }
        self.metric_at(gamma).ok()
    }

    fn objective(&self, eta: &DVector<f64>) -> f64 {
        parameterize(eta, self.settings.beta, self.settings.parameterization)
            .ok()
            .and_then(|g| self.feasible_value(&g))
            .unwrap_or(-self.settings.xi)
    }
}

/// `h` at the modified network when feasible, `−ξ` otherwise. Never fails.
pub fn penalized_objective(problem: &ModificationProblem, eta: &DVector<f64>) -> f64 {
    match Evaluator::new(problem) {
        Ok(ev) => ev.objective(eta),
        Err(_) => -problem.settings.xi,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of starting points; the first eight follow a fixed schedule.
    pub restarts: usize,
    pub seed: u64,
    #[serde(skip)]
    pub nelder_mead: NelderMeadOptions,
    /// A previous solution to start from, e.g. the optimum at a smaller budget.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            nelder_mead: NelderMeadOptions::default(),
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModificationResult {
    pub edge_set: Vec<EdgeId>,
    pub settings: ProblemSettings,
    pub gamma: DVector<f64>,
    pub delta: DMatrix<f64>,
    pub l_modified: DMatrix<f64>,
    pub metric_before: f64,
    pub metric_after: f64,
    pub improvement_j: f64,
    pub feasible: bool,
    pub spectral_abscissa_after: f64,
    /// Nelder–Mead iterations of the winning start.
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Index of the winning start, `None` when falling back to `γ = 0`.
    pub winning_start: Option<usize>,
}

/// `100·(after − before)/|before|`.
pub fn improvement_j(before: f64, after: f64) -> Result<f64> {
    if !(before.abs() >= 1e-300) {
        return Err(Error::DivisionDegeneracy(before));
    }
    Ok(100.0 * (after - before) / before.abs())
}

fn unit_or_none(v: DVector<f64>) -> Option<DVector<f64>> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

fn starting_points(
    problem: &ModificationProblem,
    config: &OptimizerConfig,
    gradient: Option<DVector<f64>>,
) -> Result<Vec<DVector<f64>>> {
    let s = problem.edge_set.len();
    let kappa0 = 0.5;
    let param = problem.settings.parameterization;
    let with_kappa = |nu: &DVector<f64>| {
        let mut eta = DVector::zeros(s + 1);
        eta.rows_mut(0, s).copy_from(nu);
        eta[s] = kappa0;
        eta
    };

    let mut starts = Vec::new();
    if let Some(ws) = &config.warm_start {
        if ws.len() != s {
            return Err(Error::dim(format!(
                "warm start has {} entries, edge set has {s}",
                ws.len()
            )));
        }
        if let Some(eta) = eta_from_gamma(
            &DVector::from_column_slice(ws),
            problem.settings.beta,
            param,
        ) {
            starts.push(eta);
        }
    }

    let mut schedule = vec![Some(DVector::from_element(s, 1.0 / (s as f64).sqrt()))];
    let grad = gradient.and_then(unit_or_none);
    schedule.push(grad.clone());
    schedule.push(grad.map(|g| -g));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let random = config.restarts.max(1).saturating_sub(3).max(5);
    for _ in 0..random {
        let nu = loop {
            let v = DVector::from_fn(s, |_, _| StandardNormal.sample(&mut rng));
            if let Some(u) = unit_or_none(v) {
                break u;
            }
        };
        schedule.push(Some(nu));
    }
    starts.extend(
        schedule
            .into_iter()
            .take(config.restarts.max(1))
            .flatten()
            .map(|nu| with_kappa(&nu)),
    );
    Ok(starts)
}

/// Maximizes the metric over `Δ(γ)` on the problem's edge set with a
/// multi-start Nelder–Mead search. The result is never worse than `γ = 0`.
pub fn optimize_modification(
    problem: &ModificationProblem,
    config: &OptimizerConfig,
) -> Result<ModificationResult> {
    let sys = build_reduced_system(&problem.net)?;
    let eval = Evaluator::new(problem)?;
    let s = problem.edge_set.len();
    let zero = DVector::zeros(s);
    let h_before = eval.metric_at(&zero)?;
    let settings = problem.settings;

    let mut best: Option<(usize, NelderMeadOutcome)> = None;
    if settings.beta > 0.0 {
        let gradient = EcmContext::new(&sys, &problem.net).ok().and_then(|ctx| {
            problem
                .edge_set
                .iter()
                .map(|&e| ctx.entry(e, settings.metric))
                .collect::<Result<Vec<_>>>()
                .ok()
                .map(DVector::from_vec)
        });
        let starts = starting_points(problem, config, gradient)?;
        let outcomes: Vec<NelderMeadOutcome> = starts
            .par_iter()
            .map(|eta0| nelder_mead_maximize(|eta| eval.objective(eta), eta0, &config.nelder_mead))
            .collect();
        for (k, out) in outcomes.into_iter().enumerate() {
            if out.f <= -settings.xi {
                continue;
            }
            if best.as_ref().is_none_or(|(_, b)| out.f > b.f) {
                best = Some((k, out));
            }
        }
    }

    let mut chosen = best.and_then(|(k, out)| {
        let gamma = parameterize(&out.x, settings.beta, settings.parameterization).ok()?;
        let h = eval.feasible_value(&gamma)?;
        (h >= h_before).then_some((k, out, gamma, h))
    });
    if chosen
        .as_ref()
        .is_some_and(|(_, _, g, _)| g.norm() > settings.beta + 1e-9)
    {
        chosen = None;
    }

    let (winning_start, iterations, evaluations, converged, gamma, h_after) = match chosen {
        Some((k, out, gamma, h)) => (
            Some(k),
            out.iterations,
            out.evaluations,
            out.converged,
            gamma,
            h,
        ),
        None => (None, 0, 0, true, zero, h_before),
    };
    let delta = delta_matrix(problem.net.n(), &problem.edge_set, &gamma)?;
    let l_modified = problem.net.laplacian() + &delta;
    let a_after = reduced_state_matrix(
        problem.net.inertia(),
        problem.net.damping(),
        &l_modified,
        &eval.projection,
    );
    let alpha = spectral_abscissa(&a_after)?;
    let feasible =
        alpha < 0.0 && gamma.norm() <= settings.beta + 1e-9 && eval.bounds_hold(&gamma, 1e-9);
    Ok(ModificationResult {
        edge_set: problem.edge_set.clone(),
        settings,
        improvement_j: improvement_j(h_before, h_after)?,
        gamma,
        delta,
        l_modified,
        metric_before: h_before,
        metric_after: h_after,
        feasible,
        spectral_abscissa_after: alpha,
        iterations,
        evaluations,
        converged,
        winning_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ieee9;
    use crate::gramian::gramian_infinite;
    use crate::power::build_projection;
    use proptest::prelude::*;

    fn edge(a: usize, b: usize) -> EdgeId {
        EdgeId::new(a, b).unwrap()
    }

    fn problem(edges: Vec<EdgeId>, beta: f64, metric: GramianMetricKind) -> ModificationProblem {
        ModificationProblem::new(ieee9(), edges, ProblemSettings::new(beta, metric)).unwrap()
    }

    #[test]
    fn delta_constructions() {
        let e = vec![edge(2, 1)];
        assert_eq!(
            delta_matrix(3, &e, &DVector::zeros(1)).unwrap(),
            DMatrix::zeros(3, 3)
        );
        let d = delta_matrix(3, &e, &DVector::from_element(1, 0.7)).unwrap();
        let mut expect = DMatrix::zeros(3, 3);
        expect
            .view_mut((0, 0), (2, 2))
            .copy_from(&(edge(2, 1).direction(2) * 0.7));
        assert_eq!(d, expect);
        assert!(delta_matrix(3, &e, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn parameterize_closed_forms() {
        let beta = 2.0;
        let eta = DVector::from_vec(vec![1.0, 0.0, 1.0]);
        let g = parameterize(&eta, beta, Parameterization::Sin).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-15 && g[1] == 0.0);
        let eta = DVector::from_vec(vec![0.3, -0.4, 0.0]);
        assert_eq!(
            parameterize(&eta, beta, Parameterization::Sin)
                .unwrap()
                .norm(),
            0.0
        );
        let h = 0.5f64.sqrt();
        let eta = DVector::from_vec(vec![h, h, 1.0 / 3.0]);
        let g = parameterize(&eta, beta, Parameterization::Sin).unwrap();
        assert!((g.norm() - beta / 2.0).abs() < 1e-15);
        let eta = DVector::from_vec(vec![0.0, 0.0, 0.5]);
        assert_eq!(
            parameterize(&eta, beta, Parameterization::Sin),
            Err(Error::DegenerateDirection)
        );
        let g = parameterize(
            &DVector::from_vec(vec![1.0, 0.0]),
            beta,
            Parameterization::sigmoid(),
        )
        .unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eta_round_trip() {
        for param in [Parameterization::Sin, Parameterization::sigmoid()] {
            let gamma = DVector::from_vec(vec![0.3, -0.2]);
            let eta = eta_from_gamma(&gamma, 1.0, param).unwrap();
            let back = parameterize(&eta, 1.0, param).unwrap();
            assert!((back - &gamma).amax() < 1e-12);
        }
        assert!(eta_from_gamma(&DVector::zeros(2), 1.0, Parameterization::Sin).is_none());
    }

    #[test]
    fn objective_at_zero_is_unmodified_metric() {
        for k in GramianMetricKind::ALL {
            let p = problem(vec![edge(3, 1), edge(2, 1)], 1.0, k);
            let eta = DVector::from_vec(vec![0.6, 0.8, 0.0]);
            let w = gramian_infinite(&build_reduced_system(&ieee9()).unwrap()).unwrap();
            assert_eq!(penalized_objective(&p, &eta), w.metric(k).unwrap());
        }
    }

    #[test]
    fn bound_violation_is_penalized() {
        // g_21 = 0.9498, so a full budget of 2 pointing down cuts the edge below zero.
        let p = problem(vec![edge(2, 1)], 2.0, GramianMetricKind::Trace);
        let eta = DVector::from_vec(vec![-1.0, 1.0]);
        assert_eq!(penalized_objective(&p, &eta), -DEFAULT_XI);
    }

    #[test]
    fn destabilizing_modification_is_penalized() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let net = GeneratorNetwork::new(vec![1.0, 1.0], vec![1.0, 1.0], l).unwrap();
        let settings = ProblemSettings::new(2.0, GramianMetricKind::Trace);
        let p = ModificationProblem::new(net.clone(), vec![edge(2, 1)], settings).unwrap();
        // γ = −2 flips the coupling sign.
        let eta = DVector::from_vec(vec![-1.0, 1.0]);
        let gamma = parameterize(&eta, 2.0, Parameterization::Sin).unwrap();
        let a = reduced_state_matrix(
            net.inertia(),
            net.damping(),
            &(net.laplacian() + delta_matrix(2, p.edge_set(), &gamma).unwrap()),
            &build_projection(2).unwrap(),
        );
        assert!(spectral_abscissa(&a).unwrap() >= 0.0);
        let ev = Evaluator::new(&p).unwrap();
        assert!(matches!(ev.metric_at(&gamma), Err(Error::Unstable { .. })));
        assert_eq!(penalized_objective(&p, &eta), -DEFAULT_XI);
        let half = DVector::from_vec(vec![-1.0, 0.2]);
        assert!(penalized_objective(&p, &half) > -DEFAULT_XI);
    }

    #[test]
    fn zero_budget_is_identity() {
        let p = problem(vec![edge(3, 1)], 0.0, GramianMetricKind::LogDet);
        let r = optimize_modification(&p, &OptimizerConfig::default()).unwrap();
        assert_eq!(r.gamma, DVector::zeros(1));
        assert_eq!(r.improvement_j, 0.0);
        assert!(r.feasible);
    }

    #[test]
    fn nine_bus_logdet_single_edge() {
        let p = problem(vec![edge(3, 1)], 1.0, GramianMetricKind::LogDet);
        let r = optimize_modification(&p, &OptimizerConfig::default()).unwrap();
        assert!(r.feasible);
        assert!(
            (r.improvement_j - 3.1898).abs() < 0.05 * 3.1898,
            "{}",
            r.improvement_j
        );
        assert!(r.gamma.norm() <= 1.0 + 1e-9);
        assert!(
            (&r.delta - delta_matrix_incidence(3, &r.edge_set, &r.gamma).unwrap()).amax() < 1e-12
        );
    }

    #[test]
    fn restarts_are_deterministic() {
        let p = problem(
            vec![edge(2, 1), edge(3, 2)],
            0.8,
            GramianMetricKind::NegTraceInv,
        );
        let cfg = OptimizerConfig {
            seed: 42,
            ..Default::default()
        };
        let a = optimize_modification(&p, &cfg).unwrap();
        let b = optimize_modification(&p, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn start_schedule() {
        let p = problem(vec![edge(2, 1), edge(3, 1)], 1.0, GramianMetricKind::Trace);
        let grad = Some(DVector::from_vec(vec![3.0, -4.0]));
        let starts = starting_points(&p, &OptimizerConfig::default(), grad.clone()).unwrap();
        assert_eq!(starts.len(), 8);
        assert!((starts[1][0] - 0.6).abs() < 1e-15 && (starts[2][1] - 0.8).abs() < 1e-15);
        assert!(starts.iter().all(|s| s[2] == 0.5));
        let few = OptimizerConfig {
            restarts: 2,
            ..Default::default()
        };
        assert_eq!(starting_points(&p, &few, grad).unwrap().len(), 2);
        let no_grad = starting_points(&p, &OptimizerConfig::default(), None).unwrap();
        assert_eq!(no_grad.len(), 6);
        let warm = OptimizerConfig {
            warm_start: Some(vec![0.1, 0.2]),
            ..Default::default()
        };
        let ws = starting_points(&p, &warm, None).unwrap();
        assert_eq!(ws.len(), 7);
        let g = parameterize(&ws[0], 1.0, Parameterization::Sin).unwrap();
        assert!((g - DVector::from_vec(vec![0.1, 0.2])).amax() < 1e-12);
    }

    #[test]
    fn improvement_measure() {
        assert_eq!(improvement_j(3.0, 3.0).unwrap(), 0.0);
        assert_eq!(improvement_j(-10.0, -5.0).unwrap(), 50.0);
        assert!(matches!(
            improvement_j(0.0, 1.0),
            Err(Error::DivisionDegeneracy(_))
        ));
    }

    #[test]
    fn invalid_problems_are_rejected() {
        let s = ProblemSettings::new(1.0, GramianMetricKind::Trace);
        assert!(ModificationProblem::new(ieee9(), vec![], s).is_err());
        assert!(ModificationProblem::new(ieee9(), vec![edge(2, 1), edge(2, 1)], s).is_err());
        assert!(ModificationProblem::new(ieee9(), vec![edge(4, 1)], s).is_err());
        let bad = ProblemSettings { beta: -1.0, ..s };
        assert!(ModificationProblem::new(ieee9(), vec![edge(2, 1)], bad).is_err());
        let low_xi = ProblemSettings { xi: 10.0, ..s };
        assert!(ModificationProblem::new(ieee9(), vec![edge(2, 1)], low_xi).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn delta_routes_agree(gamma in proptest::collection::vec(-2.0f64..2.0, 6)) {
            let edges = EdgeId::all_pairs(4);
            let g = DVector::from_vec(gamma);
            let a = delta_matrix(4, &edges, &g).unwrap();
            let b = delta_matrix_incidence(4, &edges, &g).unwrap();
            prop_assert!((&a - &b).amax() <= 1e-12);
            prop_assert!((&a - a.transpose()).amax() == 0.0);
            for r in 0..4 {
                prop_assert!(a.row(r).sum().abs() <= 1e-12);
            }
        }

        #[test]
        fn parameterized_norm_within_budget(
            nu in proptest::collection::vec(-3.0f64..3.0, 3),
            kappa in -5.0f64..5.0,
            beta in 0.0f64..4.0,
        ) {
            let mut v = nu.clone();
            v.push(kappa);
            let eta = DVector::from_vec(v);
            prop_assume!(DVector::from_vec(nu).norm() > 1e-9);
            for param in [Parameterization::Sin, Parameterization::sigmoid()] {
                let g = parameterize(&eta, beta, param).unwrap();
                prop_assert!(g.norm() <= beta * (1.0 + 1e-15));
            }
        }
    }
}

//! Gramian-based edge centrality (ECM) and the nearest-neighbor baseline.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gramian::GramianMetricKind;
use crate::linalg::{spd_inverse_and_logdet, LyapunovSolver};
use crate::power::{EdgeId, GeneratorNetwork, ReducedSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateProvenance {
    AllPairs,
    LaplacianSupport,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEdgeSet {
    edges: Vec<EdgeId>,
    provenance: CandidateProvenance,
}

impl CandidateEdgeSet {
    pub fn all_pairs(n: usize) -> Self {
        Self {
            edges: EdgeId::all_pairs(n),
            provenance: CandidateProvenance::AllPairs,
        }
    }

    /// Edges with `g_ji > 1e-12`.
    pub fn laplacian_support(net: &GeneratorNetwork) -> Self {
        Self {
            edges: net.support(),
            provenance: CandidateProvenance::LaplacianSupport,
        }
    }

    /// User-chosen edges; must be distinct and within `n` nodes. Order is kept.
    pub fn explicit(edges: Vec<EdgeId>, n: usize) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidArgument("candidate edge set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            e.check_bounds(n)?;
            if !seen.insert(*e) {
                return Err(Error::InvalidArgument(format!("edge {e} listed twice")));
            }
        }
        Ok(Self {
            edges,
            provenance: CandidateProvenance::Explicit,
        })
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn provenance(&self) -> CandidateProvenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEdge {
    pub edge: EdgeId,
    /// Signed score (υ for ECM, λ for NNEC).
    pub value: f64,
    /// Ranking key (|υ| for ECM, λ for NNEC).
    pub score: f64,
}

/// Sorts by score descending; ties go to the lexicographically smaller `(j, i)`.
pub fn rank_edges(mut entries: Vec<RankedEdge>) -> Vec<RankedEdge> {
    entries.sort_by(|a, b| match b.score.total_cmp(&a.score) {
        Ordering::Equal => a.edge.cmp(&b.edge),
        o => o,
    });
    entries
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCentralityReport {
    pub metric: GramianMetricKind,
    pub candidate: CandidateEdgeSet,
    /// ECM, mirrored, zero outside the candidate set.
    pub upsilon: DMatrix<f64>,
    pub impact: DMatrix<f64>,
    pub ranking: Vec<RankedEdge>,
    /// Sorted impacts τ₁ ≥ τ₂ ≥ …
    pub tau: Vec<f64>,
}

impl EdgeCentralityReport {
    pub fn value(&self, edge: EdgeId) -> f64 {
        self.upsilon[(edge.i() - 1, edge.j() - 1)]
    }
}

/// `F_ji = Tᵀ [[0, 0], [−M⁻¹ V_ji, 0]] T`, the derivative of `A` along `g_ji`.
pub fn edge_direction_matrix(
    sys: &ReducedSystem,
    net: &GeneratorNetwork,
    edge: EdgeId,
) -> Result<DMatrix<f64>> {
    let n = net.n();
    edge.check_bounds(n)?;
    let m = net.inertia();
    let mut g = DMatrix::zeros(2 * n, 2 * n);
    let (a, b) = (edge.j() - 1, edge.i() - 1);
    for (r, c, v) in [(a, a, 1.0), (b, b, 1.0), (a, b, -1.0), (b, a, -1.0)] {
        g[(n + r, c)] = -v / m[r];
    }
    let t = &sys.projection.t;
    Ok(t.transpose() * g * t)
}

/// Shared state for evaluating ECM entries of one system: the factored
/// Lyapunov operator and powers of `W⁻¹`.
#[derive(Debug, Clone)]
pub struct EcmContext<'a> {
    sys: &'a ReducedSystem,
    net: &'a GeneratorNetwork,
    solver: LyapunovSolver,
    w: DMatrix<f64>,
    w_inv: DMatrix<f64>,
    w_inv2: DMatrix<f64>,
}

impl<'a> EcmContext<'a> {
    pub fn new(sys: &'a ReducedSystem, net: &'a GeneratorNetwork) -> Result<Self> {
        let solver = LyapunovSolver::new(&sys.a)?;
        let w = solver.solve(&sys.input_gram())?;
        Self::with_gramian(sys, net, solver, w)
    }

    fn with_gramian(
        sys: &'a ReducedSystem,
        net: &'a GeneratorNetwork,
        solver: LyapunovSolver,
        w: DMatrix<f64>,
    ) -> Result<Self> {
        let (w_inv, _) = spd_inverse_and_logdet(&w)?;
        let w_inv2 = &w_inv * &w_inv;
        Ok(Self {
            sys,
            net,
            solver,
            w,
            w_inv,
            w_inv2,
        })
    }

    pub fn gramian(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `X` solving `A X + X Aᵀ + F W + W Fᵀ = 0`, the Gramian derivative.
    pub fn gramian_derivative(&self, edge: EdgeId) -> Result<DMatrix<f64>> {
        let f = edge_direction_matrix(self.sys, self.net, edge)?;
        let fw = &f * &self.w;
        let q = &fw + fw.transpose();
        self.solver.solve(&q)
    }

    pub fn entry(&self, edge: EdgeId, metric: GramianMetricKind) -> Result<f64> {
        let x = self.gramian_derivative(edge)?;
        Ok(self.contract(&x, metric))
    }

    /// All three metric sensitivities from one solve.
    pub fn entries(&self, edge: EdgeId) -> Result<[f64; 3]> {
        let x = self.gramian_derivative(edge)?;
        Ok(GramianMetricKind::ALL.map(|k| self.contract(&x, k)))
    }

    fn contract(&self, x: &DMatrix<f64>, metric: GramianMetricKind) -> f64 {
        match metric {
            GramianMetricKind::Trace => x.trace(),
            GramianMetricKind::LogDet => self.w_inv.dot(x),
            GramianMetricKind::NegTraceInv => self.w_inv2.dot(x),
        }
    }
}

/// Sensitivity `∂h/∂g_ji` of the metric to one edge weight, given the
/// infinite-horizon Gramian `w` of `sys`.
pub fn ecm_entry(
    sys: &ReducedSystem,
    net: &GeneratorNetwork,
    w: &DMatrix<f64>,
    edge: EdgeId,
    metric: GramianMetricKind,
) -> Result<f64> {
    let solver = LyapunovSolver::new(&sys.a)?;
    EcmContext::with_gramian(sys, net, solver, w.clone())?.entry(edge, metric)
}

fn assemble_report(
    n: usize,
    metric: GramianMetricKind,
    candidate: &CandidateEdgeSet,
    values: &[f64],
) -> EdgeCentralityReport {
    let mut upsilon = DMatrix::zeros(n, n);
    let mut entries = Vec::with_capacity(values.len());
    for (&edge, &v) in candidate.edges().iter().zip(values) {
        let (a, b) = (edge.i() - 1, edge.j() - 1);
        upsilon[(a, b)] = v;
        upsilon[(b, a)] = v;
        entries.push(RankedEdge {
            edge,
            value: v,
            score: v.abs(),
        });
    }
    let ranking = rank_edges(entries);
    let tau = ranking.iter().map(|r| r.score).collect();
    EdgeCentralityReport {
        metric,
        candidate: candidate.clone(),
        impact: upsilon.abs(),
        upsilon,
        ranking,
        tau,
    }
}

fn check_candidate(net: &GeneratorNetwork, candidate: &CandidateEdgeSet) -> Result<()> {
    if candidate.is_empty() {
        return Err(Error::InvalidArgument("candidate edge set is empty".into()));
    }
    candidate
        .edges()
        .iter()
        .try_for_each(|e| e.check_bounds(net.n()))
}

/// ECM over the candidate set; edges are solved in parallel.
pub fn build_ecm(
    sys: &ReducedSystem,
    net: &GeneratorNetwork,
    candidate: &CandidateEdgeSet,
    metric: GramianMetricKind,
) -> Result<EdgeCentralityReport> {
    check_candidate(net, candidate)?;
    let ctx = EcmContext::new(sys, net)?;
    let values = candidate
        .edges()
        .par_iter()
        .map(|&e| ctx.entry(e, metric))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(net.n(), metric, candidate, &values))
}

/// Reports for all three metrics, sharing one derivative solve per edge.
pub fn build_ecm_all(
    sys: &ReducedSystem,
    net: &GeneratorNetwork,
    candidate: &CandidateEdgeSet,
) -> Result<[EdgeCentralityReport; 3]> {
    check_candidate(net, candidate)?;
    let ctx = EcmContext::new(sys, net)?;
    let values = candidate
        .edges()
        .par_iter()
        .map(|&e| ctx.entries(e))
        .collect::<Result<Vec<_>>>()?;
    Ok([0, 1, 2].map(|k| {
        let v: Vec<f64> = values.iter().map(|e| e[k]).collect();
        assemble_report(net.n(), GramianMetricKind::ALL[k], candidate, &v)
    }))
}

/// The first `s` ranked edges.
pub fn select_edge_set(ranking: &[RankedEdge], s: usize) -> Result<Vec<EdgeId>> {
    if s == 0 || s > ranking.len() {
        return Err(Error::InvalidArgument(format!(
            "s = {s} must be between 1 and {}",
            ranking.len()
        )));
    }
    Ok(ranking[..s].iter().map(|r| r.edge).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnecReport {
    pub lambda: DMatrix<f64>,
    pub ranking: Vec<RankedEdge>,
}

/// `λ_ji = ((ρ_j + ρ_i − 2g_ji)/(|ρ_j − ρ_i| + 1))·g_ji` on the Laplacian
/// support, with `ρ` the node strengths.
pub fn nnec_report(net: &GeneratorNetwork) -> NnecReport {
    let n = net.n();
    let l = net.laplacian();
    let strength: Vec<f64> = (0..n)
        .map(|a| (0..n).filter(|&b| b != a).map(|b| -l[(a, b)]).sum())
        .collect();
    let mut lambda = DMatrix::zeros(n, n);
    let mut entries = Vec::new();
    for edge in net.support() {
        let (a, b) = (edge.j() - 1, edge.i() - 1);
        let g = net.weight(edge);
        let v =
            (strength[a] + strength[b] - 2.0 * g) / ((strength[a] - strength[b]).abs() + 1.0) * g;
        lambda[(a, b)] = v;
        lambda[(b, a)] = v;
        entries.push(RankedEdge {
            edge,
            value: v,
            score: v,
        });
    }
    NnecReport {
        lambda,
        ranking: rank_edges(entries),
    }
}

//! Controllability-Gramian edge centrality for multimachine power networks,
//! and budgeted edge modifications that improve Gramian metrics.
//!
//! The usual pipeline is [`GeneratorNetwork`] → [`build_reduced_system`] →
//! [`build_ecm`] → [`select_edge_set`] → [`optimize_modification`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod centrality;
pub mod error;
pub mod fixtures;
pub mod gramian;
pub mod linalg;
pub mod optimize;
pub mod power;

pub use nalgebra::{DMatrix, DVector};

pub use centrality::{
    build_ecm, build_ecm_all, ecm_entry, edge_direction_matrix, nnec_report, rank_edges,
    select_edge_set, CandidateEdgeSet, CandidateProvenance, EcmContext, EdgeCentralityReport,
    NnecReport, RankedEdge,
};
pub use error::{Error, Result};
pub use gramian::{
    damping_ratio, damping_report, default_horizon, gramian, gramian_finite, gramian_infinite,
    metric_value, minimum_energy_cost, minimum_energy_input, slow_mode, DampingEntry,
    GramianMetricKind, GramianResult, Horizon, MetricValues, MinimumEnergyControl,
};
pub use linalg::{Complex64, SpectralSummary};
pub use optimize::{
    brute_force_oracle, delta_matrix, improvement_j, optimize_modification, parameterize,
    penalized_objective, random_edge_set, CombinationResult, ModificationProblem,
    ModificationResult, OptimizerConfig, OracleOptions, OracleSummary, Parameterization,
    ProblemSettings, DEFAULT_COMBINATION_CAP,
};
pub use power::{
    build_projection, build_reduced_system, build_reduced_system_with, laplacian_from_admittance,
    recover_modified_admittance, Canonicalization, EdgeId, GeneratorNetwork, Projection,
    ReducedAdmittanceData, ReducedSystem,
};

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

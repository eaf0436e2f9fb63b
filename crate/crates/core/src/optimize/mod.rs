//! Edge-modification optimization and its brute-force reference.

mod modification;
mod nelder_mead;
mod oracle;

pub use modification::{
    delta_matrix, delta_matrix_incidence, eta_from_gamma, improvement_j, incidence_matrix,
    optimize_modification, parameterize, penalized_objective, ModificationProblem,
    ModificationResult, OptimizerConfig, Parameterization, ProblemSettings, DEFAULT_XI,
};
pub use nelder_mead::{nelder_mead_maximize, NelderMeadOptions, NelderMeadOutcome};
pub use oracle::{
    binomial, brute_force_oracle, combinations, near_optimality, random_edge_set, CandidateScore,
    CombinationResult, OracleOptions, OracleSummary, DEFAULT_COMBINATION_CAP,
};

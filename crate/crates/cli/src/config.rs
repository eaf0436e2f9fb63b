//! Command-line arguments and the run configuration embedded in every report.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecmgrid_core::{
    CandidateEdgeSet, EdgeId, GeneratorNetwork, GramianMetricKind, Parameterization,
    DEFAULT_COMBINATION_CAP,
};
use serde::{Serialize, Serializer};

use crate::error::{CliError, CliResult};

/// Worker-count override for the parallel parts (ECM, multi-start, oracle).
pub const WORKERS_ENV: &str = "ECMGRID_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "ecmgrid",
    version,
    about = "Gramian edge centrality and budgeted edge modification for power networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank candidate edges by ECM and by NNEC.
    Analyze(RunArgs),
    /// Optimize a modification of the top-s ECM edges.
    Modify(ModifyArgs),
    /// Optimize every s-subset of the candidate set and score the ECM choice.
    Oracle(OracleArgs),
    /// Sample minimum control energies and compare with the Gramian traces.
    Energy(EnergyArgs),
    /// Pole and damping-ratio table, optionally against a modified network.
    Damping(DampingArgs),
    /// Warm-started budget sweep of the improvement J.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Network file (.toml or .json), or `ieee9` for the bundled system.
    pub network: String,
    #[arg(long, default_value = "logdet", value_parser = parse_metric)]
    pub metric: GramianMetricKind,
    /// Number of edges to modify.
    #[arg(long, default_value_t = 1)]
    pub s: usize,
    /// Euclidean budget on the edge modifications.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// `laplacian`, `all-pairs`, or an explicit list such as `2-1,3-1`.
    #[arg(long, default_value = "laplacian")]
    pub candidate: CandidateArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Finite horizon for energy reports: `auto` (−1/α) or a positive number.
    #[arg(long, default_value = "auto")]
    pub tf: TfArg,
    /// Number of optimizer starting points.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    #[arg(long = "param", value_enum, default_value_t = ParamArg::Sin)]
    pub param: ParamArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Directory for the report, plot data and any derived network files.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModifyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Modify these edges instead of the top-s ECM edges.
    #[arg(long)]
    pub edges: Option<EdgeList>,
    /// `tan|φ|` of the recovered admittances (admittance-form networks only).
    #[arg(long)]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Refuse to enumerate more subsets than this.
    #[arg(long, default_value_t = DEFAULT_COMBINATION_CAP)]
    pub cap: u128,
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of standard-normal initial states.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Histogram bins for the plot export.
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DampingArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Modified network to compare against.
    #[arg(long)]
    pub modified: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Grid size; budgets are `beta·k/points` for `k = 1..=points`.
    #[arg(long, default_value_t = 10)]
    pub points: usize,
}

fn parse_metric(s: &str) -> Result<GramianMetricKind, String> {
    s.parse().map_err(|e: ecmgrid_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamArg {
    Sin,
    Sigmoid,
}

impl ParamArg {
    pub fn parameterization(self) -> Parameterization {
        match self {
            ParamArg::Sin => Parameterization::Sin,
            ParamArg::Sigmoid => Parameterization::sigmoid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Comma-separated `a-b` node pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList(pub Vec<EdgeId>);

impl FromStr for EdgeList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut edges = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (a, b) = item
                .split_once('-')
                .ok_or_else(|| format!("edge '{item}' is not of the form a-b"))?;
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| format!("bad node in edge '{item}'"))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| format!("bad node in edge '{item}'"))?;
            edges.push(EdgeId::new(a, b).map_err(|e| e.to_string())?);
        }
        if edges.is_empty() {
            return Err("empty edge list".into());
        }
        Ok(EdgeList(edges))
    }
}

impl fmt::Display for EdgeList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|e| format!("{}-{}", e.i(), e.j()))
            .collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateArg {
    Laplacian,
    AllPairs,
    Explicit(EdgeList),
}

impl FromStr for CandidateArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "laplacian" => Ok(Self::Laplacian),
            "all-pairs" => Ok(Self::AllPairs),
            other => other.parse().map(Self::Explicit),
        }
    }
}

impl fmt::Display for CandidateArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Laplacian => f.write_str("laplacian"),
            Self::AllPairs => f.write_str("all-pairs"),
            Self::Explicit(list) => list.fmt(f),
        }
    }
}

impl Serialize for CandidateArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl CandidateArg {
    pub fn resolve(&self, net: &GeneratorNetwork) -> CliResult<CandidateEdgeSet> {
        let set = match self {
            Self::Laplacian => CandidateEdgeSet::laplacian_support(net),
            Self::AllPairs => CandidateEdgeSet::all_pairs(net.n()),
            Self::Explicit(list) => CandidateEdgeSet::explicit(list.0.clone(), net.n())?,
        };
        if set.is_empty() {
            return Err(CliError::Usage("candidate edge set is empty".into()));
        }
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TfArg {
    Auto,
    Value(f64),
}

impl FromStr for TfArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Self::Value(v)),
            _ => Err(format!("'{s}' is neither `auto` nor a positive number")),
        }
    }
}

impl Serialize for TfArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Auto => s.serialize_str("auto"),
            Self::Value(v) => s.serialize_f64(*v),
        }
    }
}

/// Validated run settings, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub network: String,
    pub metric: GramianMetricKind,
    pub s: usize,
    pub beta: f64,
    pub candidate: CandidateArg,
    pub seed: u64,
    pub parameterization: ParamArg,
    pub restarts: usize,
    pub tf: TfArg,
}

impl RunConfig {
    pub fn from_args(a: &RunArgs) -> CliResult<Self> {
        if a.s == 0 {
            return Err(CliError::Usage("--s must be at least 1".into()));
        }
        if !(a.beta.is_finite() && a.beta >= 0.0) {
            return Err(CliError::Usage(format!(
                "--beta must be a non-negative number, got {}",
                a.beta
            )));
        }
        if a.restarts == 0 {
            return Err(CliError::Usage("--restarts must be at least 1".into()));
        }
        Ok(Self {
            network: a.network.clone(),
            metric: a.metric,
            s: a.s,
            beta: a.beta,
            candidate: a.candidate.clone(),
            seed: a.seed,
            parameterization: a.param,
            restarts: a.restarts,
            tf: a.tf,
        })
    }
}

/// Parses the worker-count variable; `None` when unset.
pub fn workers_from_env(value: Option<&str>) -> CliResult<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

//! Exhaustive best/worst edge-set search and near-optimality scores.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modification::{
    optimize_modification, ModificationProblem, OptimizerConfig, ProblemSettings,
};
use crate::centrality::CandidateEdgeSet;
use crate::error::{Error, Result};
use crate::power::{EdgeId, GeneratorNetwork};

pub const DEFAULT_COMBINATION_CAP: u128 = 100_000;

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        // Exact at every step: the running value is C(n−k+t+1, t+1).
        acc = match acc.checked_mul((n - k + t + 1) as u128) {
            Some(v) => v / (t as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All `s`-subsets of `items`, in lexicographic index order.
pub fn combinations<T: Copy>(items: &[T], s: usize) -> Vec<Vec<T>> {
    let n = items.len();
    if s > n {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(pos) = (0..s).rev().find(|&p| idx[p] != p + n - s) else {
            break;
        };
        idx[pos] += 1;
        for q in pos + 1..s {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationResult {
    pub edges: Vec<EdgeId>,
    pub improvement_j: f64,
    pub metric_after: f64,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub edges: Vec<EdgeId>,
    pub improvement_j: f64,
    pub j_v: f64,
    pub j_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub per_combination: Vec<CombinationResult>,
    pub wcs: CombinationResult,
    pub bcs: CombinationResult,
    pub candidate: Option<CandidateScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub cap: u128,
    pub optimizer: OptimizerConfig,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_COMBINATION_CAP,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// Value- and cardinality-based near-optimality of `j_cand` among `all`.
/// A flat landscape gives `J_V = 100`.
pub fn near_optimality(j_cand: f64, all: &[f64]) -> (f64, f64) {
    let wcs = all.iter().copied().fold(f64::INFINITY, f64::min);
    let bcs = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let j_v = if bcs == wcs {
        100.0
    } else {
        100.0 * (j_cand - wcs) / (bcs - wcs)
    };
    let below = all.iter().filter(|&&j| j <= j_cand).count();
    let j_c = 100.0 * below as f64 / all.len() as f64;
    (j_v, j_c)
}

fn same_set(a: &[EdgeId], b: &[EdgeId]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// Optimizes every `s`-subset of the candidate set with identical settings.
/// `evaluated`, when given, must be one of those subsets; it is scored by its
/// own entry in the enumeration.
pub fn brute_force_oracle(
    net: &GeneratorNetwork,
    settings: ProblemSettings,
    candidate: &CandidateEdgeSet,
    s: usize,
    evaluated: Option<&[EdgeId]>,
    options: &OracleOptions,
) -> Result<OracleSummary> {
    if s == 0 || s > candidate.len() {
        return Err(Error::InvalidArgument(format!(
            "s = {s} must be between 1 and {}",
            candidate.len()
        )));
    }
    let count = binomial(candidate.len(), s);
    if count > options.cap {
        return Err(Error::CombinatorialRefusal {
            combinations: count,
            cap: options.cap,
        });
    }
    let subsets = combinations(candidate.edges(), s);
    let candidate_index = match evaluated {
        Some(ev) => Some(
            subsets
                .iter()
                .position(|c| same_set(c, ev))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "evaluated edge set {} is not an {s}-subset of the candidate set",
                        ev.iter()
                            .map(|e| e.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    ))
                })?,
        ),
        None => None,
    };

    let per_combination = subsets
        .into_par_iter()
        .map(|edges| {
            let problem = ModificationProblem::new(net.clone(), edges.clone(), settings)?;
            let r = optimize_modification(&problem, &options.optimizer)?;
            Ok(CombinationResult {
                edges,
                improvement_j: r.improvement_j,
                metric_after: r.metric_after,
                gamma: r.gamma.as_slice().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Ties go to the earliest (lexicographically smallest) subset.
    let mut wcs = 0;
    let mut bcs = 0;
    for (k, c) in per_combination.iter().enumerate() {
        if c.improvement_j < per_combination[wcs].improvement_j {
            wcs = k;
        }
        if c.improvement_j > per_combination[bcs].improvement_j {
            bcs = k;
        }
    }
    let all: Vec<f64> = per_combination.iter().map(|c| c.improvement_j).collect();
    let candidate = candidate_index.map(|k| {
        let c = &per_combination[k];
        let (j_v, j_c) = near_optimality(c.improvement_j, &all);
        assert!(
            all[wcs] <= c.improvement_j && c.improvement_j <= all[bcs],
            "sandwich inequality violated"
        );
        CandidateScore {
            edges: evaluated.map(<[EdgeId]>::to_vec).unwrap_or_default(),
            improvement_j: c.improvement_j,
            j_v,
            j_c,
        }
    });
    Ok(OracleSummary {
        wcs: per_combination[wcs].clone(),
        bcs: per_combination[bcs].clone(),
        per_combination,
        candidate,
    })
}

/// A uniformly random `s`-subset of the candidate set, in candidate order.
pub fn random_edge_set(candidate: &CandidateEdgeSet, s: usize, seed: u64) -> Result<Vec<EdgeId>> {
    if s == 0 || s > candidate.len() {
        return Err(Error::InvalidArgument(format!(
            "s = {s} must be between 1 and {}",
            candidate.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, candidate.len(), s).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| candidate.edges()[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::ieee9;
    use crate::gramian::GramianMetricKind;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(68 * 67 / 2, 15), binomial(2278, 2263));
        assert_eq!(binomial(60, 30), 118264581564861424);
        assert_eq!(binomial(100_000, 50_000), u128::MAX);
    }

    #[test]
    fn combination_enumeration() {
        let c = combinations(&[1, 2, 3, 4], 2);
        assert_eq!(
            c,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
        assert_eq!(combinations(&[1, 2, 3], 3), vec![vec![1, 2, 3]]);
        assert_eq!(combinations(&[7, 8], 0), vec![Vec::<i32>::new()]);
    }

    #[test]
    fn near_optimality_measures() {
        let (v, c) = near_optimality(2.0, &[1.0, 2.0, 3.0]);
        assert_eq!((v, c), (50.0, 200.0 / 3.0));
        assert_eq!(near_optimality(4.0, &[4.0]), (100.0, 100.0));
        assert_eq!(near_optimality(1.0, &[1.0, 3.0, 2.0]).0, 0.0);
    }

    #[test]
    fn cap_refusal() {
        let net = ieee9();
        let cand = CandidateEdgeSet::laplacian_support(&net);
        let opts = OracleOptions {
            cap: 2,
            ..Default::default()
        };
        let err = brute_force_oracle(
            &net,
            ProblemSettings::new(1.0, GramianMetricKind::Trace),
            &cand,
            1,
            None,
            &opts,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::CombinatorialRefusal {
                combinations: 3,
                cap: 2
            }
        );
    }

    #[test]
    fn full_set_has_one_combination() {
        let net = ieee9();
        let cand = CandidateEdgeSet::laplacian_support(&net);
        let settings = ProblemSettings::new(0.5, GramianMetricKind::LogDet);
        let all = cand.edges().to_vec();
        let sum = brute_force_oracle(
            &net,
            settings,
            &cand,
            3,
            Some(&all),
            &OracleOptions::default(),
        )
        .unwrap();
        assert_eq!(sum.per_combination.len(), 1);
        let c = sum.candidate.unwrap();
        assert_eq!((c.j_v, c.j_c), (100.0, 100.0));
    }

    #[test]
    fn evaluated_set_must_be_enumerated() {
        let net = ieee9();
        let cand = CandidateEdgeSet::laplacian_support(&net);
        let settings = ProblemSettings::new(0.5, GramianMetricKind::LogDet);
        let odd = [EdgeId::new(2, 1).unwrap()];
        assert!(brute_force_oracle(
            &net,
            settings,
            &cand,
            2,
            Some(&odd),
            &OracleOptions::default()
        )
        .is_err());
        assert!(
            brute_force_oracle(&net, settings, &cand, 4, None, &OracleOptions::default()).is_err()
        );
    }

    #[test]
    fn random_sets() {
        let cand = CandidateEdgeSet::all_pairs(5);
        assert_eq!(random_edge_set(&cand, 10, 3).unwrap(), cand.edges());
        assert_eq!(
            random_edge_set(&cand, 4, 9).unwrap(),
            random_edge_set(&cand, 4, 9).unwrap()
        );
        assert!(random_edge_set(&cand, 11, 0).is_err());
        assert!(random_edge_set(&cand, 0, 0).is_err());
        let s = random_edge_set(&cand, 4, 1).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn random_inclusion_frequency() {
        let cand = CandidateEdgeSet::all_pairs(5);
        let (s, draws) = (3usize, 4000usize);
        let mut counts = vec![0usize; cand.len()];
        for seed in 0..draws as u64 {
            for e in random_edge_set(&cand, s, seed).unwrap() {
                counts[cand.edges().iter().position(|&x| x == e).unwrap()] += 1;
            }
        }
        let p = s as f64 / cand.len() as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!(
                (c as f64 - draws as f64 * p).abs() <= 3.0 * sigma + 1.0,
                "{c}"
            );
        }
    }
}

//! Acceptance suite for the 9-generator benchmark and the numerical oracles.
//! Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use ecmgrid_core::centrality::{
    build_ecm, nnec_report, select_edge_set, CandidateEdgeSet, EcmContext,
};
use ecmgrid_core::fixtures::ieee9;
use ecmgrid_core::gramian::{
    damping_ratio, default_horizon, gramian_finite, gramian_infinite, GramianMetricKind,
};
use ecmgrid_core::linalg::{kron_lyapunov, solve_lyapunov, spectral_abscissa, LyapunovSolver};
use ecmgrid_core::optimize::{
    brute_force_oracle, delta_matrix, delta_matrix_incidence, optimize_modification,
    ModificationProblem, ModificationResult, OptimizerConfig, OracleOptions, OracleSummary,
    ProblemSettings,
};
use ecmgrid_core::power::{
    build_projection, build_reduced_system, build_reduced_system_with, reduced_state_matrix,
};
use ecmgrid_core::{Complex64, DMatrix, DVector, EdgeId, GeneratorNetwork};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use GramianMetricKind::{LogDet, NegTraceInv, Trace};

type Outcome = Result<String, String>;

fn edge(a: usize, b: usize) -> EdgeId {
    EdgeId::new(a, b).unwrap()
}

fn sorted(mut v: Vec<EdgeId>) -> Vec<EdgeId> {
    v.sort();
    v
}

fn show(edges: &[EdgeId]) -> String {
    edges
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || {
        format!("{what} took {took:.2?}, limit {limit:.0?}")
    })?;
    Ok(took)
}

/// Relative ±5%, plus ±0.05 points absolute for the trace metric.
fn close_to(metric: GramianMetricKind, got: f64, want: f64) -> bool {
    let rel = (got - want).abs() <= 0.05 * want.abs();
    match metric {
        Trace => rel && (got - want).abs() <= 0.05,
        _ => rel,
    }
}

fn ecm_set(net: &GeneratorNetwork, metric: GramianMetricKind, s: usize) -> Vec<EdgeId> {
    let sys = build_reduced_system(net).unwrap();
    let cand = CandidateEdgeSet::laplacian_support(net);
    let rep = build_ecm(&sys, net, &cand, metric).unwrap();
    select_edge_set(&rep.ranking, s).unwrap()
}

fn check_result_invariants(r: &ModificationResult, net: &GeneratorNetwork) -> Result<(), String> {
    let beta = r.settings.beta;
    ensure(r.feasible, || {
        format!("{} reported infeasible", show(&r.edge_set))
    })?;
    ensure(r.gamma.norm() <= beta + 1e-9, || {
        format!("budget exceeded: {}", r.gamma.norm())
    })?;
    for (e, g) in r.edge_set.iter().zip(r.gamma.iter()) {
        ensure(g + net.weight(*e) >= -1e-9, || {
            format!("edge {e} driven negative")
        })?;
    }
    let sys = build_reduced_system_with(net, &r.l_modified).map_err(|e| e.to_string())?;
    ensure(spectral_abscissa(&sys.a).unwrap() < 0.0, || {
        "modified system not Hurwitz".into()
    })?;
    ensure(r.improvement_j >= 0.0, || {
        format!("negative improvement {}", r.improvement_j)
    })?;
    let d = &r.delta;
    ensure((d - d.transpose()).amax() == 0.0, || {
        "delta not symmetric".into()
    })?;
    ensure(d.row_sum().amax() <= 1e-12, || {
        "delta rows do not sum to zero".into()
    })?;
    Ok(())
}

const TARGET_J: [(usize, GramianMetricKind, f64); 6] = [
    (1, Trace, 0.6012),
    (1, LogDet, 3.1898),
    (1, NegTraceInv, 28.1474),
    (2, Trace, 0.7644),
    (2, LogDet, 4.5303),
    (2, NegTraceInv, 39.2109),
];

/// (s, metric, WCS, BCS, J_V, J_C)
const TARGET_ORACLE: [(usize, GramianMetricKind, f64, f64, f64, f64); 6] = [
    (1, Trace, 0.6012, 0.9853, 0.0, 33.33),
    (1, LogDet, 1.7967, 3.1898, 100.0, 100.0),
    (1, NegTraceInv, 21.4248, 28.1474, 100.0, 100.0),
    (2, Trace, 0.7644, 1.0913, 0.0, 33.33),
    (2, LogDet, 3.5371, 4.5303, 100.0, 100.0),
    (2, NegTraceInv, 36.4843, 39.2109, 100.0, 100.0),
];

fn criterion_1() -> Outcome {
    let net = ieee9();
    let start = Instant::now();
    let mut sets = Vec::new();
    for metric in [Trace, LogDet, NegTraceInv] {
        let top1 = ecm_set(&net, metric, 1);
        let top2 = sorted(ecm_set(&net, metric, 2));
        sets.push((metric, top1, top2));
    }
    let took = within_time(start, Duration::from_secs(1), "ranking")?;
    for (metric, top1, top2) in &sets {
        ensure(*top1 == vec![edge(3, 1)], || {
            format!("{metric} top-1 {}", show(top1))
        })?;
        ensure(*top2 == vec![edge(2, 1), edge(3, 1)], || {
            format!("{metric} top-2 {}", show(top2))
        })?;
    }
    Ok(format!(
        "top-1 (3,1), top-2 (2,1)(3,1) for all metrics in {took:.2?}"
    ))
}

fn criterion_2(results: &mut Vec<ModificationResult>) -> Outcome {
    let net = ieee9();
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (s, metric, want) in TARGET_J {
        let edges = ecm_set(&net, metric, s);
        let problem =
            ModificationProblem::new(net.clone(), edges, ProblemSettings::new(1.0, metric))
                .unwrap();
        let r = optimize_modification(&problem, &OptimizerConfig::default())
            .map_err(|e| e.to_string())?;
        lines.push(format!("s={s} {metric} J={:.4}", r.improvement_j));
        if !close_to(metric, r.improvement_j, want) {
            failures.push(format!(
                "s={s} {metric}: J={:.4}, expected {want}",
                r.improvement_j
            ));
        }
        results.push(r);
    }
    let took = within_time(start, Duration::from_secs(10), "six optimizations")?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} in {took:.2?}", lines.join(", ")))
}

fn criterion_3(summaries: &mut Vec<OracleSummary>) -> Outcome {
    let net = ieee9();
    let cand = CandidateEdgeSet::laplacian_support(&net);
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for (s, metric, wcs, bcs, j_v, j_c) in TARGET_ORACLE {
        let ecm = ecm_set(&net, metric, s);
        let sum = brute_force_oracle(
            &net,
            ProblemSettings::new(1.0, metric),
            &cand,
            s,
            Some(&ecm),
            &OracleOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let c = sum.candidate.clone().expect("candidate scored");
        let n_comb = sum.per_combination.len();
        if n_comb != 3 {
            failures.push(format!("s={s} {metric}: {n_comb} combinations"));
        }
        if !close_to(metric, sum.wcs.improvement_j, wcs) {
            failures.push(format!(
                "s={s} {metric}: WCS {:.4} vs {wcs}",
                sum.wcs.improvement_j
            ));
        }
        if !close_to(metric, sum.bcs.improvement_j, bcs) {
            failures.push(format!(
                "s={s} {metric}: BCS {:.4} vs {bcs}",
                sum.bcs.improvement_j
            ));
        }
        let jc_ok = (c.j_c * 100.0).round() / 100.0 == j_c;
        let jv_ok = match metric {
            Trace => (c.j_v - j_v).abs() <= 5.0,
            _ => (c.j_v * 100.0).round() / 100.0 == j_v,
        };
        if !jc_ok || !jv_ok {
            failures.push(format!(
                "s={s} {metric}: J_V {:.2} J_C {:.2} vs {j_v}/{j_c}",
                c.j_v, c.j_c
            ));
        }
        lines.push(format!(
            "s={s} {metric} WCS {:.4} BCS {:.4} J_V {:.2} J_C {:.2}",
            sum.wcs.improvement_j, sum.bcs.improvement_j, c.j_v, c.j_c
        ));
        summaries.push(sum);
    }
    let took = within_time(start, Duration::from_secs(30), "oracle runs")?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} in {took:.2?}", lines.join(", ")))
}

fn criterion_4() -> Outcome {
    let rep = nnec_report(&ieee9());
    let order: Vec<EdgeId> = rep.ranking.iter().map(|r| r.edge).collect();
    ensure(order[0] == edge(3, 2), || format!("top-1 {}", order[0]))?;
    let top2 = sorted(order[..2].to_vec());
    ensure(top2 == vec![edge(2, 1), edge(3, 2)], || {
        format!("top-2 {}", show(&top2))
    })?;
    Ok("top-1 (3,2), top-2 (2,1)(3,2)".into())
}

/// Connected random Laplacian: a random spanning tree plus extra edges.
fn random_network(rng: &mut ChaCha8Rng) -> GeneratorNetwork {
    let n = rng.random_range(3..=6);
    let mut l = DMatrix::zeros(n, n);
    let add = |l: &mut DMatrix<f64>, a: usize, b: usize, w: f64| {
        l[(a, b)] -= w;
        l[(b, a)] -= w;
        l[(a, a)] += w;
        l[(b, b)] += w;
    };
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let w = rng.random_range(0.3..3.0);
        add(&mut l, k, parent, w);
    }
    for a in 0..n {
        for b in 0..a {
            if l[(a, b)] == 0.0 && rng.random_bool(0.4) {
                let w = rng.random_range(0.3..3.0);
                add(&mut l, a, b, w);
            }
        }
    }
    let m = (0..n).map(|_| rng.random_range(0.01..0.2)).collect();
    let d = (0..n).map(|_| rng.random_range(0.01..0.2)).collect();
    GeneratorNetwork::new(m, d, l).unwrap()
}

/// Central difference `(h(g+δ) − h(g−δ))/(2δ)` for all three metrics,
/// evaluated without subtracting the two metric values: `D = W₊ − W₋` solves
/// `A₊D + DA₊ᵀ + (A₊−A₋)W₋ + W₋(A₊−A₋)ᵀ = 0`.
fn central_difference(
    net: &GeneratorNetwork,
    e: EdgeId,
    delta: f64,
) -> ecmgrid_core::Result<[f64; 3]> {
    let n = net.n();
    let p = build_projection(n)?;
    let v = e.direction(n) * delta;
    let a_plus = reduced_state_matrix(net.inertia(), net.damping(), &(net.laplacian() + &v), &p);
    let a_minus = reduced_state_matrix(net.inertia(), net.damping(), &(net.laplacian() - &v), &p);
    let sys = build_reduced_system(net)?;
    let bbt = sys.input_gram();
    let plus = LyapunovSolver::new(&a_plus)?;
    let w_plus = plus.solve(&bbt)?;
    let w_minus = solve_lyapunov(&a_minus, &bbt)?;
    let da = &a_plus - &a_minus;
    let cross = &da * &w_minus;
    let d = plus.solve(&(&cross + cross.transpose()))?;

    let chol = w_minus
        .clone()
        .cholesky()
        .ok_or(ecmgrid_core::Error::NotPositiveDefinite)?;
    let r_inv = chol
        .l()
        .try_inverse()
        .ok_or(ecmgrid_core::Error::NotPositiveDefinite)?;
    let mut s = &r_inv * &d * r_inv.transpose();
    ecmgrid_core::linalg::symmetrize(&mut s);
    let logdet: f64 = s.symmetric_eigenvalues().iter().map(|l| l.ln_1p()).sum();
    let inv_plus = w_plus
        .cholesky()
        .ok_or(ecmgrid_core::Error::NotPositiveDefinite)?
        .inverse();
    let inv_minus = chol.inverse();
    let nti = (inv_plus * &d * inv_minus).trace();
    Ok([d.trace(), logdet, nti].map(|x| x / (2.0 * delta)))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let delta = 1e-5;
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for case in 0..50 {
        let net = random_network(&mut rng);
        let n = net.n();
        let sys = build_reduced_system(&net).map_err(|e| format!("case {case}: {e}"))?;
        let ctx = EcmContext::new(&sys, &net).map_err(|e| format!("case {case}: {e}"))?;
        for e in EdgeId::all_pairs(n) {
            let analytic = ctx.entries(e).unwrap();
            let diffs =
                central_difference(&net, e, delta).map_err(|err| format!("case {case}: {err}"))?;
            for k in 0..3 {
                let fd = diffs[k];
                let rel = (analytic[k] - fd).abs() / fd.abs().max(f64::MIN_POSITIVE);
                worst = worst.max(rel);
                checked += 1;
                if rel > 1e-5 {
                    return Err(format!(
                        "case {case} N={n} edge {e} metric {k}: analytic {} vs difference {fd} (rel {rel:.2e})",
                        analytic[k]
                    ));
                }
            }
        }
    }
    let took = within_time(start, Duration::from_secs(60), "gradient checks")?;
    Ok(format!(
        "{checked} entries over 50 networks, worst relative error {worst:.2e}, {took:.2?}"
    ))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(1..=10);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let alpha = spectral_abscissa(&a).unwrap();
        a -= DMatrix::identity(n, n) * (alpha + rng.random_range(0.05..1.0));
        let b = DMatrix::from_fn(n, rng.random_range(1..=n), |_, _| {
            rng.random_range(-1.0..1.0)
        });
        let q = &b * b.transpose();
        let x = solve_lyapunov(&a, &q).map_err(|e| format!("case {case}: {e}"))?;
        let oracle = kron_lyapunov(&a, &q).unwrap();
        let rel = (&x - &oracle).norm() / oracle.norm();
        worst = worst.max(rel);
        ensure(rel <= 1e-8, || {
            format!("case {case} n={n}: relative difference {rel:.2e}")
        })?;
    }
    Ok(format!(
        "100 instances, worst relative difference {worst:.2e}"
    ))
}

fn criterion_7() -> Outcome {
    let sys = build_reduced_system(&ieee9()).unwrap();
    let t_f = default_horizon(&sys).unwrap();
    let wf = gramian_finite(&sys, t_f).map_err(|e| e.to_string())?;
    let wi = gramian_infinite(&sys).map_err(|e| e.to_string())?;
    let tr_f = -wf.metric(NegTraceInv).unwrap();
    let tr_i = -wi.metric(NegTraceInv).unwrap();
    let inv =
        wf.w.clone()
            .cholesky()
            .ok_or("finite Gramian not positive definite")?
            .inverse();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 10_000;
    let costs: Vec<f64> = (0..samples)
        .map(|_| {
            let x0 = DVector::from_fn(sys.dim(), |_, _| StandardNormal.sample(&mut rng));
            x0.dot(&(&inv * &x0))
        })
        .collect();
    let mean = costs.iter().sum::<f64>() / samples as f64;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (samples as f64 - 1.0);
    let se = (var / samples as f64).sqrt();
    ensure((mean - tr_f).abs() <= 3.0 * se, || {
        format!(
            "sample mean {mean:.6e} vs trace {tr_f:.6e} (3 SE = {:.3e})",
            3.0 * se
        )
    })?;
    ensure(tr_i <= tr_f, || {
        format!("infinite-horizon trace {tr_i:.6e} exceeds finite {tr_f:.6e}")
    })?;
    Ok(format!(
        "t_f={t_f:.4}, mean {mean:.5e} vs tr {tr_f:.5e} ({:.2} SE), tr(W_inf^-1)={tr_i:.5e}",
        (mean - tr_f).abs() / se
    ))
}

fn criterion_8() -> Outcome {
    let net = ieee9();
    let mut report = Vec::new();
    for s in [1, 2] {
        let edges = ecm_set(&net, LogDet, s);
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for k in 1..=10 {
            let beta = k as f64 / 10.0;
            let problem = ModificationProblem::new(
                net.clone(),
                edges.clone(),
                ProblemSettings::new(beta, LogDet),
            )
            .unwrap();
            let cfg = OptimizerConfig {
                warm_start: prev.as_ref().map(|(_, g)| g.clone()),
                ..Default::default()
            };
            let r = optimize_modification(&problem, &cfg).map_err(|e| e.to_string())?;
            if let Some((j_prev, _)) = &prev {
                ensure(r.improvement_j >= j_prev - 1e-9, || {
                    format!(
                        "s={s}: J({beta:.1}) = {} < J(previous) = {j_prev}",
                        r.improvement_j
                    )
                })?;
            }
            prev = Some((r.improvement_j, r.gamma.as_slice().to_vec()));
        }
        report.push(format!("s={s} J(1.0)={:.4}", prev.unwrap().0));
    }
    Ok(format!(
        "non-decreasing over beta = 0.1..1.0 ({})",
        report.join(", ")
    ))
}

fn criterion_9(results: &[ModificationResult], summaries: &[OracleSummary]) -> Outcome {
    let net = ieee9();
    for sum in summaries {
        let c = sum
            .candidate
            .as_ref()
            .ok_or("oracle run without candidate")?;
        ensure(
            sum.wcs.improvement_j <= c.improvement_j && c.improvement_j <= sum.bcs.improvement_j,
            || format!("sandwich violated for {}", show(&c.edges)),
        )?;
    }
    for r in results {
        check_result_invariants(r, &net)?;
        let alt = delta_matrix_incidence(3, &r.edge_set, &r.gamma).unwrap();
        ensure((&r.delta - alt).amax() <= 1e-12, || {
            "delta constructions disagree".into()
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let edges = EdgeId::all_pairs(5);
        let g = DVector::from_fn(edges.len(), |_, _| rng.random_range(-2.0..2.0));
        let a = delta_matrix(5, &edges, &g).unwrap();
        let b = delta_matrix_incidence(5, &edges, &g).unwrap();
        ensure((a - b).amax() <= 1e-12, || {
            "random delta constructions disagree".into()
        })?;
    }
    for n in [2usize, 3, 5, 16] {
        let u = build_projection(n).unwrap().u;
        let ones = DVector::from_element(n, 1.0);
        let centering = DMatrix::<f64>::identity(n, n) - (&ones * ones.transpose()) / n as f64;
        ensure(
            (u.transpose() * &u - DMatrix::<f64>::identity(n - 1, n - 1)).amax() <= 1e-12,
            || format!("UᵀU at N={n}"),
        )?;
        ensure((u.transpose() * &ones).amax() <= 1e-12, || {
            format!("Uᵀ1 at N={n}")
        })?;
        ensure((&u * u.transpose() - centering).amax() <= 1e-12, || {
            format!("UUᵀ at N={n}")
        })?;
    }
    for _ in 0..1000 {
        let p = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let c: f64 = rng.random_range(1e-3..1e3);
        ensure(
            (damping_ratio(p * c) - damping_ratio(p)).abs() <= 1e-12,
            || format!("damping ratio of {p} changes under scaling"),
        )?;
        let c2 = 2f64.powi(rng.random_range(-20..20));
        ensure(damping_ratio(p * c2) == damping_ratio(p), || {
            format!("damping ratio of {p} changes under 2^k scaling")
        })?;
    }
    Ok(format!(
        "{} oracle sandwiches, {} modification results, delta/projection/damping checks",
        summaries.len(),
        results.len()
    ))
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let mut summaries = Vec::new();
    let outcomes: Vec<(&str, Outcome)> = vec![
        ("ECM edge sets", criterion_1()),
        ("optimized improvements", criterion_2(&mut results)),
        ("brute-force oracle", criterion_3(&mut summaries)),
        ("NNEC edge sets", criterion_4()),
        ("gradient vs finite differences", criterion_5()),
        ("Lyapunov vs Kronecker", criterion_6()),
        ("mean minimum energy", criterion_7()),
        ("budget monotonicity", criterion_8()),
        ("property suite", criterion_9(&results, &summaries)),
    ];
    let mut failed = 0;
    for (k, (name, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

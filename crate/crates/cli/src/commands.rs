use ecmgrid_core::{
    brute_force_oracle, build_ecm, build_reduced_system, build_reduced_system_with, damping_report,
    default_horizon, gramian_finite, gramian_infinite, nnec_report, optimize_modification,
    recover_modified_admittance, select_edge_set, slow_mode, CombinationResult, DVector,
    DampingEntry, EdgeId, GeneratorNetwork, GramianMetricKind, ModificationProblem,
    OptimizerConfig, OracleOptions, ProblemSettings, RankedEdge,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::{
    DampingArgs, EnergyArgs, ModifyArgs, OracleArgs, RunArgs, RunConfig, SweepArgs, TfArg,
};
use crate::error::{CliError, CliResult};
use crate::output::{num, two_column, Report, Table};
use crate::schema::{ingest, Ingested, NetworkSpecFile};

fn edges_str(edges: &[EdgeId]) -> String {
    edges
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn settings(cfg: &RunConfig) -> ProblemSettings {
    ProblemSettings {
        parameterization: cfg.parameterization.parameterization(),
        ..ProblemSettings::new(cfg.beta, cfg.metric)
    }
}

fn optimizer(cfg: &RunConfig) -> OptimizerConfig {
    OptimizerConfig {
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..Default::default()
    }
}

fn ecm_ranking(net: &GeneratorNetwork, cfg: &RunConfig) -> CliResult<Vec<RankedEdge>> {
    let sys = build_reduced_system(net)?;
    let candidate = cfg.candidate.resolve(net)?;
    Ok(build_ecm(&sys, net, &candidate, cfg.metric)?.ranking)
}

fn load(cfg: &RunConfig) -> CliResult<Ingested> {
    ingest(&cfg.network)
}

#[derive(Serialize)]
struct RankRow {
    rank: usize,
    edge: String,
    value: f64,
    score: f64,
}

fn rank_rows(ranking: &[RankedEdge]) -> Vec<RankRow> {
    ranking
        .iter()
        .enumerate()
        .map(|(k, r)| RankRow {
            rank: k + 1,
            edge: r.edge.to_string(),
            value: r.value,
            score: r.score,
        })
        .collect()
}

#[derive(Serialize)]
struct AnalyzeResult {
    network: String,
    ecm: Vec<RankRow>,
    ecm_top_s: String,
    nnec: Vec<RankRow>,
    nnec_top_s: Option<String>,
}

pub fn analyze(args: &RunArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(args)?;
    let ing = load(&cfg)?;
    let ranking = ecm_ranking(&ing.net, &cfg)?;
    let top = select_edge_set(&ranking, cfg.s)?;
    let nnec = nnec_report(&ing.net);
    let nnec_top = select_edge_set(&nnec.ranking, cfg.s).ok();

    let mut ecm_t = Table::new("ecm", &["rank", "edge", "upsilon", "abs_upsilon"]);
    for r in rank_rows(&ranking) {
        ecm_t.push(vec![r.rank.to_string(), r.edge, num(r.value), num(r.score)]);
    }
    let mut nnec_t = Table::new("nnec", &["rank", "edge", "lambda"]);
    for r in rank_rows(&nnec.ranking) {
        nnec_t.push(vec![r.rank.to_string(), r.edge, num(r.value)]);
    }
    let mut sel = Table::new("selected", &["ranking", "edges"]);
    sel.push(vec!["ecm".into(), edges_str(&top)]);
    if let Some(t) = &nnec_top {
        sel.push(vec!["nnec".into(), edges_str(t)]);
    }

    let result = AnalyzeResult {
        network: ing.name.clone(),
        ecm: rank_rows(&ranking),
        ecm_top_s: edges_str(&top),
        nnec: rank_rows(&nnec.ranking),
        nnec_top_s: nnec_top.as_deref().map(edges_str),
    };
    let mut report = Report::new("analyze", cfg, result)?;
    report.tables = vec![ecm_t, nnec_t, sel];
    report.warnings = ing.warnings;
    Ok(report)
}

#[derive(Serialize)]
struct EdgeChange {
    edge: String,
    gamma: f64,
    weight_before: f64,
    weight_after: f64,
    admittance_re: Option<f64>,
    admittance_im: Option<f64>,
}

#[derive(Serialize)]
struct SlowModeDelta {
    before: Option<DampingEntry>,
    after: Option<DampingEntry>,
    zeta_delta: Option<f64>,
}

#[derive(Serialize)]
struct ModifyResult {
    network: String,
    edges: String,
    feasible: bool,
    metric_before: f64,
    metric_after: f64,
    improvement_j: f64,
    spectral_abscissa_after: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    winning_start: Option<usize>,
    changes: Vec<EdgeChange>,
    delta: Vec<Vec<f64>>,
    l_modified: Vec<Vec<f64>>,
    damping_before: Vec<DampingEntry>,
    damping_after: Vec<DampingEntry>,
    slow_mode: SlowModeDelta,
}

fn slow_mode_delta(before: &[DampingEntry], after: Option<&[DampingEntry]>) -> SlowModeDelta {
    let b = slow_mode(before);
    let a = after.and_then(slow_mode);
    SlowModeDelta {
        before: b,
        after: a,
        zeta_delta: b.zip(a).map(|(b, a)| a.zeta - b.zeta),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn damping_rows(t: &mut Table, label: &str, rep: &[DampingEntry]) {
    for p in rep {
        t.push(vec![label.to_string(), num(p.re), num(p.im), num(p.zeta)]);
    }
}

fn slow_table(d: &SlowModeDelta) -> Table {
    let mut t = Table::new("slow_mode", &["zeta_before", "zeta_after", "zeta_delta"]);
    t.push(vec![
        opt(d.before.map(|p| p.zeta)),
        opt(d.after.map(|p| p.zeta)),
        opt(d.zeta_delta),
    ]);
    t
}

fn rows(m: &ecmgrid_core::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn modify(args: &ModifyArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(&args.run)?;
    let ing = load(&cfg)?;
    let net = &ing.net;
    let mut warnings = ing.warnings.clone();
    let edges = match &args.edges {
        Some(list) => list.0.clone(),
        None => select_edge_set(&ecm_ranking(net, &cfg)?, cfg.s)?,
    };
    for e in &edges {
        e.check_bounds(net.n())?;
    }
    let admittance = match args.rho {
        Some(rho) if !(rho.is_finite() && rho >= 0.0) => {
            return Err(CliError::Usage(format!(
                "--rho must be non-negative, got {rho}"
            )));
        }
        Some(_) => Some(net.admittance().ok_or_else(|| {
            CliError::Usage("--rho needs a network given in admittance form".into())
        })?),
        None => None,
    };
    let min_g = edges
        .iter()
        .map(|&e| net.weight(e))
        .fold(f64::INFINITY, f64::min);
    if cfg.beta <= min_g {
        warnings.push(format!(
            "beta = {} does not exceed the smallest selected edge weight {min_g:.6}; the non-negativity constraint cannot bind",
            cfg.beta
        ));
    }

    let problem = ModificationProblem::new(net.clone(), edges.clone(), settings(&cfg))?;
    let r = optimize_modification(&problem, &optimizer(&cfg))?;

    let before = damping_report(&build_reduced_system(net)?.a)?;
    let after = damping_report(&build_reduced_system_with(net, &r.l_modified)?.a)?;
    let slow = slow_mode_delta(&before, Some(&after));

    let mut changes = Vec::new();
    for (k, &e) in edges.iter().enumerate() {
        let (a, b) = (e.i() - 1, e.j() - 1);
        let (re, im) = match (admittance, args.rho) {
            (Some(data), Some(rho)) => {
                let (re, im) = recover_modified_admittance(data, e, r.gamma[k], rho)?;
                (Some(re), Some(im))
            }
            _ => (None, None),
        };
        changes.push(EdgeChange {
            edge: e.to_string(),
            gamma: r.gamma[k],
            weight_before: net.weight(e),
            weight_after: -r.l_modified[(a, b)],
            admittance_re: re,
            admittance_im: im,
        });
    }

    let mut summary = Table::new("summary", &["key", "value"]);
    for (k, v) in [
        ("edges", edges_str(&edges)),
        ("feasible", r.feasible.to_string()),
        ("metric_before", num(r.metric_before)),
        ("metric_after", num(r.metric_after)),
        ("improvement_j", num(r.improvement_j)),
        ("spectral_abscissa_after", num(r.spectral_abscissa_after)),
        ("iterations", r.iterations.to_string()),
        ("evaluations", r.evaluations.to_string()),
        ("converged", r.converged.to_string()),
        (
            "winning_start",
            r.winning_start
                .map(|w| w.to_string())
                .unwrap_or_else(|| "none".into()),
        ),
    ] {
        summary.push(vec![k.to_string(), v]);
    }
    let mut gamma_t = Table::new(
        "gamma",
        &[
            "edge",
            "gamma",
            "weight_before",
            "weight_after",
            "admittance_re",
            "admittance_im",
        ],
    );
    for c in &changes {
        gamma_t.push(vec![
            c.edge.clone(),
            num(c.gamma),
            num(c.weight_before),
            num(c.weight_after),
            opt(c.admittance_re),
            opt(c.admittance_im),
        ]);
    }
    let mut poles = Table::new("damping", &["system", "re", "im", "zeta"]);
    damping_rows(&mut poles, "before", &before);
    damping_rows(&mut poles, "after", &after);

    let modified =
        NetworkSpecFile::with_laplacian(&format!("{}-modified", ing.name), net, &r.l_modified);
    let tables = vec![
        summary,
        gamma_t,
        Table::matrix("delta", &r.delta),
        Table::matrix("l_modified", &r.l_modified),
        poles,
        slow_table(&slow),
    ];
    let result = ModifyResult {
        network: ing.name.clone(),
        edges: edges_str(&edges),
        feasible: r.feasible,
        metric_before: r.metric_before,
        metric_after: r.metric_after,
        improvement_j: r.improvement_j,
        spectral_abscissa_after: r.spectral_abscissa_after,
        iterations: r.iterations,
        evaluations: r.evaluations,
        converged: r.converged,
        winning_start: r.winning_start,
        changes,
        delta: rows(&r.delta),
        l_modified: rows(&r.l_modified),
        damping_before: before,
        damping_after: after,
        slow_mode: slow,
    };
    let mut report = Report::new("modify", cfg, result)?;
    report.tables = tables;
    report
        .files
        .push(("modified.toml".into(), modified.to_toml()?));
    report.warnings = warnings;
    Ok(report)
}

#[derive(Serialize)]
struct CombinationRow {
    edges: String,
    improvement_j: f64,
    metric_after: f64,
    gamma: Vec<f64>,
}

impl From<&CombinationResult> for CombinationRow {
    fn from(c: &CombinationResult) -> Self {
        Self {
            edges: edges_str(&c.edges),
            improvement_j: c.improvement_j,
            metric_after: c.metric_after,
            gamma: c.gamma.clone(),
        }
    }
}

#[derive(Serialize)]
struct OracleResult {
    network: String,
    combinations: Vec<CombinationRow>,
    wcs: CombinationRow,
    bcs: CombinationRow,
    ecm_edges: String,
    ecm_j: f64,
    j_v: f64,
    j_c: f64,
}

pub fn oracle(args: &OracleArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(&args.run)?;
    let ing = load(&cfg)?;
    let candidate = cfg.candidate.resolve(&ing.net)?;
    let sys = build_reduced_system(&ing.net)?;
    let ranking = build_ecm(&sys, &ing.net, &candidate, cfg.metric)?.ranking;
    let ecm_set = select_edge_set(&ranking, cfg.s)?;
    let options = OracleOptions {
        cap: args.cap,
        optimizer: optimizer(&cfg),
    };
    let summary = brute_force_oracle(
        &ing.net,
        settings(&cfg),
        &candidate,
        cfg.s,
        Some(&ecm_set),
        &options,
    )?;
    let cand = summary
        .candidate
        .as_ref()
        .ok_or_else(|| CliError::Numerical("oracle returned no score for the ECM set".into()))?;

    let mut per = Table::new(
        "combinations",
        &["edges", "improvement_j", "metric_after", "gamma"],
    );
    for c in &summary.per_combination {
        let gamma = c
            .gamma
            .iter()
            .map(|g| num(*g))
            .collect::<Vec<_>>()
            .join(" ");
        per.push(vec![
            edges_str(&c.edges),
            num(c.improvement_j),
            num(c.metric_after),
            gamma,
        ]);
    }
    let mut sum = Table::new("summary", &["key", "edges", "value"]);
    sum.push(vec![
        "wcs".into(),
        edges_str(&summary.wcs.edges),
        num(summary.wcs.improvement_j),
    ]);
    sum.push(vec![
        "bcs".into(),
        edges_str(&summary.bcs.edges),
        num(summary.bcs.improvement_j),
    ]);
    sum.push(vec![
        "ecm".into(),
        edges_str(&cand.edges),
        num(cand.improvement_j),
    ]);
    sum.push(vec!["j_v".into(), String::new(), num(cand.j_v)]);
    sum.push(vec!["j_c".into(), String::new(), num(cand.j_c)]);

    let result = OracleResult {
        network: ing.name.clone(),
        combinations: summary.per_combination.iter().map(Into::into).collect(),
        wcs: (&summary.wcs).into(),
        bcs: (&summary.bcs).into(),
        ecm_edges: edges_str(&cand.edges),
        ecm_j: cand.improvement_j,
        j_v: cand.j_v,
        j_c: cand.j_c,
    };
    let mut report = Report::new("oracle", cfg, result)?;
    report.tables = vec![per, sum];
    report.warnings = ing.warnings;
    Ok(report)
}

#[derive(Serialize)]
struct EnergyResult {
    network: String,
    t_f: f64,
    samples: usize,
    mean: Option<f64>,
    standard_error: Option<f64>,
    trace_inv_finite: f64,
    trace_inv_infinite: f64,
    energies: Vec<f64>,
}

fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (lo + (k as f64 + 0.5) * width, c as f64))
        .collect()
}

pub fn energy(args: &EnergyArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(&args.run)?;
    let ing = load(&cfg)?;
    let sys = build_reduced_system(&ing.net)?;
    let t_f = match cfg.tf {
        TfArg::Auto => default_horizon(&sys)?,
        TfArg::Value(v) => v,
    };
    let finite = gramian_finite(&sys, t_f)?;
    let infinite = gramian_infinite(&sys)?;
    let tr_f = -finite.metric(GramianMetricKind::NegTraceInv)?;
    let tr_inf = -infinite.metric(GramianMetricKind::NegTraceInv)?;
    let chol = finite.w.clone().cholesky().ok_or_else(|| {
        CliError::Numerical("finite-horizon Gramian is not positive definite".into())
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let energies: Vec<f64> = (0..args.samples)
        .map(|_| {
            let x0 = DVector::from_fn(sys.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            x0.dot(&chol.solve(&x0))
        })
        .collect();
    let n = energies.len() as f64;
    let mean = (!energies.is_empty()).then(|| energies.iter().sum::<f64>() / n);
    let se = mean.filter(|_| energies.len() > 1).map(|m| {
        let var = energies.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    });

    let mut sum = Table::new("summary", &["key", "value"]);
    for (k, v) in [
        ("t_f", num(t_f)),
        ("samples", energies.len().to_string()),
        ("mean", opt(mean)),
        ("standard_error", opt(se)),
        ("trace_inv_finite", num(tr_f)),
        ("trace_inv_infinite", num(tr_inf)),
    ] {
        sum.push(vec![k.to_string(), v]);
    }
    let mut samples = Table::new("samples", &["k", "energy"]);
    for (k, e) in energies.iter().enumerate() {
        samples.push(vec![(k + 1).to_string(), num(*e)]);
    }
    let hist = histogram(&energies, args.bins);

    let result = EnergyResult {
        network: ing.name.clone(),
        t_f,
        samples: energies.len(),
        mean,
        standard_error: se,
        trace_inv_finite: tr_f,
        trace_inv_infinite: tr_inf,
        energies,
    };
    let mut report = Report::new("energy", cfg, result)?;
    report.tables = vec![sum, samples];
    if !hist.is_empty() {
        report.files.push((
            "energy_hist.dat".into(),
            two_column("minimum control energy histogram", "energy", "count", &hist),
        ));
    }
    report.warnings = ing.warnings;
    Ok(report)
}

#[derive(Serialize)]
struct DampingResult {
    network: String,
    before: Vec<DampingEntry>,
    after: Option<Vec<DampingEntry>>,
    slow_mode: SlowModeDelta,
}

pub fn damping(args: &DampingArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(&args.run)?;
    let ing = load(&cfg)?;
    let mut warnings = ing.warnings.clone();
    let before = damping_report(&build_reduced_system(&ing.net)?.a)?;
    let after = match &args.modified {
        Some(path) => {
            let m = ingest(path)?;
            if m.net.n() != ing.net.n() {
                return Err(CliError::Validation(format!(
                    "modified network has {} generators, original has {}",
                    m.net.n(),
                    ing.net.n()
                )));
            }
            warnings.extend(m.warnings);
            Some(damping_report(&build_reduced_system(&m.net)?.a)?)
        }
        None => None,
    };
    let slow = slow_mode_delta(&before, after.as_deref());
    let mut poles = Table::new("damping", &["system", "re", "im", "zeta"]);
    damping_rows(&mut poles, "before", &before);
    if let Some(a) = &after {
        damping_rows(&mut poles, "after", a);
    }
    let tables = vec![poles, slow_table(&slow)];
    let result = DampingResult {
        network: ing.name.clone(),
        before,
        after,
        slow_mode: slow,
    };
    let mut report = Report::new("damping", cfg, result)?;
    report.tables = tables;
    report.warnings = warnings;
    Ok(report)
}

#[derive(Serialize)]
struct SweepPoint {
    beta: f64,
    improvement_j: f64,
    metric_after: f64,
    feasible: bool,
    gamma: Vec<f64>,
}

#[derive(Serialize)]
struct SweepResult {
    network: String,
    edges: String,
    points: Vec<SweepPoint>,
}

pub fn sweep(args: &SweepArgs) -> CliResult<Report> {
    let cfg = RunConfig::from_args(&args.run)?;
    if args.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let ing = load(&cfg)?;
    let edges = select_edge_set(&ecm_ranking(&ing.net, &cfg)?, cfg.s)?;
    let mut points: Vec<SweepPoint> = Vec::with_capacity(args.points);
    for k in 1..=args.points {
        let beta = cfg.beta * k as f64 / args.points as f64;
        let problem = ModificationProblem::new(
            ing.net.clone(),
            edges.clone(),
            ProblemSettings {
                beta,
                ..settings(&cfg)
            },
        )?;
        let config = OptimizerConfig {
            warm_start: points.last().map(|p| p.gamma.clone()),
            ..optimizer(&cfg)
        };
        let r = optimize_modification(&problem, &config)?;
        points.push(SweepPoint {
            beta,
            improvement_j: r.improvement_j,
            metric_after: r.metric_after,
            feasible: r.feasible,
            gamma: r.gamma.as_slice().to_vec(),
        });
    }
    let mut t = Table::new(
        "sweep",
        &["beta", "improvement_j", "metric_after", "feasible"],
    );
    for p in &points {
        t.push(vec![
            num(p.beta),
            num(p.improvement_j),
            num(p.metric_after),
            p.feasible.to_string(),
        ]);
    }
    let plot: Vec<(f64, f64)> = points.iter().map(|p| (p.beta, p.improvement_j)).collect();
    let result = SweepResult {
        network: ing.name.clone(),
        edges: edges_str(&edges),
        points,
    };
    let mut report = Report::new("sweep", cfg, result)?;
    report.tables = vec![t];
    report.files.push((
        "sweep.dat".into(),
        two_column("budget sweep", "beta", "J", &plot),
    ));
    report.warnings = ing.warnings;
    Ok(report)
}

//! Client/server simulation: every client fits its own envelope, uploads
//! `2L + 1` coefficients, and the server evaluates aggregate statistics
//! against the ground truth.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{
    comm_cost_bytes, rms_relative, sum_signals, violation_stats, wasserstein_1d, EmpiricalCdf,
    ViolationStats,
};
use crate::envelope::{solve_scheme, ConstraintGrid, EnvelopeError, EnvelopeSolution, Scheme};
use crate::exec::Execution;
use crate::signal::SampledSignal;
use crate::solver::SolveStatus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientRecord {
    pub client_id: String,
    pub signal: SampledSignal,
}

impl ClientRecord {
    pub fn new(client_id: impl Into<String>, signal: SampledSignal) -> Self {
        ClientRecord {
            client_id: client_id.into(),
            signal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CostFunction {
    L1,
    L2,
}

impl CostFunction {
    pub fn scheme(&self) -> Scheme {
        match self {
            CostFunction::L1 => Scheme::L1Opt,
            CostFunction::L2 => Scheme::L2Opt,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CostFunction::L1 => "l1",
            CostFunction::L2 => "l2",
        }
    }
}

/// Which samples feed the server-side CDF.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalyticsTarget {
    /// Every reconstructed sample of every client (`N = D n`).
    #[default]
    PooledCdf,
    /// The `n` samples of the aggregate sum signal.
    SumSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cost: CostFunction,
    #[serde(rename = "L_values")]
    pub l_values: Vec<usize>,
    pub subsample_s: Vec<usize>,
    pub n: usize,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    pub analytics_target: AnalyticsTarget,
}

impl ExperimentConfig {
    /// Full-grid configuration running only the cost's optimal scheme.
    pub fn new(cost: CostFunction, l_values: Vec<usize>, n: usize) -> Self {
        ExperimentConfig {
            cost,
            l_values,
            subsample_s: vec![1],
            n,
            schemes: vec![cost.scheme()],
            seed: 0,
            analytics_target: AnalyticsTarget::default(),
        }
    }

    pub fn validate(&self) -> Result<(), FedsimError> {
        if self.l_values.is_empty() {
            return Err(FedsimError::Config("L_values must not be empty".into()));
        }
        if self.subsample_s.contains(&0) {
            return Err(FedsimError::Config("subsampling rates must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(FedsimError::Config("n must be positive".into()));
        }
        if self.schemes.is_empty() {
            return Err(FedsimError::Config("no schemes selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FedsimError {
    #[error("no clients")]
    NoClients,
    #[error("client '{id}' has {got} samples, expected {expected}")]
    LengthMismatch { id: String, got: usize, expected: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

/// One cell of an experiment. Metrics are absent unless `status` is Optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    #[serde(rename = "L")]
    pub bandwidth: usize,
    #[serde(rename = "S")]
    pub stride: usize,
    pub scheme: Scheme,
    pub status: SolveStatus,
    pub rms_rel: Option<f64>,
    pub wasserstein: Option<f64>,
    pub violations: Option<ViolationStats>,
    pub comm_bytes: u64,
    pub quantiles: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

pub const QUANTILE_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

/// Checks that every client has `n` samples.
pub fn check_clients(clients: &[ClientRecord], n: usize) -> Result<(), FedsimError> {
    if clients.is_empty() {
        return Err(FedsimError::NoClients);
    }
    for c in clients {
        if c.signal.len() != n {
            return Err(FedsimError::LengthMismatch {
                id: c.client_id.clone(),
                got: c.signal.len(),
                expected: n,
            });
        }
    }
    Ok(())
}

/// Fits one envelope per client; failures stay in their slot.
pub fn run_clients(
    clients: &[ClientRecord],
    bandwidth: usize,
    stride: usize,
    scheme: Scheme,
    exec: Execution,
) -> Vec<Result<EnvelopeSolution, EnvelopeError>> {
    exec.map(clients, |client| {
        let grid = ConstraintGrid::subsampled(client.signal.len(), stride)?;
        solve_scheme(scheme, &client.signal, bandwidth, &grid)
    })
}

fn target_cdf(signals: &[SampledSignal], sum: &SampledSignal, target: AnalyticsTarget) -> EmpiricalCdf {
    match target {
        AnalyticsTarget::PooledCdf => EmpiricalCdf::pooled(signals),
        AnalyticsTarget::SumSignal => EmpiricalCdf::new(sum.values()),
    }
    .expect("client signals are nonempty and finite")
}

/// Ground-truth sum signal and CDF for a client set.
pub fn truth_statistics(
    clients: &[ClientRecord],
    target: AnalyticsTarget,
) -> Result<(SampledSignal, EmpiricalCdf), FedsimError> {
    if clients.is_empty() {
        return Err(FedsimError::NoClients);
    }
    let signals: Vec<SampledSignal> = clients.iter().map(|c| c.signal.clone()).collect();
    let sum = sum_signals(&signals).map_err(|e| FedsimError::Config(e.to_string()))?;
    let cdf = target_cdf(&signals, &sum, target);
    Ok((sum, cdf))
}

/// Quantiles of the ground truth at [`QUANTILE_LEVELS`].
pub fn truth_quantiles(clients: &[ClientRecord], target: AnalyticsTarget) -> Result<[f64; 3], FedsimError> {
    let (_, cdf) = truth_statistics(clients, target)?;
    Ok(QUANTILE_LEVELS.map(|q| cdf.quantile(q)))
}

/// Reconstructs every client's envelope on the sample grid.
pub fn reconstruct(solutions: &[EnvelopeSolution], n: usize) -> Vec<SampledSignal> {
    solutions.iter().map(|s| s.coeffs.sample(n)).collect()
}

/// Server-side metrics for one cell.
pub fn server_analytics(
    solutions: &[Result<EnvelopeSolution, EnvelopeError>],
    clients: &[ClientRecord],
    bandwidth: usize,
    stride: usize,
    scheme: Scheme,
    target: AnalyticsTarget,
) -> MetricsRow {
    let mut row = MetricsRow {
        bandwidth,
        stride,
        scheme,
        status: SolveStatus::Optimal,
        rms_rel: None,
        wasserstein: None,
        violations: None,
        comm_bytes: comm_cost_bytes(bandwidth, clients.len()),
        quantiles: None,
        note: None,
    };
    if let Some(err) = solutions.iter().find_map(|s| s.as_ref().err()) {
        row.status = err.status();
        let failed = solutions.iter().filter(|s| s.is_err()).count();
        row.note = Some(format!("{failed} of {} clients failed: {err}", solutions.len()));
        return row;
    }
    if clients.is_empty() {
        row.status = SolveStatus::Infeasible;
        row.note = Some("no clients".into());
        return row;
    }
    let fitted: Vec<EnvelopeSolution> = solutions.iter().map(|s| s.clone().unwrap()).collect();
    let n = clients[0].signal.len();
    let (true_sum, true_cdf) = truth_statistics(clients, target).expect("clients checked above");
    let env = reconstruct(&fitted, n);
    let env_sum = sum_signals(&env).expect("equal lengths");
    let env_cdf = target_cdf(&env, &env_sum, target);

    row.rms_rel = rms_relative(&env_sum, &true_sum).ok();
    if row.rms_rel.is_none() {
        row.note = Some("true sum has zero norm".into());
    }
    row.wasserstein = Some(wasserstein_1d(&env_cdf, &true_cdf));
    row.violations = violation_stats(&env_sum, &true_sum).ok();
    row.quantiles = Some(QUANTILE_LEVELS.map(|q| env_cdf.quantile(q)));
    row
}

/// Largest bandwidth with `2L + 1 <= n`.
pub fn max_full_rank_bandwidth(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

fn run_cell(
    clients: &[ClientRecord],
    bandwidth: usize,
    stride: usize,
    scheme: Scheme,
    target: AnalyticsTarget,
    exec: Execution,
) -> MetricsRow {
    let solutions = run_clients(clients, bandwidth, stride, scheme, exec);
    server_analytics(&solutions, clients, bandwidth, stride, scheme, target)
}

/// Accuracy against communication on the full grid: one row per
/// `(L, scheme)`, sorted by `L`. Bandwidths beyond `(n - 1) / 2` are
/// clamped to it and the row carries a note.
pub fn experiment_tradeoff(
    clients: &[ClientRecord],
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<MetricsRow>, FedsimError> {
    config.validate()?;
    check_clients(clients, config.n)?;
    let l_cap = max_full_rank_bandwidth(config.n);
    let mut ls = config.l_values.clone();
    ls.sort_unstable();
    ls.dedup();
    let cells: Vec<(usize, usize, Scheme)> = ls
        .iter()
        .flat_map(|&l| config.schemes.iter().map(move |&s| (l, l.min(l_cap), s)))
        .collect();
    let rows = exec.map(&cells, |&(requested, l, scheme)| {
        let mut row = run_cell(clients, l, 1, scheme, config.analytics_target, exec);
        if requested != l {
            let clamp = format!("requested L={requested} exceeds the full-rank limit; clamped to L={l}");
            row.note = Some(match row.note.take() {
                Some(n) => format!("{clamp}; {n}"),
                None => clamp,
            });
        }
        row
    });
    Ok(rows)
}

/// Envelope fits with constraints on every `S`-th sample, evaluated on the
/// full grid. Cells with `2L + 1 > ceil(n/S)` are reported as rank deficient.
pub fn experiment_subsampling(
    clients: &[ClientRecord],
    config: &ExperimentConfig,
    exec: Execution,
) -> Result<Vec<MetricsRow>, FedsimError> {
    config.validate()?;
    check_clients(clients, config.n)?;
    let mut ls = config.l_values.clone();
    ls.sort_unstable();
    ls.dedup();
    let cells: Vec<(usize, usize, Scheme)> = config
        .subsample_s
        .iter()
        .flat_map(|&s| {
            ls.iter()
                .flat_map(move |&l| config.schemes.iter().map(move |&sc| (l, s, sc)))
        })
        .collect();
    Ok(exec.map(&cells, |&(l, s, scheme)| {
        run_cell(clients, l, s, scheme, config.analytics_target, exec)
    }))
}

/// CDF curves on a common abscissa: the truth and every `(L, scheme)`
/// envelope, evaluated at `points` evenly spaced values spanning all data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfCurve {
    pub series: String,
    #[serde(rename = "L")]
    pub bandwidth: Option<usize>,
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub cdf: Vec<f64>,
}

pub fn experiment_cdf(
    clients: &[ClientRecord],
    config: &ExperimentConfig,
    points: usize,
    exec: Execution,
) -> Result<Vec<CdfCurve>, FedsimError> {
    config.validate()?;
    check_clients(clients, config.n)?;
    let target = config.analytics_target;
    let (_, truth) = truth_statistics(clients, target)?;
    let l_cap = max_full_rank_bandwidth(config.n);
    let mut ls = config.l_values.clone();
    ls.sort_unstable();
    ls.dedup();
    let cells: Vec<(usize, Scheme)> = ls
        .iter()
        .flat_map(|&l| config.schemes.iter().map(move |&s| (l.min(l_cap), s)))
        .collect();
    let fitted = exec.map(&cells, |&(l, scheme)| {
        let sols = run_clients(clients, l, 1, scheme, exec);
        match sols.into_iter().collect::<Result<Vec<_>, _>>() {
            Ok(sols) => {
                let env = reconstruct(&sols, config.n);
                let sum = sum_signals(&env).expect("equal lengths");
                Ok(target_cdf(&env, &sum, target))
            }
            Err(e) => Err(e.status()),
        }
    });

    let (mut lo, mut hi) = (truth.sorted_samples()[0], *truth.sorted_samples().last().unwrap());
    for cdf in fitted.iter().flatten() {
        lo = lo.min(cdf.sorted_samples()[0]);
        hi = hi.max(*cdf.sorted_samples().last().unwrap());
    }
    let points = points.max(2);
    let xs: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let curve = |cdf: &EmpiricalCdf| xs.iter().map(|&x| cdf.eval(x)).collect::<Vec<_>>();

    let mut out = vec![CdfCurve {
        series: "Actual".into(),
        bandwidth: None,
        status: SolveStatus::Optimal,
        x: xs.clone(),
        cdf: curve(&truth),
    }];
    for ((l, scheme), res) in cells.iter().zip(&fitted) {
        out.push(match res {
            Ok(cdf) => CdfCurve {
                series: scheme.to_string(),
                bandwidth: Some(*l),
                status: SolveStatus::Optimal,
                x: xs.clone(),
                cdf: curve(cdf),
            },
            Err(status) => CdfCurve {
                series: scheme.to_string(),
                bandwidth: Some(*l),
                status: *status,
                x: Vec::new(),
                cdf: Vec::new(),
            },
        });
    }
    Ok(out)
}

/// Column order of [`write_metrics_csv`].
pub const CSV_HEADER: [&str; 13] = [
    "L", "S", "scheme", "status", "rms_rel", "wasserstein", "viol_count", "viol_pct", "peak_err", "q10",
    "q50", "q90", "comm_bytes",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10e}")).unwrap_or_default()
}

/// Writes rows as CSV with [`CSV_HEADER`]; absent metrics are empty cells.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), FedsimError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| FedsimError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        let v = r.violations;
        let q = r.quantiles;
        w.write_record([
            r.bandwidth.to_string(),
            r.stride.to_string(),
            r.scheme.to_string(),
            r.status.to_string(),
            opt(r.rms_rel),
            opt(r.wasserstein),
            v.map(|v| v.count.to_string()).unwrap_or_default(),
            opt(v.map(|v| v.percent)),
            opt(v.map(|v| v.peak_error)),
            opt(q.map(|q| q[0])),
            opt(q.map(|q| q[1])),
            opt(q.map(|q| q[2])),
            r.comm_bytes.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| FedsimError::Io(e.to_string()))
}

/// Writes rows as a pretty-printed JSON array.
pub fn write_metrics_json<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), FedsimError> {
    serde_json::to_writer_pretty(out, rows).map_err(|e| FedsimError::Io(e.to_string()))
}

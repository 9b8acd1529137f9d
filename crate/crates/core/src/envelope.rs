//! Overpredictive approximations of a sampled signal by bandlimited
//! Fourier series.
//!
//! Four schemes share one result type:
//!
//! * [`envelope_l1`]: minimise the dc gap `b[0] - a[0]` (a linear program),
//!   then pick the point of the optimal face closest to the projection.
//! * [`envelope_l2`]: minimise the coefficient error `sum |b[k] - a[k]|^2`
//!   (a projection quadratic program).
//! * [`naive_envelope`]: shift the projection up by its largest undershoot.
//! * [`mse_baseline`]: the projection itself, with no envelope constraint.
//!
//! Here `a` is always the discrete projection of the full signal, and the
//! constraints `b(t_j) >= f(t_j)` are imposed on the rows selected by a
//! [`ConstraintGrid`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{project, FourierSeries, GridTrig, SampledSignal, SignalError};
use crate::solver::{
    solve_lp, solve_qp_identity, LinearConstraints, Matrix, SolveStatus, SolverError, Tolerances,
};

/// Which samples carry an envelope constraint: indices `0, S, 2S, ...` below `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintGrid {
    n: usize,
    stride: usize,
}

impl ConstraintGrid {
    pub fn full(n: usize) -> Self {
        assert!(n >= 1);
        ConstraintGrid { n, stride: 1 }
    }

    pub fn subsampled(n: usize, stride: usize) -> Result<Self, EnvelopeError> {
        if n == 0 || stride == 0 {
            return Err(EnvelopeError::InvalidGrid { n, stride });
        }
        Ok(ConstraintGrid { n, stride })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// `ceil(n / S)`.
    pub fn active_count(&self) -> usize {
        self.n.div_ceil(self.stride)
    }

    pub fn active_indices(&self) -> impl Iterator<Item = usize> {
        (0..self.n).step_by(self.stride)
    }

    /// Whether a bandwidth-`L` series is identifiable from the active rows.
    pub fn supports(&self, bandwidth: usize) -> bool {
        2 * bandwidth < self.active_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    L1Opt,
    L2Opt,
    Naive,
    MseBaseline,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::L1Opt => "L1Opt",
            Scheme::L2Opt => "L2Opt",
            Scheme::Naive => "Naive",
            Scheme::MseBaseline => "MseBaseline",
        }
    }

    /// Schemes that enforce the overprediction constraint.
    pub fn is_envelope(&self) -> bool {
        !matches!(self, Scheme::MseBaseline)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L1Opt" | "l1" => Ok(Scheme::L1Opt),
            "L2Opt" | "l2" => Ok(Scheme::L2Opt),
            "Naive" | "naive" => Ok(Scheme::Naive),
            "MseBaseline" | "mse" => Ok(Scheme::MseBaseline),
            other => Err(format!("unknown scheme '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("bandwidth {bandwidth} needs {} constraint rows, grid has {active}", 2 * bandwidth + 1)]
    RankDeficient { bandwidth: usize, active: usize },
    #[error("{scheme} solve ended with status {status}")]
    Solver { scheme: Scheme, status: SolveStatus },
    #[error("grid of {grid} samples does not match signal of {signal} samples")]
    GridMismatch { grid: usize, signal: usize },
    #[error("invalid constraint grid (n = {n}, stride = {stride})")]
    InvalidGrid { n: usize, stride: usize },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Problem(#[from] SolverError),
}

impl EnvelopeError {
    /// Status to report for a failed solve.
    pub fn status(&self) -> SolveStatus {
        match self {
            EnvelopeError::RankDeficient { .. } => SolveStatus::RankDeficient,
            EnvelopeError::Signal(SignalError::RankDeficient { .. }) => SolveStatus::RankDeficient,
            EnvelopeError::Solver { status, .. } => *status,
            _ => SolveStatus::Infeasible,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSolution {
    pub coeffs: FourierSeries,
    pub scheme: Scheme,
    /// `b[0] - a[0]`.
    pub sa1: f64,
    /// Head coefficient error plus tail energy of the projection.
    pub sa2: f64,
    pub status: SolveStatus,
    /// Largest `f(t_j) - b(t_j)` over the constrained rows (zero if none).
    pub max_violation_on_grid: f64,
}

impl EnvelopeSolution {
    pub fn bandwidth(&self) -> usize {
        self.coeffs.bandwidth()
    }
}

/// Head cost `(b0 - a0)^2 + 1/2 sum (dcos^2 + dsin^2)`, i.e. the complex
/// `sum_{|k| <= L} |b[k] - a[k]|^2`.
pub fn head_cost(b: &FourierSeries, a: &FourierSeries) -> f64 {
    assert_eq!(b.bandwidth(), a.bandwidth(), "bandwidths differ");
    let dc = b.dc() - a.dc();
    let harmonics: f64 = b
        .cos_coeffs()
        .iter()
        .zip(a.cos_coeffs())
        .chain(b.sin_coeffs().iter().zip(a.sin_coeffs()))
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    dc * dc + 0.5 * harmonics
}

/// Energy of the signal outside the bandwidth-`L` projection, by discrete
/// Parseval: `(1/n) sum f^2 - energy(projection)`.
pub fn tail_energy(signal: &SampledSignal, projection: &FourierSeries) -> f64 {
    (signal.mean_square() - projection.energy()).max(0.0)
}

/// `(sa1, sa2)` of a bandwidth-`L` approximation against its signal.
pub fn sa_costs(
    signal: &SampledSignal,
    solution: &EnvelopeSolution,
    bandwidth: usize,
) -> Result<(f64, f64), EnvelopeError> {
    assert_eq!(solution.bandwidth(), bandwidth, "solution bandwidth differs from L");
    let a = project(signal, bandwidth)?;
    Ok(costs_against(signal, &solution.coeffs, &a))
}

fn costs_against(signal: &SampledSignal, b: &FourierSeries, a: &FourierSeries) -> (f64, f64) {
    (b.dc() - a.dc(), head_cost(b, a) + tail_energy(signal, a))
}

/// Dispatches to the scheme's solver. The grid only affects
/// constrained schemes other than [`Scheme::Naive`] (which is defined on
/// the full grid).
pub fn solve_scheme(
    scheme: Scheme,
    signal: &SampledSignal,
    bandwidth: usize,
    grid: &ConstraintGrid,
) -> Result<EnvelopeSolution, EnvelopeError> {
    match scheme {
        Scheme::L1Opt => envelope_l1(signal, bandwidth, grid),
        Scheme::L2Opt => envelope_l2(signal, bandwidth, grid),
        Scheme::Naive => naive_envelope(signal, bandwidth),
        Scheme::MseBaseline => mse_baseline(signal, bandwidth),
    }
}

/// Constraint rows `Phi(t_j) b >= f(t_j)` for the active grid, with the
/// packed column order `[dc, cos.., sin..]`; `weights` rescales columns.
struct GridProblem {
    rows: Vec<usize>,
    matrix: Matrix,
    rhs: Vec<f64>,
}

impl GridProblem {
    fn build(
        signal: &SampledSignal,
        bandwidth: usize,
        grid: &ConstraintGrid,
        column_scale: &[f64],
    ) -> GridProblem {
        let d = 2 * bandwidth + 1;
        let trig = GridTrig::new(signal.len());
        let rows: Vec<usize> = grid.active_indices().collect();
        let mut matrix = Matrix::zeros(rows.len(), d);
        let mut rhs = Vec::with_capacity(rows.len());
        for (r, &j) in rows.iter().enumerate() {
            let row = matrix.row_mut(r);
            trig.basis_row(bandwidth, j, row);
            for (v, s) in row.iter_mut().zip(column_scale) {
                *v *= s;
            }
            rhs.push(signal.values()[j]);
        }
        GridProblem { rows, matrix, rhs }
    }
}

fn check_grid(
    signal: &SampledSignal,
    bandwidth: usize,
    grid: &ConstraintGrid,
) -> Result<(), EnvelopeError> {
    if grid.n() != signal.len() {
        return Err(EnvelopeError::GridMismatch {
            grid: grid.n(),
            signal: signal.len(),
        });
    }
    if !grid.supports(bandwidth) {
        return Err(EnvelopeError::RankDeficient {
            bandwidth,
            active: grid.active_count(),
        });
    }
    Ok(())
}

/// Column scaling that turns the head cost into a plain squared distance:
/// `z_0 = b_0`, `z_k = b_k / sqrt(2)`.
fn metric_scale(bandwidth: usize) -> (Vec<f64>, Vec<f64>) {
    let d = 2 * bandwidth + 1;
    let mut to_z = vec![std::f64::consts::FRAC_1_SQRT_2; d];
    let mut from_z = vec![std::f64::consts::SQRT_2; d];
    to_z[0] = 1.0;
    from_z[0] = 1.0;
    (to_z, from_z)
}

fn max_violation(signal: &SampledSignal, series: &FourierSeries, rows: impl Iterator<Item = usize>) -> f64 {
    let n = signal.len();
    let sampled = series.sample(n);
    rows.map(|j| signal.values()[j] - sampled.values()[j])
        .fold(0.0, f64::max)
}

fn finish(
    signal: &SampledSignal,
    grid: &ConstraintGrid,
    coeffs: FourierSeries,
    projection: &FourierSeries,
    scheme: Scheme,
) -> EnvelopeSolution {
    let (sa1, sa2) = costs_against(signal, &coeffs, projection);
    let max_violation_on_grid = max_violation(signal, &coeffs, grid.active_indices());
    EnvelopeSolution {
        coeffs,
        scheme,
        sa1,
        sa2,
        status: SolveStatus::Optimal,
        max_violation_on_grid,
    }
}

/// Projects `target` (packed coefficients) onto the feasible set in the
/// head-cost metric; `extra` appends rows in packed `b` coordinates.
fn project_feasible(
    problem: &GridProblem,
    target: &FourierSeries,
    extra: Option<(Vec<f64>, f64)>,
    scheme: Scheme,
) -> Result<FourierSeries, EnvelopeError> {
    let bandwidth = target.bandwidth();
    let d = 2 * bandwidth + 1;
    let (to_z, from_z) = metric_scale(bandwidth);
    let z_target: Vec<f64> = target
        .to_packed()
        .iter()
        .zip(&to_z)
        .map(|(b, s)| b * s)
        .collect();

    let constraints = match extra {
        None => LinearConstraints::new(problem.matrix.clone(), problem.rhs.clone())?,
        Some((row, rhs)) => {
            let m = problem.rows.len();
            let mut data = problem.matrix.data().to_vec();
            data.extend(row.iter().zip(&from_z).map(|(v, s)| v * s));
            let mut g = problem.rhs.clone();
            g.push(rhs);
            LinearConstraints::new(Matrix::from_vec(m + 1, d, data), g)?
        }
    };
    let report = solve_qp_identity(&z_target, &constraints, &Tolerances::default())?;
    if report.status != SolveStatus::Optimal {
        return Err(EnvelopeError::Solver {
            scheme,
            status: report.status,
        });
    }
    let packed: Vec<f64> = report.x.iter().zip(&from_z).map(|(z, s)| z * s).collect();
    Ok(FourierSeries::from_packed(bandwidth, &packed)?)
}

/// Minimum-dc-gap envelope.
///
/// The LP `min b[0] s.t. Phi b >= f` fixes the optimal gap `v*`; the
/// returned coefficients are the point of `{b feasible, b[0] - a[0] <= v*}`
/// nearest to the projection in the head-cost metric.
pub fn envelope_l1(
    signal: &SampledSignal,
    bandwidth: usize,
    grid: &ConstraintGrid,
) -> Result<EnvelopeSolution, EnvelopeError> {
    check_grid(signal, bandwidth, grid)?;
    let a = project(signal, bandwidth)?;
    let d = 2 * bandwidth + 1;

    let plain = GridProblem::build(signal, bandwidth, grid, &vec![1.0; d]);
    let constraints = LinearConstraints::new(plain.matrix, plain.rhs)?;
    let mut c = vec![0.0; d];
    c[0] = 1.0;
    let lp = solve_lp(&c, &constraints, &Tolerances::default())?;
    if lp.status != SolveStatus::Optimal {
        return Err(EnvelopeError::Solver {
            scheme: Scheme::L1Opt,
            status: lp.status,
        });
    }
    let gap = lp.objective - a.dc();

    let (_, from_z) = metric_scale(bandwidth);
    let scaled = GridProblem::build(signal, bandwidth, grid, &from_z);
    let mut cap_row = vec![0.0; d];
    cap_row[0] = -1.0;
    let cap = -(a.dc() + gap);
    let coeffs = project_feasible(&scaled, &a, Some((cap_row, cap)), Scheme::L1Opt)?;
    Ok(finish(signal, grid, coeffs, &a, Scheme::L1Opt))
}

/// Minimum coefficient-error envelope.
pub fn envelope_l2(
    signal: &SampledSignal,
    bandwidth: usize,
    grid: &ConstraintGrid,
) -> Result<EnvelopeSolution, EnvelopeError> {
    check_grid(signal, bandwidth, grid)?;
    let a = project(signal, bandwidth)?;
    let (_, from_z) = metric_scale(bandwidth);
    let problem = GridProblem::build(signal, bandwidth, grid, &from_z);
    let coeffs = project_feasible(&problem, &a, None, Scheme::L2Opt)?;
    Ok(finish(signal, grid, coeffs, &a, Scheme::L2Opt))
}

/// Projection shifted up by `C0 = max_j (f(t_j) - proj(t_j))`.
pub fn naive_envelope(signal: &SampledSignal, bandwidth: usize) -> Result<EnvelopeSolution, EnvelopeError> {
    let grid = ConstraintGrid::full(signal.len());
    check_grid(signal, bandwidth, &grid)?;
    let a = project(signal, bandwidth)?;
    let recon = a.sample(signal.len());
    let c0 = signal
        .values()
        .iter()
        .zip(recon.values())
        .map(|(f, p)| f - p)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let mut coeffs = a.clone();
    coeffs.set_dc(a.dc() + c0);
    let mut sol = finish(signal, &grid, coeffs, &a, Scheme::Naive);
    sol.sa1 = c0;
    Ok(sol)
}

/// Unconstrained projection; the violation is reported, not enforced.
pub fn mse_baseline(signal: &SampledSignal, bandwidth: usize) -> Result<EnvelopeSolution, EnvelopeError> {
    let grid = ConstraintGrid::full(signal.len());
    check_grid(signal, bandwidth, &grid)?;
    let a = project(signal, bandwidth)?;
    Ok(finish(signal, &grid, a.clone(), &a, Scheme::MseBaseline))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_power_law, SmoothnessParams, TailMode};

    fn cosine(n: usize) -> SampledSignal {
        FourierSeries::new(0.0, vec![1.0], vec![0.0]).unwrap().sample(n)
    }

    fn constant(c: f64, n: usize) -> SampledSignal {
        SampledSignal::new(vec![c; n]).unwrap()
    }

    #[test]
    fn grid_counts() {
        let g = ConstraintGrid::subsampled(720, 8).unwrap();
        assert_eq!(g.active_count(), 90);
        assert!(!g.supports(45));
        assert!(g.supports(44));
        let g = ConstraintGrid::subsampled(10, 3).unwrap();
        assert_eq!(g.active_indices().collect::<Vec<_>>(), vec![0, 3, 6, 9]);
        assert_eq!(g.active_count(), 4);
        assert!(ConstraintGrid::subsampled(10, 0).is_err());
    }

    #[test]
    fn constant_signal_is_its_own_envelope() {
        let sig = constant(2.5, 16);
        for scheme in [Scheme::L1Opt, Scheme::L2Opt, Scheme::Naive, Scheme::MseBaseline] {
            let sol = solve_scheme(scheme, &sig, 2, &ConstraintGrid::full(16)).unwrap();
            assert!((sol.coeffs.dc() - 2.5).abs() < 1e-9, "{scheme}");
            assert!(sol.sa1.abs() < 1e-9, "{scheme}");
            assert!(sol.coeffs.cos_coeffs().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn cosine_with_dc_only() {
        let sig = cosine(8);
        let l1 = envelope_l1(&sig, 0, &ConstraintGrid::full(8)).unwrap();
        assert!((l1.coeffs.dc() - 1.0).abs() < 1e-12);
        assert!((l1.sa1 - 1.0).abs() < 1e-12);
        let naive = naive_envelope(&sig, 0).unwrap();
        assert!((naive.coeffs.dc() - 1.0).abs() < 1e-12);
        assert!((naive.sa1 - 1.0).abs() < 1e-12);
        let mse = mse_baseline(&sig, 0).unwrap();
        assert!(mse.coeffs.dc().abs() < 1e-12);
        assert!((mse.max_violation_on_grid - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bandlimited_signal_is_exact() {
        let sig = cosine(8);
        let l2 = envelope_l2(&sig, 1, &ConstraintGrid::full(8)).unwrap();
        let a = project(&sig, 1).unwrap();
        assert!(head_cost(&l2.coeffs, &a) < 1e-18);
        let mse = mse_baseline(&sig, 1).unwrap();
        assert!(mse.max_violation_on_grid < 1e-12);
        assert!(mse.sa2 < 1e-12);
    }

    #[test]
    fn rank_check_precedes_solve() {
        let sig = cosine(720);
        let grid = ConstraintGrid::subsampled(720, 8).unwrap();
        let err = envelope_l1(&sig, 45, &grid).unwrap_err();
        assert_eq!(err.status(), SolveStatus::RankDeficient);
        let err = envelope_l2(&sig, 45, &grid).unwrap_err();
        assert_eq!(err.status(), SolveStatus::RankDeficient);
        assert!(naive_envelope(&constant(1.0, 6), 3).is_err());
    }

    #[test]
    fn grid_mismatch() {
        let sig = cosine(8);
        assert!(matches!(
            envelope_l2(&sig, 1, &ConstraintGrid::full(9)),
            Err(EnvelopeError::GridMismatch { .. })
        ));
    }

    #[test]
    fn sa_costs_for_projection_is_tail_only() {
        let params = SmoothnessParams::new(1.0, 2.0, 0.0).unwrap();
        let sig = synth_power_law(&params, TailMode::Signed, 30, 4).sample(128);
        let mse = mse_baseline(&sig, 5).unwrap();
        let (sa1, sa2) = sa_costs(&sig, &mse, 5).unwrap();
        let a = project(&sig, 5).unwrap();
        assert_eq!(sa1, 0.0);
        assert!((sa2 - tail_energy(&sig, &a)).abs() < 1e-15);

        let naive = naive_envelope(&sig, 5).unwrap();
        let (sa1, _) = sa_costs(&sig, &naive, 5).unwrap();
        assert!((sa1 - naive.sa1).abs() < 1e-12);
    }

    #[test]
    fn optimal_schemes_beat_naive() {
        let params = SmoothnessParams::new(1.0, 1.5, 0.0).unwrap();
        for seed in 0..5 {
            let sig = synth_power_law(&params, TailMode::Signed, 40, seed).sample(160);
            let grid = ConstraintGrid::full(160);
            let l1 = envelope_l1(&sig, 4, &grid).unwrap();
            let l2 = envelope_l2(&sig, 4, &grid).unwrap();
            let naive = naive_envelope(&sig, 4).unwrap();
            assert!(l1.sa1 <= naive.sa1 + 1e-9);
            assert!(l2.sa2 <= naive.sa2 + 1e-9);
            let tol = 1e-6 * (1.0 + sig.sup_norm());
            assert!(l1.max_violation_on_grid <= tol);
            assert!(l2.max_violation_on_grid <= tol);
            assert!(naive.max_violation_on_grid <= tol);
        }
    }
}

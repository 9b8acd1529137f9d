//! Two-phase dense simplex.
//!
//! The primal `min c'x s.t. A x >= g` (x free) has the dual
//! `max g'y s.t. A'y = c, y >= 0`, which is already in standard form with
//! only `d` equality rows. The tableau therefore has `d` rows and `m + d`
//! columns (structural `y` plus phase-one artificials), and the primal
//! point is recovered from the optimal basis by solving `A_B x = g_B`.
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until progress resumes. Each phase runs on a
//! slightly perturbed right-hand side (the envelope problems are massively
//! degenerate otherwise), then the true right-hand side is restored through
//! the artificial block, which always holds `B^-1`, and any sign errors are
//! repaired with dual simplex pivots.

use super::linalg::{axpy, dot, inf_norm, Lu, Matrix};
use super::{LinearConstraints, SolveStatus, SolverError, SolverReport, Tolerances};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 30;
const CONDITION_LIMIT: f64 = 1e12;
const PERTURBATION: f64 = 1e-7;

/// Minimises `c'x` subject to `A x >= g`.
pub fn solve_lp(
    c: &[f64],
    constraints: &LinearConstraints,
    tol: &Tolerances,
) -> Result<SolverReport, SolverError> {
    let d = constraints.cols();
    if c.len() != d {
        return Err(SolverError::Dimension(format!(
            "objective has {} entries, constraints have {} columns",
            c.len(),
            d
        )));
    }
    if !c.iter().all(|v| v.is_finite()) {
        return Err(SolverError::NonFinite);
    }
    let cap = tol.iteration_cap(d, constraints.rows());

    let outcome = run_dual(c, constraints, cap, false);
    let report = match outcome {
        DualOutcome::Optimal { basis, iterations } => {
            recover_primal(c, constraints, &basis, iterations, tol)
        }
        DualOutcome::Redundant { iterations } => {
            SolverReport::failed(d, SolveStatus::RankDeficient, iterations)
        }
        DualOutcome::MaxIterations { iterations } => {
            SolverReport::failed(d, SolveStatus::MaxIterations, iterations)
        }
        DualOutcome::DualUnbounded { iterations } => {
            SolverReport::failed(d, SolveStatus::Infeasible, iterations)
        }
        DualOutcome::DualInfeasible { ray, iterations } => {
            // Either the primal is unbounded along `ray` or it is infeasible.
            // Decide with the zero-objective problem, whose dual is always
            // feasible (y = 0).
            let zeros = vec![0.0; d];
            match run_dual(&zeros, constraints, cap, true) {
                DualOutcome::DualUnbounded { iterations: extra } => {
                    SolverReport::failed(d, SolveStatus::Infeasible, iterations + extra)
                }
                DualOutcome::MaxIterations { iterations: extra } => {
                    SolverReport::failed(d, SolveStatus::MaxIterations, iterations + extra)
                }
                DualOutcome::Optimal { iterations: extra, .. }
                | DualOutcome::Redundant { iterations: extra }
                | DualOutcome::DualInfeasible {
                    iterations: extra, ..
                } => {
                    let mut rep =
                        SolverReport::failed(d, SolveStatus::Unbounded, iterations + extra);
                    rep.objective = f64::NEG_INFINITY;
                    rep.ray = Some(ray);
                    rep
                }
            }
        }
    };
    Ok(report)
}

enum DualOutcome {
    Optimal { basis: Vec<usize>, iterations: usize },
    Redundant { iterations: usize },
    DualInfeasible { ray: Vec<f64>, iterations: usize },
    DualUnbounded { iterations: usize },
    MaxIterations { iterations: usize },
}

struct Tableau {
    rows: usize,
    structural: usize,
    cols: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    objective: f64,
    scratch: Vec<f64>,
    /// Right-hand side of the initial tableau.
    base_rhs: Vec<f64>,
    /// Costs of the current phase, one per column.
    costs: Vec<f64>,
}

impl Tableau {
    /// `[D A' | I] (y, u) = D c` with `D` flipping rows so that `D c >= 0`.
    fn phase_one(c: &[f64], a: &Matrix) -> (Tableau, Vec<f64>) {
        let d = a.cols();
        let m = a.rows();
        let cols = m + d;
        let mut t = vec![0.0; d * cols];
        let mut rhs = vec![0.0; d];
        let mut signs = vec![1.0; d];
        for i in 0..d {
            signs[i] = if c[i] < 0.0 { -1.0 } else { 1.0 };
            rhs[i] = signs[i] * c[i];
            let row = &mut t[i * cols..(i + 1) * cols];
            for j in 0..m {
                row[j] = signs[i] * a.get(j, i);
            }
            row[m + i] = 1.0;
        }
        let mut reduced = vec![0.0; cols];
        for i in 0..d {
            let row = &t[i * cols..i * cols + m];
            for (r, v) in reduced[..m].iter_mut().zip(row) {
                *r -= v;
            }
        }
        let objective = rhs.iter().sum();
        let mut costs = vec![0.0; cols];
        costs[m..].iter_mut().for_each(|v| *v = 1.0);
        let tab = Tableau {
            rows: d,
            structural: m,
            cols,
            t,
            base_rhs: rhs.clone(),
            rhs,
            basis: (m..m + d).collect(),
            reduced,
            objective,
            scratch: vec![0.0; cols],
            costs,
        };
        (tab, signs)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let cols = self.cols;
        let p = self.at(r, e);
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            let inv = 1.0 / p;
            row.iter_mut().for_each(|v| *v *= inv);
            row[e] = 1.0;
            self.rhs[r] *= inv;
        }
        self.scratch.copy_from_slice(&self.t[r * cols..(r + 1) * cols]);
        let rhs_r = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let factor = self.t[i * cols + e];
            if factor != 0.0 {
                axpy(-factor, &self.scratch, &mut self.t[i * cols..(i + 1) * cols]);
                self.t[i * cols + e] = 0.0;
                self.rhs[i] -= factor * rhs_r;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-13 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let rc_e = self.reduced[e];
        if rc_e != 0.0 {
            self.objective += rc_e * rhs_r;
            axpy(-rc_e, &self.scratch, &mut self.reduced);
            self.reduced[e] = 0.0;
        }
        self.basis[r] = e;
    }

    fn entering(&self, bland: bool, tol: f64) -> Option<usize> {
        let candidates = self.reduced[..self.structural]
            .iter()
            .enumerate()
            .filter(|(_, rc)| **rc < -tol);
        if bland {
            candidates.map(|(j, _)| j).next()
        } else {
            candidates
                .fold(None, |best: Option<(usize, f64)>, (j, rc)| match best {
                    Some((_, b)) if b <= *rc => best,
                    _ => Some((j, *rc)),
                })
                .map(|(j, _)| j)
        }
    }

    fn leaving(&self, e: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs[i].max(0.0) / a;
            best = match best {
                None => Some((i, ratio, a)),
                Some((bi, br, ba)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            let art_i = self.basis[i] >= self.structural;
                            let art_b = self.basis[bi] >= self.structural;
                            (art_i && !art_b) || (art_i == art_b && a > ba)
                        }
                    } else {
                        ratio < br
                    };
                    if better {
                        Some((i, ratio, a))
                    } else {
                        Some((bi, br, ba))
                    }
                }
            };
        }
        best.map(|(i, _, _)| i)
    }

    /// Runs simplex iterations until optimality. `Err(true)` on an
    /// unbounded column, `Err(false)` when the iteration budget runs out.
    fn optimize(&mut self, tol: f64, iterations: &mut usize, cap: usize) -> Result<(), bool> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            let Some(e) = self.entering(bland, tol) else {
                return Ok(());
            };
            let Some(r) = self.leaving(e, bland) else {
                return Err(true);
            };
            if *iterations >= cap {
                return Err(false);
            }
            let step = self.rhs[r].max(0.0) / self.at(r, e);
            self.pivot(r, e);
            *iterations += 1;
            if step <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
                bland = false;
            }
        }
    }

    fn set_phase_two_costs(&mut self, cost: &[f64]) {
        let m = self.structural;
        self.costs[..m].copy_from_slice(cost);
        self.costs[m..].iter_mut().for_each(|v| *v = 0.0);
        let basic_cost = |b: usize| if b < m { cost[b] } else { 0.0 };
        self.reduced[..m].copy_from_slice(cost);
        self.reduced[m..].iter_mut().for_each(|v| *v = 0.0);
        self.objective = 0.0;
        for i in 0..self.rows {
            let cb = basic_cost(self.basis[i]);
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                axpy(-cb, row, &mut self.reduced);
                self.objective += cb * self.rhs[i];
            }
        }
        for &b in &self.basis {
            self.reduced[b] = 0.0;
        }
    }

    /// Adds a small deterministic positive offset to every row.
    fn perturb(&mut self, scale: f64) {
        for (i, v) in self.rhs.iter_mut().enumerate() {
            let jitter = ((i as u64).wrapping_mul(2_654_435_761) % 1024) as f64 / 1024.0;
            *v += PERTURBATION * scale * (1.0 + jitter);
        }
    }

    /// Recomputes `B^-1 b` from the artificial block and the objective.
    fn restore_rhs(&mut self) {
        let (cols, m) = (self.cols, self.structural);
        for i in 0..self.rows {
            let binv = &self.t[i * cols + m..(i + 1) * cols];
            self.rhs[i] = dot(binv, &self.base_rhs);
        }
        self.objective = self
            .basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, r)| self.costs[b] * r)
            .sum();
    }

    /// Dual simplex pivots until `rhs >= -tol`. `Err(true)` if a row
    /// cannot be repaired, `Err(false)` when the budget runs out.
    fn dual_repair(
        &mut self,
        allow_artificial: bool,
        tol: f64,
        iterations: &mut usize,
        cap: usize,
    ) -> Result<(), bool> {
        let limit = if allow_artificial { self.cols } else { self.structural };
        loop {
            let (r, worst) = self
                .rhs
                .iter()
                .enumerate()
                .fold((0, 0.0), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
            if worst >= -tol {
                self.rhs.iter_mut().for_each(|v| *v = v.max(0.0));
                return Ok(());
            }
            let mut pick: Option<(usize, f64, f64)> = None;
            for j in 0..limit {
                let a = self.at(r, j);
                if a >= -PIVOT_TOL || self.basis.contains(&j) {
                    continue;
                }
                let ratio = self.reduced[j].max(0.0) / -a;
                let better = match pick {
                    None => true,
                    Some((_, br, ba)) => {
                        ratio < br - 1e-12 * (1.0 + br) || (ratio <= br + 1e-12 * (1.0 + br) && -a > ba)
                    }
                };
                if better {
                    pick = Some((j, ratio, -a));
                }
            }
            let Some((e, _, _)) = pick else {
                return Err(true);
            };
            if *iterations >= cap {
                return Err(false);
            }
            self.pivot(r, e);
            *iterations += 1;
        }
    }

    /// Perturbed primal simplex followed by restoration and repair.
    fn solve_phase(
        &mut self,
        scale: f64,
        tol: f64,
        allow_artificial: bool,
        iterations: &mut usize,
        cap: usize,
    ) -> PhaseEnd {
        self.perturb(scale);
        match self.optimize(tol, iterations, cap) {
            Ok(()) => {}
            Err(true) => return PhaseEnd::Unbounded,
            Err(false) => return PhaseEnd::Budget,
        }
        self.restore_rhs();
        match self.dual_repair(allow_artificial, 1e-9 * scale, iterations, cap) {
            Ok(()) => {}
            Err(true) => return PhaseEnd::Stuck,
            Err(false) => return PhaseEnd::Budget,
        }
        match self.optimize(tol, iterations, cap) {
            Ok(()) => PhaseEnd::Optimal,
            Err(true) => PhaseEnd::Unbounded,
            Err(false) => PhaseEnd::Budget,
        }
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Budget,
    Stuck,
}

fn run_dual(c: &[f64], cons: &LinearConstraints, cap: usize, allow_redundant: bool) -> DualOutcome {
    let a = cons.matrix();
    let m = a.rows();
    let (mut tab, signs) = Tableau::phase_one(c, a);
    let mut iterations = 0usize;

    let c_scale = 1.0 + inf_norm(c);
    let tol1 = 1e-11 * c_scale;
    match tab.solve_phase(c_scale, tol1, true, &mut iterations, cap) {
        PhaseEnd::Optimal => {}
        // phase one is bounded below by zero
        PhaseEnd::Unbounded | PhaseEnd::Budget | PhaseEnd::Stuck => {
            return DualOutcome::MaxIterations { iterations }
        }
    }
    if tab.objective > 1e-9 * c_scale {
        let ray = (0..tab.rows)
            .map(|i| -signs[i] * (1.0 - tab.reduced[m + i]))
            .collect();
        return DualOutcome::DualInfeasible { ray, iterations };
    }

    // Drive artificials out of the basis; a row with no usable pivot is a
    // linear dependency among the columns of A.
    let mut redundant = false;
    for i in 0..tab.rows {
        if tab.basis[i] < m {
            continue;
        }
        let pick = (0..m)
            .filter(|j| !tab.basis.contains(j))
            .map(|j| (j, tab.at(i, j).abs()))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some((_, v)) if v >= cur.1 => best,
                _ => Some(cur),
            });
        match pick {
            Some((j, v)) if v > 1e-9 => {
                tab.pivot(i, j);
                iterations += 1;
            }
            _ => redundant = true,
        }
    }
    if redundant && !allow_redundant {
        return DualOutcome::Redundant { iterations };
    }

    let cost: Vec<f64> = cons.rhs().iter().map(|g| -g).collect();
    tab.set_phase_two_costs(&cost);
    let tol2 = 1e-11 * (1.0 + inf_norm(&cost));
    match tab.solve_phase(c_scale, tol2, false, &mut iterations, cap) {
        PhaseEnd::Optimal => DualOutcome::Optimal {
            basis: tab.basis,
            iterations,
        },
        PhaseEnd::Unbounded => DualOutcome::DualUnbounded { iterations },
        PhaseEnd::Budget | PhaseEnd::Stuck => DualOutcome::MaxIterations { iterations },
    }
}

fn recover_primal(
    c: &[f64],
    cons: &LinearConstraints,
    basis: &[usize],
    iterations: usize,
    tol: &Tolerances,
) -> SolverReport {
    let d = cons.cols();
    let m = cons.rows();
    debug_assert!(basis.iter().all(|&b| b < m));
    let mut a_b = Matrix::zeros(d, d);
    let mut g_b = vec![0.0; d];
    for (k, &i) in basis.iter().enumerate() {
        a_b.row_mut(k).copy_from_slice(cons.row(i));
        g_b[k] = cons.rhs()[i];
    }
    let lu = Lu::factor(&a_b);
    if lu.condition_estimate() > CONDITION_LIMIT {
        return SolverReport::failed(d, SolveStatus::RankDeficient, iterations);
    }
    let x = lu.solve(&g_b);
    let y_b = lu.solve_transpose(c);
    let mut y = vec![0.0; m];
    for (k, &i) in basis.iter().enumerate() {
        y[i] = y_b[k];
    }
    let slacks = cons.slacks(&x);
    let objective = dot(c, &x);
    let max_violation = slacks.iter().fold(0.0f64, |acc, s| acc.max(-s));
    let kkt = lp_kkt_residual(c, cons, &y, &slacks);

    let feas_limit = tol.feasibility * cons.rhs_scale();
    let status = if max_violation <= feas_limit && kkt <= tol.optimality {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIterations
    };
    SolverReport {
        x,
        status,
        objective,
        max_constraint_violation: max_violation,
        kkt_residual: kkt,
        iterations,
        multipliers: y,
        ray: None,
    }
}

/// Scaled KKT residual of a primal/dual pair for `min c'x, A x >= g`.
pub(crate) fn lp_kkt_residual(c: &[f64], cons: &LinearConstraints, y: &[f64], slacks: &[f64]) -> f64 {
    let aty = cons.matrix().mul_transpose_vec(y);
    let y_scale = 1.0 + inf_norm(y);
    let stationarity = aty
        .iter()
        .zip(c)
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
        / (1.0 + inf_norm(c));
    let dual_feas = y.iter().fold(0.0f64, |m, v| m.max(-v)) / y_scale;
    let comp = y
        .iter()
        .zip(slacks)
        .fold(0.0f64, |m, (yi, si)| m.max((yi * si).abs()))
        / (y_scale * cons.rhs_scale());
    stationarity.max(dual_feas).max(comp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cons(rows: &[Vec<f64>], g: &[f64]) -> LinearConstraints {
        LinearConstraints::from_rows(rows, g.to_vec()).unwrap()
    }

    #[test]
    fn max_of_lower_bounds() {
        let r = solve_lp(&[1.0], &cons(&[vec![1.0], vec![1.0]], &[2.0, 5.0]), &Tolerances::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.x[0] - 5.0).abs() < 1e-12);
        assert!((r.objective - 5.0).abs() < 1e-12);
    }

    #[test]
    fn cone_vertex() {
        let r = solve_lp(
            &[1.0, 0.0],
            &cons(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[0.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.objective.abs() < 1e-12);
        assert!(r.x.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn unbounded_with_ray() {
        let r = solve_lp(&[-1.0], &cons(&[vec![1.0]], &[0.0]), &Tolerances::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Unbounded);
        let ray = r.ray.unwrap();
        assert!(ray[0] > 0.0);
    }

    #[test]
    fn infeasible_detected() {
        // x >= 1 and -x >= 0
        let r = solve_lp(&[1.0], &cons(&[vec![1.0], vec![-1.0]], &[1.0, 0.0]), &Tolerances::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        // infeasible and would-be unbounded objective
        let r = solve_lp(&[-1.0], &cons(&[vec![1.0], vec![-1.0]], &[1.0, 0.0]), &Tolerances::default())
            .unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn dependent_columns_are_rank_deficient() {
        // x1 + x2 >= 1 and 2 x1 + 2 x2 >= 0, minimise x1 + x2
        let r = solve_lp(
            &[1.0, 1.0],
            &cons(&[vec![1.0, 1.0], vec![2.0, 2.0]], &[1.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::RankDeficient);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let tol = Tolerances {
            max_iterations: Some(0),
            ..Tolerances::default()
        };
        let r = solve_lp(&[1.0, 0.0], &cons(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[0.0, 0.0]), &tol)
            .unwrap();
        assert_eq!(r.status, SolveStatus::MaxIterations);
    }

    #[test]
    fn dimension_errors() {
        let c = cons(&[vec![1.0, 1.0]], &[0.0]);
        assert!(solve_lp(&[1.0], &c, &Tolerances::default()).is_err());
        assert!(solve_lp(&[f64::NAN, 1.0], &c, &Tolerances::default()).is_err());
    }
}

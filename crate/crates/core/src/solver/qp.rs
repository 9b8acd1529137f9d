//! Euclidean projection onto `{x : A x >= g}` by the Goldfarb-Idnani dual
//! active-set method.
//!
//! With an identity Hessian the method starts from the unconstrained
//! minimiser `x = a` and repeatedly adds the most violated constraint,
//! dropping active constraints whose multipliers would turn negative. The
//! active normals `N` are kept in factored form `J' N = [R; 0]` with `J`
//! orthogonal, updated by Givens rotations on every add and drop.

use super::linalg::{axpy, dot, inf_norm};
use super::{LinearConstraints, SolveStatus, SolverError, SolverReport, Tolerances};

/// Minimises `||x - a||^2` subject to `A x >= g`.
///
/// The reported multipliers satisfy `x - a = A' u` (the gradient of
/// `1/2 ||x - a||^2`), so they are half of those for `||x - a||^2`.
pub fn solve_qp_identity(
    target: &[f64],
    constraints: &LinearConstraints,
    tol: &Tolerances,
) -> Result<SolverReport, SolverError> {
    let d = constraints.cols();
    let m = constraints.rows();
    if target.len() != d {
        return Err(SolverError::Dimension(format!(
            "target has {} entries, constraints have {} columns",
            target.len(),
            d
        )));
    }
    if !target.iter().all(|v| v.is_finite()) {
        return Err(SolverError::NonFinite);
    }

    let feas = tol.feasibility * constraints.rhs_scale();
    let cap = tol.iteration_cap(d, m);
    let norms: Vec<f64> = (0..m)
        .map(|i| inf_norm(constraints.row(i)).max(f64::MIN_POSITIVE))
        .collect();

    let mut state = ActiveSet::new(d);
    let mut x = target.to_vec();
    let mut slack = constraints.slacks(&x);
    let mut is_active = vec![false; m];
    let mut iterations = 0usize;

    let mut z = vec![0.0; d];
    let mut dv = vec![0.0; d];
    let mut r = Vec::with_capacity(d);

    loop {
        // most violated constraint, measured in normalised distance
        let pick = (0..m)
            .filter(|&i| !is_active[i] && slack[i] < -feas)
            .map(|i| (i, slack[i] / norms[i]))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some((_, v)) if v <= cur.1 => best,
                _ => Some(cur),
            });
        let Some((p, _)) = pick else { break };
        let normal = constraints.row(p);
        let mut u_p = 0.0;

        loop {
            if iterations >= cap {
                let mut rep = SolverReport::failed(d, SolveStatus::MaxIterations, iterations);
                rep.x = x;
                return Ok(rep);
            }
            iterations += 1;

            state.project(normal, &mut dv, &mut z, &mut r);
            let q = state.len();

            // partial step: first active multiplier to hit zero
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for j in 0..q {
                if r[j] > 1e-12 {
                    let ratio = state.u[j] / r[j];
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            // full step: makes constraint p active
            let z_dot_n = dot(&z, normal);
            let n_sq = dot(normal, normal);
            let t2 = if z_dot_n > 1e-13 * n_sq {
                -slack[p] / z_dot_n
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                let mut rep = SolverReport::failed(d, SolveStatus::Infeasible, iterations);
                rep.x = x;
                return Ok(rep);
            }

            if t2.is_finite() {
                axpy(t, &z, &mut x);
                let az = constraints.matrix().mul_vec(&z);
                axpy(t, &az, &mut slack);
            }
            for j in 0..q {
                state.u[j] -= t * r[j];
            }
            u_p += t;

            if t2 <= t1 {
                slack[p] = 0.0;
                is_active[p] = true;
                state.add(p, u_p, &mut dv);
                break;
            }
            let k = drop.expect("finite partial step has a blocking constraint");
            is_active[state.active[k]] = false;
            state.drop(k);
        }
    }

    // refresh slacks to wash out incremental drift
    let slack = constraints.slacks(&x);
    let mut multipliers = vec![0.0; m];
    for (&i, &u) in state.active.iter().zip(&state.u) {
        multipliers[i] = u;
    }
    let mut grad = x.clone();
    axpy(-1.0, target, &mut grad);
    let kkt = qp_kkt_residual(&grad, constraints, &multipliers, &slack);
    let max_violation = slack.iter().fold(0.0f64, |acc, s| acc.max(-s));
    let objective = x.iter().zip(target).map(|(u, v)| (u - v) * (u - v)).sum();
    Ok(SolverReport {
        x,
        status: SolveStatus::Optimal,
        objective,
        max_constraint_violation: max_violation,
        kkt_residual: kkt,
        iterations,
        multipliers,
        ray: None,
    })
}

/// Scaled KKT residual for `min 1/2||x - a||^2, A x >= g` given the
/// gradient `x - a`, multipliers and slacks.
pub(crate) fn qp_kkt_residual(
    grad: &[f64],
    cons: &LinearConstraints,
    u: &[f64],
    slacks: &[f64],
) -> f64 {
    let atu = cons.matrix().mul_transpose_vec(u);
    let scale = 1.0 + inf_norm(grad);
    let stationarity = grad
        .iter()
        .zip(&atu)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale;
    let u_scale = 1.0 + inf_norm(u);
    let dual_feas = u.iter().fold(0.0f64, |m, v| m.max(-v)) / u_scale;
    let comp = u
        .iter()
        .zip(slacks)
        .fold(0.0f64, |m, (ui, si)| m.max((ui * si).abs()))
        / (u_scale * cons.rhs_scale());
    stationarity.max(dual_feas).max(comp)
}

/// Active constraint bookkeeping: indices, multipliers and the factors
/// `J` (column-major, `d x d`) and `R` (upper triangular, stored by column).
struct ActiveSet {
    d: usize,
    j: Vec<f64>,
    r_cols: Vec<Vec<f64>>,
    active: Vec<usize>,
    u: Vec<f64>,
}

impl ActiveSet {
    fn new(d: usize) -> Self {
        let mut j = vec![0.0; d * d];
        for i in 0..d {
            j[i * d + i] = 1.0;
        }
        ActiveSet {
            d,
            j,
            r_cols: Vec::new(),
            active: Vec::new(),
            u: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.active.len()
    }

    fn col(&self, k: usize) -> &[f64] {
        &self.j[k * self.d..(k + 1) * self.d]
    }

    /// `dv = J' n`, primal step `z = J2 dv2` and dual step `r = R^-1 dv1`.
    fn project(&self, normal: &[f64], dv: &mut [f64], z: &mut [f64], r: &mut Vec<f64>) {
        let q = self.len();
        for k in 0..self.d {
            dv[k] = dot(self.col(k), normal);
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        for k in q..self.d {
            if dv[k] != 0.0 {
                axpy(dv[k], self.col(k), z);
            }
        }
        r.clear();
        r.extend_from_slice(&dv[..q]);
        for i in (0..q).rev() {
            r[i] /= self.r_cols[i][i];
            let ri = r[i];
            for (k, rk) in r.iter_mut().enumerate().take(i) {
                *rk -= self.r_cols[i][k] * ri;
            }
        }
    }

    fn rotate_cols(&mut self, a: usize, b: usize, c: f64, s: f64) {
        let d = self.d;
        let (lo, hi) = self.j.split_at_mut(b * d);
        let ca = &mut lo[a * d..(a + 1) * d];
        let cb = &mut hi[..d];
        for (x, y) in ca.iter_mut().zip(cb.iter_mut()) {
            let (xa, yb) = (*x, *y);
            *x = c * xa + s * yb;
            *y = -s * xa + c * yb;
        }
    }

    /// Appends a constraint whose `J' n` is in `dv`.
    fn add(&mut self, index: usize, u: f64, dv: &mut [f64]) {
        let q = self.len();
        for k in (q + 1..self.d).rev() {
            let (a, b) = (dv[k - 1], dv[k]);
            if b == 0.0 {
                continue;
            }
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            dv[k - 1] = h;
            dv[k] = 0.0;
            self.rotate_cols(k - 1, k, c, s);
        }
        self.r_cols.push(dv[..=q].to_vec());
        self.active.push(index);
        self.u.push(u);
    }

    /// Removes the `k`-th active constraint and restores triangularity.
    fn drop(&mut self, k: usize) {
        self.active.remove(k);
        self.u.remove(k);
        self.r_cols.remove(k);
        let q = self.len();
        for i in k..q {
            // column i (formerly i + 1) has a subdiagonal entry at row i + 1
            let (a, b) = (self.r_cols[i][i], self.r_cols[i][i + 1]);
            let h = a.hypot(b);
            if h == 0.0 {
                self.r_cols[i].truncate(i + 1);
                continue;
            }
            let (c, s) = (a / h, b / h);
            for col in self.r_cols[i..].iter_mut() {
                let (x, y) = (col[i], col[i + 1]);
                col[i] = c * x + s * y;
                col[i + 1] = -s * x + c * y;
            }
            self.r_cols[i].truncate(i + 1);
            self.rotate_cols(i, i + 1, c, s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cons(rows: &[Vec<f64>], g: &[f64]) -> LinearConstraints {
        LinearConstraints::from_rows(rows, g.to_vec()).unwrap()
    }

    #[test]
    fn feasible_target_is_returned() {
        let r = solve_qp_identity(
            &[2.0, 3.0],
            &cons(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.x, vec![2.0, 3.0]);
        assert_eq!(r.objective, 0.0);
    }

    #[test]
    fn halfspace_projection() {
        let r = solve_qp_identity(&[0.0, 0.0], &cons(&[vec![1.0, 0.0]], &[1.0]), &Tolerances::default())
            .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-12 && r.x[1].abs() < 1e-12);
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_projection() {
        let r = solve_qp_identity(
            &[0.0, 0.0],
            &cons(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-12 && (r.x[1] - 1.0).abs() < 1e-12);
        assert!(r.kkt_residual < 1e-12);
    }

    #[test]
    fn drops_constraint_when_multiplier_turns_negative() {
        // x >= 1 first, then x + y >= 3 with y <= ... forces a drop of the first
        let r = solve_qp_identity(
            &[0.0, 0.0],
            &cons(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![-1.0, 1.0]], &[1.0, 4.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.max_constraint_violation < 1e-12);
        assert!(r.kkt_residual < 1e-10);
        assert!((r.x[0] - 2.0).abs() < 1e-10 && (r.x[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn infeasible_system() {
        let r = solve_qp_identity(
            &[0.0],
            &cons(&[vec![1.0], vec![-1.0]], &[1.0, 0.0]),
            &Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }
}

//! Brute-force reference solvers for tiny problems.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Rows of `[1, cos(2 pi k j / n).., sin(2 pi k j / n)..]` for `j = 0..n`.
pub fn basis(n: usize, l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 2 * l + 1, |j, c| {
        let phase = |k: usize| 2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
        match c {
            0 => 1.0,
            c if c <= l => phase(c).cos(),
            c => phase(c - l).sin(),
        }
    })
}

fn subsets(m: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..m {
        let grown: Vec<Vec<usize>> = out
            .iter()
            .filter(|s| s.len() < max)
            .map(|s| {
                let mut t = s.clone();
                t.push(i);
                t
            })
            .collect();
        out.extend(grown);
    }
    out
}

/// `min (x - a)' W (x - a)` over `A x >= g` with `W = diag(w)`, by
/// enumerating every candidate active set and keeping the best feasible
/// stationary point.
pub fn weighted_projection(a: &DVector<f64>, w: &[f64], mat: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let d = a.len();
    let winv = DMatrix::from_diagonal(&DVector::from_iterator(d, w.iter().map(|v| 1.0 / v)));
    let weight = DMatrix::from_diagonal(&DVector::from_column_slice(w));
    let mut best: Option<(f64, DVector<f64>)> = None;
    for set in subsets(mat.nrows(), d) {
        let x = if set.is_empty() {
            a.clone()
        } else {
            let aw = mat.select_rows(&set);
            let gw = DVector::from_iterator(set.len(), set.iter().map(|&i| g[i]));
            let gram = &aw * &winv * aw.transpose();
            let Some(lambda) = gram.lu().solve(&(gw - &aw * a)) else {
                continue;
            };
            a + &winv * aw.transpose() * lambda
        };
        let slack = mat * &x - g;
        if slack.iter().any(|s| *s < -1e-10) {
            continue;
        }
        let diff = &x - a;
        let cost = (diff.transpose() * &weight * &diff)[0];
        if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-14) {
            best = Some((cost, x));
        }
    }
    best.expect("feasible set is nonempty").1
}

/// `min c'x` over `A x >= g` by enumerating vertices; `None` if no vertex
/// is feasible.
pub fn lp_vertices(c: &DVector<f64>, mat: &DMatrix<f64>, g: &DVector<f64>) -> Option<f64> {
    let d = c.len();
    let mut best: Option<f64> = None;
    for set in subsets(mat.nrows(), d).into_iter().filter(|s| s.len() == d) {
        let aw = mat.select_rows(&set);
        let gw = DVector::from_iterator(d, set.iter().map(|&i| g[i]));
        if aw.clone().svd(false, false).singular_values.min() < 1e-9 {
            continue;
        }
        let Some(x) = aw.lu().solve(&gw) else { continue };
        if (mat * &x - g).iter().any(|s| *s < -1e-9) {
            continue;
        }
        let v = c.dot(&x);
        best = Some(best.map_or(v, |b: f64| b.min(v)));
    }
    best
}

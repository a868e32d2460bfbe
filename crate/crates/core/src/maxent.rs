//! Maximum entropy matrices by damped Newton on the convex dual.
//!
//! The maximizer of the Bernoulli entropy over the degree polytope has the
//! form `zeta_jk = 1 / (1 + exp(lambda_j + lambda_k))`. The dual
//!
//! ```text
//! g(lambda) = sum_{j<k} ln(1 + exp(-lambda_j - lambda_k)) + sum_k lambda_k d_k
//! ```
//!
//! is smooth, strictly convex and unconstrained; its gradient is
//! `d_k - sum_{j != k} zeta_jk` and its Hessian is the matrix with entries
//! `zeta (1 - zeta)` off the diagonal and their row sums on the diagonal.
//! At the minimizer `g(lambda*) = H(z)`.
//!
//! The bipartite problem uses `zeta_jk = 1 / (1 + exp(lambda_j + mu_k))`
//! with the gauge `sum lambda = sum mu` fixed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::degrees::{
    erdos_gallai, gale_ryser, polytope_nonempty, BipartiteMargins, DegreeSequence,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::summation::{kahan_sum, KahanSum};

/// Beyond this sup-norm the implied entries leave `(1e-35, 1 - 1e-35)`.
pub const DIVERGENCE_THRESHOLD: f64 = 40.0;
pub const DEFAULT_MAX_ITER: usize = 100;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Margin turning the open bounds on `d_i / (n - 1)` into closed forms.
pub const TAMENESS_MARGIN: f64 = 1e-9;

/// Default solver tolerance `1e-10 * max(1, max_k d_k)`.
pub fn default_tol(max_degree: u32) -> f64 {
    1e-10 * (max_degree as f64).max(1.0)
}

/// `1 / (1 + e^s)` without overflow.
#[inline]
pub fn logistic_zeta(s: f64) -> f64 {
    if s >= 0.0 {
        let e = (-s).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + s.exp())
    }
}

/// `ln(1 + e^{-s})` without overflow.
#[inline]
fn softplus_neg(s: f64) -> f64 {
    if s >= 0.0 {
        (-s).exp().ln_1p()
    } else {
        -s + s.exp().ln_1p()
    }
}

/// Bernoulli entropy `x ln(1/x) + (1-x) ln(1/(1-x))` in nats.
#[inline]
pub fn bernoulli_entropy(x: f64) -> f64 {
    let mut h = 0.0;
    if x > 0.0 {
        h -= x * x.ln();
    }
    if x < 1.0 {
        h -= (1.0 - x) * (-x).ln_1p();
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntSolution {
    pub lambda: Vec<f64>,
    /// `H(z)` in nats, from the primal sum.
    pub entropy: f64,
    pub zeta_min: f64,
    pub zeta_max: f64,
    /// `max_k |sum_{j != k} zeta_jk - d_k|`.
    pub residual_inf: f64,
    pub iterations: usize,
    /// Dual objective at the returned point.
    pub dual_value: f64,
}

impl MaxEntSolution {
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    #[inline]
    pub fn zeta(&self, j: usize, k: usize) -> f64 {
        logistic_zeta(self.lambda[j] + self.lambda[k])
    }

    /// Dense symmetric matrix of `zeta_jk` with a zero diagonal.
    pub fn zeta_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |j, k| if j == k { 0.0 } else { self.zeta(j, k) })
    }

    /// Pairs `(j, k)`, `j < k`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> {
        edge_list(self.n())
    }

    pub fn is_tame(&self, delta: f64) -> bool {
        delta <= self.zeta_min && self.zeta_max <= 1.0 - delta
    }
}

/// All unordered pairs of `0..n` in lexicographic order.
pub fn edge_list(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |j| (j + 1..n).map(move |k| (j, k)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteMaxEntSolution {
    pub lambda_rows: Vec<f64>,
    pub lambda_cols: Vec<f64>,
    pub entropy: f64,
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    pub dual_value: f64,
}

impl BipartiteMaxEntSolution {
    pub fn m(&self) -> usize {
        self.lambda_rows.len()
    }

    pub fn n(&self) -> usize {
        self.lambda_cols.len()
    }

    #[inline]
    pub fn zeta(&self, j: usize, k: usize) -> f64 {
        logistic_zeta(self.lambda_rows[j] + self.lambda_cols[k])
    }

    pub fn zeta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.m(), self.n(), |j, k| self.zeta(j, k))
    }

    /// The same solution with `lambda_j + c`, `mu_k - c`; the matrix `z` is
    /// unchanged.
    pub fn shifted_gauge(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.lambda_rows.iter_mut().for_each(|x| *x += c);
        s.lambda_cols.iter_mut().for_each(|x| *x -= c);
        s
    }
}

/// Observed tameness: the largest `delta` with `delta <= zeta <= 1 - delta`.
pub fn tameness_observed(sol: &MaxEntSolution) -> f64 {
    sol.zeta_min.min(1.0 - sol.zeta_max)
}

pub fn tameness_observed_bipartite(sol: &BipartiteMaxEntSolution) -> f64 {
    sol.zeta_min.min(1.0 - sol.zeta_max)
}

// ---------------------------------------------------------------------------
// Graph dual

/// Objective, gradient and Hessian of the graph dual at `lambda`.
struct DualEval {
    value: f64,
    gradient: DVector<f64>,
}

fn graph_dual_value(lambda: &[f64], degrees: &[f64]) -> f64 {
    let n = lambda.len();
    let mut acc = KahanSum::new();
    for j in 0..n {
        for k in j + 1..n {
            acc.add(softplus_neg(lambda[j] + lambda[k]));
        }
    }
    for k in 0..n {
        acc.add(lambda[k] * degrees[k]);
    }
    acc.value()
}

fn graph_dual_eval(lambda: &[f64], degrees: &[f64]) -> DualEval {
    let n = lambda.len();
    let mut row_sums = vec![KahanSum::new(); n];
    for j in 0..n {
        for k in j + 1..n {
            let z = logistic_zeta(lambda[j] + lambda[k]);
            row_sums[j].add(z);
            row_sums[k].add(z);
        }
    }
    let gradient = DVector::from_fn(n, |k, _| degrees[k] - row_sums[k].value());
    DualEval {
        value: graph_dual_value(lambda, degrees),
        gradient,
    }
}

/// Hessian of the graph dual: `zeta (1 - zeta)` off the diagonal and the
/// row sums of those entries on the diagonal.
pub fn graph_dual_hessian(lambda: &[f64]) -> DMatrix<f64> {
    let n = lambda.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for k in j + 1..n {
            let z = logistic_zeta(lambda[j] + lambda[k]);
            let w = z * (1.0 - z);
            h[(j, k)] = w;
            h[(k, j)] = w;
        }
    }
    for j in 0..n {
        let s = kahan_sum((0..n).filter(|&k| k != j).map(|k| h[(j, k)]));
        h[(j, j)] = s;
    }
    h
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Shared damped-Newton loop. `step` returns the Newton direction for the
/// current iterate and gradient; `eval` evaluates objective and gradient.
fn damped_newton<E, S>(
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
    eval: E,
    step: S,
) -> Result<(Vec<f64>, DualEval, usize)>
where
    E: Fn(&[f64]) -> DualEval,
    S: Fn(&[f64], &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut current = eval(&x);
    for iter in 0..=max_iter {
        let residual = current.gradient.amax();
        if residual <= tol {
            return Ok((x, current, iter));
        }
        if iter == max_iter {
            return Err(Error::MaxIterExceeded {
                iterations: max_iter,
                residual,
            });
        }
        let direction = step(&x, &current.gradient)?;
        let slope = current.gradient.dot(&direction);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = x
                .iter()
                .zip(direction.iter())
                .map(|(a, b)| a + t * b)
                .collect();
            let norm = sup_norm(&trial);
            if norm.is_finite() && norm <= DIVERGENCE_THRESHOLD {
                let next = eval(&trial);
                if next.value <= current.value + ARMIJO * t * slope {
                    accepted = Some((trial, next));
                    break;
                }
                // Near the optimum the objective decrease drops below its
                // rounding error; fall back to the gradient norm.
                if t == 1.0 && next.gradient.amax() < 0.5 * residual {
                    accepted = Some((trial, next));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, next)) => {
                x = trial;
                current = next;
            }
            None => {
                // No acceptable step inside the divergence ball: the optimum
                // is being pushed to infinity.
                let full: Vec<f64> = x.iter().zip(direction.iter()).map(|(a, b)| a + b).collect();
                return Err(Error::DivergedToBoundary(sup_norm(&full).max(sup_norm(&x))));
            }
        }
    }
    unreachable!()
}

fn summarize_graph(lambda: &[f64]) -> (f64, f64, f64) {
    let n = lambda.len();
    let mut zmin = f64::INFINITY;
    let mut zmax = f64::NEG_INFINITY;
    let mut h = KahanSum::new();
    for j in 0..n {
        for k in j + 1..n {
            let z = logistic_zeta(lambda[j] + lambda[k]);
            zmin = zmin.min(z);
            zmax = zmax.max(z);
            h.add(bernoulli_entropy(z));
        }
    }
    (h.value(), zmin, zmax)
}

/// Maximum entropy matrix of a degree sequence.
///
/// Sequences whose polytope is empty give [`Error::NotStrictlyFeasible`].
/// Sequences whose polytope is non-empty but has no interior (the
/// maximizer sits on the boundary, e.g. `(1,1)` or a complete graph) give
/// [`Error::DivergedToBoundary`].
pub fn solve_maxent(d: &DegreeSequence, tol: f64, max_iter: usize) -> Result<MaxEntSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let interior = erdos_gallai(d, true);
    if !interior.strictly_feasible {
        if polytope_nonempty(d) {
            return Err(Error::DivergedToBoundary(f64::INFINITY));
        }
        return Err(Error::NotStrictlyFeasible(interior.first_violated_k));
    }
    let n = d.n();
    let degrees: Vec<f64> = d.degrees().iter().map(|&x| x as f64).collect();
    // exact for regular sequences
    let init: Vec<f64> = degrees
        .iter()
        .map(|&dk| 0.5 * ((n as f64 - 1.0) / dk - 1.0).ln())
        .collect();
    if sup_norm(&init) > DIVERGENCE_THRESHOLD {
        return Err(Error::DivergedToBoundary(sup_norm(&init)));
    }

    let (lambda, last, iterations) = damped_newton(
        init,
        tol,
        max_iter,
        |x| graph_dual_eval(x, &degrees),
        |x, grad| {
            let hess = graph_dual_hessian(x);
            let chol = linalg::cholesky_log_det(&hess)?;
            Ok(-linalg::solve_with_factor(&chol.factor, grad))
        },
    )?;

    let (entropy, zeta_min, zeta_max) = summarize_graph(&lambda);
    Ok(MaxEntSolution {
        residual_inf: last.gradient.amax(),
        dual_value: last.value,
        lambda,
        entropy,
        zeta_min,
        zeta_max,
        iterations,
    })
}

/// Graph solver with the default tolerance and iteration budget.
pub fn solve_maxent_default(d: &DegreeSequence) -> Result<MaxEntSolution> {
    solve_maxent(d, default_tol(d.max()), DEFAULT_MAX_ITER)
}

/// Dual objective of the graph problem; exposed for duality-gap checks.
pub fn graph_dual_objective(d: &DegreeSequence, lambda: &[f64]) -> f64 {
    let degrees: Vec<f64> = d.degrees().iter().map(|&x| x as f64).collect();
    graph_dual_value(lambda, &degrees)
}

// ---------------------------------------------------------------------------
// Bipartite dual

fn bipartite_dual_eval(x: &[f64], rows: &[f64], cols: &[f64]) -> DualEval {
    let (m, n) = (rows.len(), cols.len());
    let mut value = KahanSum::new();
    let mut row_sums = vec![KahanSum::new(); m];
    let mut col_sums = vec![KahanSum::new(); n];
    for j in 0..m {
        for k in 0..n {
            let s = x[j] + x[m + k];
            value.add(softplus_neg(s));
            let z = logistic_zeta(s);
            row_sums[j].add(z);
            col_sums[k].add(z);
        }
    }
    for j in 0..m {
        value.add(x[j] * rows[j]);
    }
    for k in 0..n {
        value.add(x[m + k] * cols[k]);
    }
    let gradient = DVector::from_fn(m + n, |i, _| {
        if i < m {
            rows[i] - row_sums[i].value()
        } else {
            cols[i - m] - col_sums[i - m].value()
        }
    });
    DualEval {
        value: value.value(),
        gradient,
    }
}

/// Hessian of the bipartite dual in `(lambda; mu)` coordinates. It is
/// singular along `u = (1,..,1; -1,..,-1)`.
pub fn bipartite_dual_hessian(x: &[f64], m: usize, n: usize) -> DMatrix<f64> {
    let mut h = DMatrix::<f64>::zeros(m + n, m + n);
    for j in 0..m {
        for k in 0..n {
            let z = logistic_zeta(x[j] + x[m + k]);
            let w = z * (1.0 - z);
            h[(j, m + k)] = w;
            h[(m + k, j)] = w;
            h[(j, j)] += w;
            h[(m + k, m + k)] += w;
        }
    }
    h
}

/// Sign vector `(1,..,1; -1,..,-1)` spanning the gauge direction.
pub fn gauge_vector(m: usize, n: usize) -> DVector<f64> {
    DVector::from_fn(m + n, |i, _| if i < m { 1.0 } else { -1.0 })
}

fn project_out(v: &mut DVector<f64>, u: &DVector<f64>) {
    let c = v.dot(u) / u.norm_squared();
    v.axpy(-c, u, 1.0);
}

/// Maximum entropy matrix with prescribed row and column sums.
pub fn solve_maxent_bipartite(
    margins: &BipartiteMargins,
    tol: f64,
    max_iter: usize,
) -> Result<BipartiteMaxEntSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let report = gale_ryser(margins);
    if !report.feasible {
        return Err(Error::NotStrictlyFeasible(report.first_violated_k));
    }
    if !report.strictly_feasible {
        return Err(Error::DivergedToBoundary(f64::INFINITY));
    }
    let (m, n) = (margins.m(), margins.n());
    let rows: Vec<f64> = margins.rows().iter().map(|&x| x as f64).collect();
    let cols: Vec<f64> = margins.cols().iter().map(|&x| x as f64).collect();
    let u = gauge_vector(m, n);

    let mut init = DVector::from_fn(m + n, |i, _| {
        if i < m {
            0.5 * ((n as f64 - rows[i]) / rows[i]).ln()
        } else {
            0.5 * ((m as f64 - cols[i - m]) / cols[i - m]).ln()
        }
    });
    project_out(&mut init, &u);

    let renormalize = |x: &[f64]| -> Vec<f64> {
        let mut v = DVector::from_column_slice(x);
        project_out(&mut v, &u);
        v.as_slice().to_vec()
    };

    let (x, last, iterations) = damped_newton(
        init.as_slice().to_vec(),
        tol,
        max_iter,
        |x| bipartite_dual_eval(&renormalize(x), &rows, &cols),
        |x, grad| {
            // Regularize the singular direction; the gradient is orthogonal
            // to u for balanced margins, so the step is too.
            let mut hess = bipartite_dual_hessian(x, m, n);
            hess += (&u * u.transpose()) / u.norm_squared();
            let chol = linalg::cholesky_log_det(&hess)?;
            let mut step = -linalg::solve_with_factor(&chol.factor, grad);
            project_out(&mut step, &u);
            Ok(step)
        },
    )?;
    let x = renormalize(&x);

    let mut zmin = f64::INFINITY;
    let mut zmax = f64::NEG_INFINITY;
    let mut h = KahanSum::new();
    for j in 0..m {
        for k in 0..n {
            let z = logistic_zeta(x[j] + x[m + k]);
            zmin = zmin.min(z);
            zmax = zmax.max(z);
            h.add(bernoulli_entropy(z));
        }
    }
    Ok(BipartiteMaxEntSolution {
        lambda_rows: x[..m].to_vec(),
        lambda_cols: x[m..].to_vec(),
        entropy: h.value(),
        zeta_min: zmin,
        zeta_max: zmax,
        residual_inf: last.gradient.amax(),
        iterations,
        dual_value: last.value,
    })
}

pub fn solve_maxent_bipartite_default(
    margins: &BipartiteMargins,
) -> Result<BipartiteMaxEntSolution> {
    let max_margin = margins
        .rows()
        .iter()
        .chain(margins.cols())
        .copied()
        .max()
        .unwrap_or(0);
    solve_maxent_bipartite(margins, default_tol(max_margin), DEFAULT_MAX_ITER)
}

// ---------------------------------------------------------------------------
// Sufficient tameness condition

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TamenessCertificate {
    pub alpha: f64,
    pub beta: f64,
    pub n0: f64,
    pub delta: f64,
    pub applies: bool,
}

/// Certificate from explicit bounds `alpha < d_i/(n-1) < beta`.
pub fn tameness_from_bounds(alpha: f64, beta: f64, n: usize) -> TamenessCertificate {
    let gap = 4.0 * alpha - (alpha + beta).powi(2);
    let n0 = (beta / (alpha * (1.0 - beta))).max(4.0 * (beta - alpha) / gap) + 1.0;
    let eps = alpha.min(alpha - (alpha + beta).powi(2) / 4.0);
    let e6 = eps.powi(6);
    let delta = e6 / (1.0 + e6);
    let applies = gap > 0.0 && 0.0 < alpha && alpha < beta && beta < 1.0 && (n as f64) > n0;
    TamenessCertificate {
        alpha,
        beta,
        n0,
        delta,
        applies,
    }
}

/// Sufficient tameness test from the extreme degrees alone.
pub fn tameness_sufficient(d: &DegreeSequence) -> TamenessCertificate {
    let n = d.n();
    let scale = (n as f64 - 1.0).max(1.0);
    let alpha = d.min() as f64 / scale - TAMENESS_MARGIN;
    let beta = d.max() as f64 / scale + TAMENESS_MARGIN;
    tameness_from_bounds(alpha, beta, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(v: &[u32]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec()).unwrap()
    }

    fn row_sums(sol: &MaxEntSolution) -> Vec<f64> {
        let n = sol.n();
        (0..n)
            .map(|k| (0..n).filter(|&j| j != k).map(|j| sol.zeta(j, k)).sum())
            .collect()
    }

    #[test]
    fn four_regular_nine_is_uniform_half() {
        let d = DegreeSequence::regular(9, 4).unwrap();
        let sol = solve_maxent_default(&d).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sol.lambda.iter().all(|&l| l.abs() < 1e-15));
        assert!((sol.zeta_min - 0.5).abs() < 1e-15 && (sol.zeta_max - 0.5).abs() < 1e-15);
        assert!((sol.entropy - 36.0 * 2f64.ln()).abs() < 1e-12);
        assert!((tameness_observed(&sol) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_edge_diverges() {
        let err = solve_maxent(&ds(&[1, 1]), 1e-10, 100).unwrap_err();
        assert!(matches!(err, Error::DivergedToBoundary(_)));
        let err = solve_maxent(&ds(&[3, 3, 3, 3]), 1e-10, 100).unwrap_err();
        assert!(matches!(err, Error::DivergedToBoundary(_)));
    }

    #[test]
    fn empty_polytope_is_not_strictly_feasible() {
        let err = solve_maxent(&ds(&[4, 4, 1, 1, 1, 1]), 1e-10, 100).unwrap_err();
        assert!(matches!(err, Error::NotStrictlyFeasible(Some(2))));
    }

    #[test]
    fn small_irregular_sequence_restores_constraints() {
        let d = ds(&[3, 2, 2, 2, 1]);
        let sol = solve_maxent(&d, 1e-10, 100).unwrap();
        assert!(sol.residual_inf <= 1e-10);
        for (got, &want) in row_sums(&sol).iter().zip(d.degrees()) {
            assert!((got - want as f64).abs() <= 1e-10);
        }
        let delta = tameness_observed(&sol);
        assert!(delta > 0.0 && delta <= 0.5);
        // strong duality
        assert!((sol.dual_value - sol.entropy).abs() <= 10.0 * 1e-10 * 5.0);
        assert!((graph_dual_objective(&d, &sol.lambda) - sol.entropy).abs() <= 5e-9);
    }

    #[test]
    fn regular_case_matches_symmetric_value() {
        for (n, d) in [(7usize, 2u32), (10, 3), (12, 8), (15, 4)] {
            let seq = DegreeSequence::regular(n, d).unwrap();
            let sol = solve_maxent_default(&seq).unwrap();
            let z = d as f64 / (n as f64 - 1.0);
            assert!((sol.zeta_min - z).abs() <= 1e-12 && (sol.zeta_max - z).abs() <= 1e-12);
            assert!((tameness_observed(&sol) - z.min(1.0 - z)).abs() < 1e-12);
        }
    }

    #[test]
    fn larger_degree_means_smaller_lambda() {
        let d = ds(&[5, 1, 3, 4, 2, 3, 2, 4]);
        let sol = solve_maxent_default(&d).unwrap();
        for a in 0..d.n() {
            for b in 0..d.n() {
                if d.degrees()[a] > d.degrees()[b] {
                    assert!(sol.lambda[a] < sol.lambda[b]);
                }
            }
        }
    }

    #[test]
    fn hessian_has_row_sum_diagonal() {
        let lambda = [0.3, -0.2, 0.1, 0.5];
        let h = graph_dual_hessian(&lambda);
        for j in 0..4 {
            let off: f64 = (0..4).filter(|&k| k != j).map(|k| h[(j, k)]).sum();
            assert!((h[(j, j)] - off).abs() < 1e-15);
        }
    }

    #[test]
    fn bipartite_symmetric_cases() {
        let m = BipartiteMargins::new(vec![2; 4], vec![2; 4]).unwrap();
        let sol = solve_maxent_bipartite_default(&m).unwrap();
        assert!((sol.zeta_min - 0.5).abs() < 1e-12 && (sol.zeta_max - 0.5).abs() < 1e-12);
        assert!((sol.entropy - 16.0 * 2f64.ln()).abs() < 1e-10);

        let m = BipartiteMargins::new(vec![1, 1], vec![1, 1]).unwrap();
        let sol = solve_maxent_bipartite_default(&m).unwrap();
        assert!((sol.zeta_min - 0.5).abs() < 1e-12 && (sol.zeta_max - 0.5).abs() < 1e-12);
        assert!((sol.entropy - 4.0 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn bipartite_margins_restored_and_gauge_fixed() {
        // (3,2,1) x (2,2,2) forces a full first row, so use four columns
        let full_row = BipartiteMargins::new(vec![3, 2, 1], vec![2, 2, 2]).unwrap();
        assert!(matches!(
            solve_maxent_bipartite_default(&full_row),
            Err(Error::DivergedToBoundary(_))
        ));
        let m = BipartiteMargins::new(vec![3, 2, 1], vec![2, 2, 1, 1]).unwrap();
        let sol = solve_maxent_bipartite(&m, 1e-10, 100).unwrap();
        let z = sol.zeta_matrix();
        for j in 0..3 {
            assert!((z.row(j).sum() - m.rows()[j] as f64).abs() <= 1e-10);
        }
        for k in 0..4 {
            assert!((z.column(k).sum() - m.cols()[k] as f64).abs() <= 1e-10);
        }
        let gauge: f64 = sol.lambda_rows.iter().sum::<f64>() - sol.lambda_cols.iter().sum::<f64>();
        assert!(gauge.abs() < 1e-12);
        assert!((sol.dual_value - sol.entropy).abs() < 1e-8);
    }

    #[test]
    fn bipartite_boundary_and_infeasible() {
        let full = BipartiteMargins::new(vec![2, 2], vec![2, 2]).unwrap();
        assert!(matches!(
            solve_maxent_bipartite_default(&full),
            Err(Error::DivergedToBoundary(_))
        ));
        let bad = BipartiteMargins::new(vec![3, 3], vec![1, 1, 1]).unwrap();
        assert!(matches!(
            solve_maxent_bipartite_default(&bad),
            Err(Error::NotStrictlyFeasible(_))
        ));
    }

    #[test]
    fn tameness_certificate_closed_forms() {
        let d = DegreeSequence::regular(9, 4).unwrap();
        let cert = tameness_sufficient(&d);
        let (a, b) = (0.5 - TAMENESS_MARGIN, 0.5 + TAMENESS_MARGIN);
        let n0 = (b / (a * (1.0 - b))).max(4.0 * (b - a) / (4.0 * a - (a + b).powi(2))) + 1.0;
        assert_eq!(cert.n0, n0);
        assert!((cert.n0 - 3.0).abs() < 1e-6);
        let eps: f64 = a.min(a - (a + b).powi(2) / 4.0);
        assert!((eps - 0.25).abs() < 1e-8);
        assert!((cert.delta - eps.powi(6) / (1.0 + eps.powi(6))).abs() < 1e-18);
        assert!(cert.applies);
        let sol = solve_maxent_default(&d).unwrap();
        assert!(cert.delta <= sol.zeta_min);
    }

    #[test]
    fn tameness_on_boundary_does_not_apply() {
        // alpha = 1/4 gives beta = 2 sqrt(alpha) - alpha = 3/4
        let mut v = vec![2u32; 5];
        v.extend([6u32; 4]);
        let cert = tameness_sufficient(&ds(&v));
        assert!(!cert.applies);
        // interior example: all ratios in (0.25, 0.74) with n large
        let n = 401usize;
        let v: Vec<u32> = (0..n).map(|i| 110 + (i as u32 % 180)).collect();
        let cert = tameness_sufficient(&ds(&v));
        assert!(cert.alpha > 0.25 && cert.beta < 0.74);
        assert!(cert.applies, "{cert:?}");
    }
}

//! Gaussian model of the degree constraints and the Edgeworth-corrected
//! count estimate for graphs.
//!
//! Under the Gaussian measure with density proportional to `exp(-q)`,
//! `q(t) = 1/2 tᵀ Q t`, the covariance is `C = Q⁻¹`. All moments needed by
//! the correction are moments of the linear forms `tau_j + tau_k`, one per
//! edge, and are reduced to the edge covariances `c(e1, e2)` with Wick's
//! formula:
//!
//! ```text
//! E w1³ w2³ = 9 E w1² E w2² E w1w2 + 6 (E w1w2)³
//! E w⁴      = 3 (E w²)²
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::degrees::{check_parity, erdos_gallai, polytope_nonempty, DegreeSequence};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maxent::{
    default_tol, edge_list, solve_maxent, tameness_observed, MaxEntSolution, DEFAULT_MAX_ITER,
};
use crate::summation::{kahan_sum, par_block_map, KahanSum};

/// Counts whose estimate stays below this are also reported in linear scale.
pub const COUNT_LIMIT: f64 = 1e300;

#[derive(Debug, Clone)]
pub struct GaussianModel {
    /// The matrix `Q` with `q(t) = 1/2 tᵀ Q t`.
    pub q: DMatrix<f64>,
    /// Lower Cholesky factor of `Q`.
    pub chol: DMatrix<f64>,
    pub log_det_q: f64,
    /// Covariance `Q⁻¹`.
    pub cov: DMatrix<f64>,
}

impl GaussianModel {
    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    /// `q(t) = 1/2 tᵀ Q t`.
    pub fn quadratic_form(&self, t: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(t);
        0.5 * v.dot(&(&self.q * &v))
    }

    #[inline]
    fn edge_cov_unchecked(&self, (j1, k1): (usize, usize), (j2, k2): (usize, usize)) -> f64 {
        let c = &self.cov;
        c[(j1, j2)] + c[(j1, k2)] + c[(k1, j2)] + c[(k1, k2)]
    }
}

/// Coefficient of `(tau_j + tau_k)^3` in the cubic variable `f`.
#[inline]
pub fn cubic_coefficient(z: f64) -> f64 {
    z * (1.0 - z) * (2.0 * z - 1.0) / 6.0
}

/// Coefficient of `(tau_j + tau_k)^4` in the quartic variable `h`.
#[inline]
pub fn quartic_coefficient(z: f64) -> f64 {
    z * (1.0 - z) * (6.0 * z * z - 6.0 * z + 1.0) / 24.0
}

/// Assembles `Q`: `zeta (1 - zeta)` off the diagonal and
/// `d_j - sum_k zeta_jk²` on the diagonal.
pub fn q_matrix(sol: &MaxEntSolution, d: &DegreeSequence) -> DMatrix<f64> {
    let n = sol.n();
    let z = sol.zeta_matrix();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j != k {
                q[(j, k)] = z[(j, k)] * (1.0 - z[(j, k)]);
            }
        }
        let sq = kahan_sum((0..n).filter(|&k| k != j).map(|k| z[(j, k)] * z[(j, k)]));
        q[(j, j)] = d.degrees()[j] as f64 - sq;
    }
    q
}

pub fn build_gaussian(sol: &MaxEntSolution, d: &DegreeSequence) -> Result<GaussianModel> {
    if sol.n() != d.n() {
        return Err(Error::InvalidInput(format!(
            "solution has {} vertices, sequence has {}",
            sol.n(),
            d.n()
        )));
    }
    if d.n() <= 2 {
        return Err(Error::NotPositiveDefinite);
    }
    let q = q_matrix(sol, d);
    let chol = linalg::cholesky_log_det(&q)?;
    let cov = linalg::inverse_from_factor(&chol.factor);
    Ok(GaussianModel {
        q,
        chol: chol.factor,
        log_det_q: chol.log_det,
        cov,
    })
}

/// `E (tau_{j1} + tau_{k1}) (tau_{j2} + tau_{k2})` under the model.
pub fn edge_covariance(
    model: &GaussianModel,
    e1: (usize, usize),
    e2: (usize, usize),
) -> Result<f64> {
    let n = model.n();
    for &index in &[e1.0, e1.1, e2.0, e2.1] {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
    }
    if e1.0 == e1.1 || e2.0 == e2.1 {
        return Err(Error::InvalidInput(
            "an edge needs two distinct endpoints".into(),
        ));
    }
    Ok(model.edge_cov_unchecked(e1, e2))
}

/// `mu = E f²` by Wick's formula, as a fixed-order double sum over ordered
/// pairs of edges.
pub fn compute_mu(model: &GaussianModel, sol: &MaxEntSolution) -> f64 {
    let edges: Vec<(usize, usize)> = edge_list(sol.n()).collect();
    let a: Vec<f64> = edges
        .iter()
        .map(|&(j, k)| cubic_coefficient(sol.zeta(j, k)))
        .collect();
    let v: Vec<f64> = edges
        .iter()
        .map(|&e| model.edge_cov_unchecked(e, e))
        .collect();
    let partials = par_block_map(edges.len(), |range| {
        let mut acc = KahanSum::new();
        for p in range {
            if a[p] == 0.0 {
                continue;
            }
            let mut inner = KahanSum::new();
            for r in 0..edges.len() {
                let c = model.edge_cov_unchecked(edges[p], edges[r]);
                inner.add(a[r] * (9.0 * v[p] * v[r] * c + 6.0 * c * c * c));
            }
            acc.add(a[p] * inner.value());
        }
        acc.value()
    });
    kahan_sum(partials)
}

/// `nu = E h = sum_e b_e * 3 v_e²`.
pub fn compute_nu(model: &GaussianModel, sol: &MaxEntSolution) -> f64 {
    kahan_sum(edge_list(sol.n()).map(|e| {
        let b = quartic_coefficient(sol.zeta(e.0, e.1));
        let v = model.edge_cov_unchecked(e, e);
        3.0 * b * v * v
    }))
}

/// Additive log-space decomposition of the graph count estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub n: usize,
    pub log2_term: f64,
    pub entropy_term: f64,
    /// `-(n/2) ln 2π - 1/2 ln det Q`.
    pub gaussian_term: f64,
    pub log_det_q: f64,
    pub mu: f64,
    pub nu: f64,
    /// `-mu/2 + nu`.
    pub edgeworth_term: f64,
    pub ln_count: f64,
    pub count: Option<f64>,
    pub delta_observed: f64,
    pub iterations: usize,
    pub residual_inf: f64,
}

impl CountReport {
    /// Estimated probability that independent edges with probabilities
    /// `zeta` realize the degree sequence, `|G(D)| e^{-H(z)}`.
    pub fn acceptance_probability(&self) -> f64 {
        (self.ln_count - self.entropy_term).exp()
    }
}

fn linear_count(ln_count: f64) -> Option<f64> {
    (ln_count < COUNT_LIMIT.ln()).then(|| ln_count.exp())
}

/// Assembles the report from a converged solution and its model.
pub fn assemble_report(sol: &MaxEntSolution, model: &GaussianModel) -> CountReport {
    let n = sol.n();
    let mu = compute_mu(model, sol);
    let nu = compute_nu(model, sol);
    let log2_term = std::f64::consts::LN_2;
    let entropy_term = sol.entropy;
    let gaussian_term =
        -(n as f64 / 2.0) * (2.0 * std::f64::consts::PI).ln() - 0.5 * model.log_det_q;
    let edgeworth_term = -mu / 2.0 + nu;
    let ln_count = log2_term + entropy_term + gaussian_term + edgeworth_term;
    CountReport {
        n,
        log2_term,
        entropy_term,
        gaussian_term,
        log_det_q: model.log_det_q,
        mu,
        nu,
        edgeworth_term,
        ln_count,
        count: linear_count(ln_count),
        delta_observed: tameness_observed(sol),
        iterations: sol.iterations,
        residual_inf: sol.residual_inf,
    }
}

/// Full pipeline: maximum entropy matrix, Gaussian model, Wick moments.
pub fn count_graphs(d: &DegreeSequence, tol: f64) -> Result<CountReport> {
    count_graphs_with_solution(d, tol).map(|(report, _)| report)
}

/// As [`count_graphs`], also returning the solver output.
pub fn count_graphs_with_solution(
    d: &DegreeSequence,
    tol: f64,
) -> Result<(CountReport, MaxEntSolution)> {
    if !check_parity(d) {
        return Err(Error::OddParity);
    }
    let interior = erdos_gallai(d, true);
    if !interior.strictly_feasible && !polytope_nonempty(d) {
        return Err(Error::NotStrictlyFeasible(interior.first_violated_k));
    }
    let sol = solve_maxent(d, tol, DEFAULT_MAX_ITER)?;
    let model = build_gaussian(&sol, d)?;
    Ok((assemble_report(&sol, &model), sol))
}

pub fn count_graphs_default(d: &DegreeSequence) -> Result<CountReport> {
    count_graphs(d, default_tol(d.max()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::solve_maxent_default;

    fn regular_model(n: usize, d: u32) -> (MaxEntSolution, GaussianModel) {
        let seq = DegreeSequence::regular(n, d).unwrap();
        let sol = solve_maxent_default(&seq).unwrap();
        let model = build_gaussian(&sol, &seq).unwrap();
        (sol, model)
    }

    /// Closed-form inverse of `w [(n-2) I + J]`:
    /// `(1/(w(n-2))) [I - J / (2n-2)]` (Sherman–Morrison).
    fn regular_cov(n: usize, w: f64, j: usize, k: usize) -> f64 {
        let base = 1.0 / (w * (n as f64 - 2.0));
        let id = if j == k { 1.0 } else { 0.0 };
        base * (id - 1.0 / (2.0 * n as f64 - 2.0))
    }

    #[test]
    fn four_regular_nine_entries() {
        let (_, model) = regular_model(9, 4);
        for j in 0..9 {
            for k in 0..9 {
                let want = if j == k { 2.0 } else { 0.25 };
                assert!((model.q[(j, k)] - want).abs() < 1e-14);
            }
        }
        let id = &model.cov * &model.q;
        assert!(linalg::max_abs(&(id - DMatrix::identity(9, 9))) < 1e-8);
    }

    #[test]
    fn regular_log_det_closed_form() {
        for (n, d) in [(5usize, 2u32), (9, 4), (12, 3), (20, 11)] {
            let (_, model) = regular_model(n, d);
            let z = d as f64 / (n as f64 - 1.0);
            let nf = n as f64;
            let want =
                nf * (z * (1.0 - z)).ln() + (2.0 * nf - 2.0).ln() + (nf - 1.0) * (nf - 2.0).ln();
            assert!(
                ((model.log_det_q - want) / want).abs() < 1e-10,
                "n={n} d={d}"
            );
        }
    }

    #[test]
    fn edge_covariance_regular_closed_form() {
        let (_, model) = regular_model(9, 4);
        let w = 0.25;
        let want =
            regular_cov(9, w, 0, 0) + 2.0 * regular_cov(9, w, 0, 1) + regular_cov(9, w, 1, 1);
        let got = edge_covariance(&model, (0, 1), (0, 1)).unwrap();
        assert!((got - want).abs() < 1e-13);
        // depends only on the overlap size
        let one = edge_covariance(&model, (0, 1), (1, 2)).unwrap();
        let one_b = edge_covariance(&model, (3, 7), (7, 8)).unwrap();
        let zero = edge_covariance(&model, (0, 1), (2, 3)).unwrap();
        let zero_b = edge_covariance(&model, (4, 6), (5, 8)).unwrap();
        assert!((one - one_b).abs() < 1e-14);
        assert!((zero - zero_b).abs() < 1e-14);
        assert!((one - (regular_cov(9, w, 0, 1) * 3.0 + regular_cov(9, w, 1, 1))).abs() < 1e-13);
        assert!((zero - 4.0 * regular_cov(9, w, 0, 1)).abs() < 1e-13);
        assert_eq!(
            edge_covariance(&model, (0, 5), (2, 3)).unwrap(),
            edge_covariance(&model, (2, 3), (0, 5)).unwrap()
        );
        assert!(matches!(
            edge_covariance(&model, (0, 9), (1, 2)),
            Err(Error::IndexOutOfRange { index: 9, len: 9 })
        ));
    }

    #[test]
    fn half_probabilities_kill_the_cubic_term() {
        let (sol, model) = regular_model(9, 4);
        assert_eq!(compute_mu(&model, &sol), 0.0);
        // b_e = -1/192 on every edge, so nu = -(1/64) sum v_e²
        let v = edge_covariance(&model, (0, 1), (0, 1)).unwrap();
        let nu = compute_nu(&model, &sol);
        assert!((nu - (-(1.0 / 64.0) * 36.0 * v * v)).abs() < 1e-14);
        assert!(nu < 0.0);
    }

    #[test]
    fn quartic_coefficient_vanishes_at_roots() {
        let s3 = 3f64.sqrt();
        for z in [(3.0 - s3) / 6.0, (3.0 + s3) / 6.0] {
            assert!(quartic_coefficient(z).abs() < 1e-16);
        }
        assert!((quartic_coefficient(0.5) + 1.0 / 192.0).abs() < 1e-18);
    }

    #[test]
    fn quadratic_form_matches_edge_sum() {
        let seq = DegreeSequence::new(vec![3, 2, 2, 2, 1]).unwrap();
        let sol = solve_maxent_default(&seq).unwrap();
        let model = build_gaussian(&sol, &seq).unwrap();
        let t: [f64; 5] = [0.3, -1.1, 0.7, 0.05, -0.4];
        let direct: f64 = edge_list(5)
            .map(|(j, k)| {
                let z = sol.zeta(j, k);
                0.5 * (z - z * z) * (t[j] + t[k]).powi(2)
            })
            .sum();
        assert!((model.quadratic_form(&t) - direct).abs() < 1e-9);
        // diagonal forms agree up to the residual
        for j in 0..5 {
            let alt: f64 = (0..5).filter(|&k| k != j).map(|k| model.q[(j, k)]).sum();
            assert!((model.q[(j, j)] - alt).abs() <= sol.residual_inf + 1e-14);
        }
    }

    #[test]
    fn tiny_sequences_are_rejected() {
        let seq = DegreeSequence::new(vec![1, 1]).unwrap();
        let sol = MaxEntSolution {
            lambda: vec![0.0, 0.0],
            entropy: 0.0,
            zeta_min: 0.5,
            zeta_max: 0.5,
            residual_inf: 0.0,
            iterations: 0,
            dual_value: 0.0,
        };
        assert!(matches!(
            build_gaussian(&sol, &seq),
            Err(Error::NotPositiveDefinite)
        ));
        let odd = DegreeSequence::new(vec![2, 1, 1, 1, 1, 1]).unwrap();
        assert!(matches!(count_graphs_default(&odd), Err(Error::OddParity)));
    }

    #[test]
    fn report_terms_sum_exactly() {
        let seq = DegreeSequence::new(vec![3, 2, 2, 2, 1]).unwrap();
        let r = count_graphs_default(&seq).unwrap();
        assert_eq!(
            r.ln_count.to_bits(),
            (r.log2_term + r.entropy_term + r.gaussian_term + r.edgeworth_term).to_bits()
        );
        assert!(r.mu >= -1e-12);
    }
}

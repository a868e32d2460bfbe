//! Count estimate for 0-1 matrices with prescribed row and column sums.
//!
//! The quadratic form `q(s, t) = 1/2 sum_{jk} zeta_jk (1 - zeta_jk)
//! (sigma_j + tau_k)²` on `R^{m+n}` vanishes along
//! `u = (1,..,1; -1,..,-1)`. Its determinant is taken on `u⊥` as the
//! product of the non-zero eigenvalues of `B`, where `q(x) = <Bx, x>`.
//! Moments are taken under the Gaussian on `u⊥` with density `exp(-q)`,
//! whose covariance is the pseudo-inverse of `2B`. Every moment needed is
//! a polynomial in the forms `sigma_j + tau_k`, which annihilate `u`, so
//! the choice of hyperplane does not matter.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::degrees::{gale_ryser, BipartiteMargins};
use crate::edgeworth::{cubic_coefficient, quartic_coefficient, COUNT_LIMIT};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maxent::{
    bipartite_dual_hessian, default_tol, gauge_vector, solve_maxent_bipartite,
    tameness_observed_bipartite, BipartiteMaxEntSolution, DEFAULT_MAX_ITER,
};
use crate::summation::{kahan_sum, par_block_map, KahanSum};

/// Relative threshold below which an eigenvalue of `B` counts as zero.
pub const KERNEL_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BipartiteGaussianModel {
    pub m: usize,
    pub n: usize,
    /// `B` with `q(x) = <Bx, x>`.
    pub b: DMatrix<f64>,
    pub u: DVector<f64>,
    /// Orthonormal basis of `u⊥` (columns).
    pub basis: DMatrix<f64>,
    /// Eigenvalues of `B` restricted to `u⊥`, ascending.
    pub restricted_eigenvalues: Vec<f64>,
    /// `ln` of the product of the `m + n - 1` non-zero eigenvalues of `B`.
    pub log_pdet: f64,
    /// Covariance of the Gaussian on `u⊥`, in ambient coordinates.
    pub cplus: DMatrix<f64>,
}

impl BipartiteGaussianModel {
    /// `q(s, t) = <B x, x>`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = DVector::from_column_slice(x);
        v.dot(&(&self.b * &v))
    }

    /// Covariance of `sigma_{j1} + tau_{k1}` and `sigma_{j2} + tau_{k2}`.
    #[inline]
    pub fn cell_covariance(&self, (j1, k1): (usize, usize), (j2, k2): (usize, usize)) -> f64 {
        let c = &self.cplus;
        let (k1, k2) = (self.m + k1, self.m + k2);
        c[(j1, j2)] + c[(j1, k2)] + c[(k1, j2)] + c[(k1, k2)]
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.m)
            .flat_map(|j| (0..self.n).map(move |k| (j, k)))
            .collect()
    }
}

pub fn build_bipartite_gaussian(sol: &BipartiteMaxEntSolution) -> Result<BipartiteGaussianModel> {
    let (m, n) = (sol.m(), sol.n());
    if m + n < 3 {
        return Err(Error::KernelDimensionNotOne(m + n));
    }
    let x: Vec<f64> = sol
        .lambda_rows
        .iter()
        .chain(&sol.lambda_cols)
        .copied()
        .collect();
    // the dual Hessian A satisfies q(x) = 1/2 xᵀ A x
    let b = bipartite_dual_hessian(&x, m, n) * 0.5;

    let full = SymmetricEigen::new(b.clone());
    let top = full.eigenvalues.amax();
    let kernel = full
        .eigenvalues
        .iter()
        .filter(|e| e.abs() < KERNEL_THRESHOLD * top)
        .count();
    if kernel != 1 {
        return Err(Error::KernelDimensionNotOne(kernel));
    }

    let u = gauge_vector(m, n);
    let basis = linalg::orthogonal_complement_basis(&u);
    let restricted = basis.transpose() * &b * &basis;
    let eig = SymmetricEigen::new(restricted.clone());
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));
    if eigenvalues[0] < KERNEL_THRESHOLD * top {
        return Err(Error::KernelDimensionNotOne(2));
    }
    let log_pdet = kahan_sum(eigenvalues.iter().map(|e| e.ln()));

    let chol = linalg::cholesky_log_det(&(restricted * 2.0))?;
    let inner = linalg::inverse_from_factor(&chol.factor);
    let cplus = &basis * inner * basis.transpose();

    Ok(BipartiteGaussianModel {
        m,
        n,
        b,
        u,
        basis,
        restricted_eigenvalues: eigenvalues,
        log_pdet,
        cplus,
    })
}

/// Covariance of the Gaussian with density `exp(-q)` on the coordinate
/// hyperplane `x_drop = 0`, padded with zeros in ambient coordinates.
pub fn coordinate_hyperplane_covariance(
    model: &BipartiteGaussianModel,
    drop: usize,
) -> Result<DMatrix<f64>> {
    let dim = model.m + model.n;
    if drop >= dim {
        return Err(Error::IndexOutOfRange {
            index: drop,
            len: dim,
        });
    }
    let keep: Vec<usize> = (0..dim).filter(|&i| i != drop).collect();
    let sub = DMatrix::from_fn(dim - 1, dim - 1, |a, c| 2.0 * model.b[(keep[a], keep[c])]);
    let chol = linalg::cholesky_log_det(&sub)?;
    let inv = linalg::inverse_from_factor(&chol.factor);
    let mut out = DMatrix::zeros(dim, dim);
    for (a, &i) in keep.iter().enumerate() {
        for (c, &k) in keep.iter().enumerate() {
            out[(i, k)] = inv[(a, c)];
        }
    }
    Ok(out)
}

/// `mu = E f²` over ordered pairs of cells.
pub fn compute_mu_bipartite(model: &BipartiteGaussianModel, sol: &BipartiteMaxEntSolution) -> f64 {
    let cells = model.cells();
    let a: Vec<f64> = cells
        .iter()
        .map(|&(j, k)| cubic_coefficient(sol.zeta(j, k)))
        .collect();
    let v: Vec<f64> = cells.iter().map(|&c| model.cell_covariance(c, c)).collect();
    let partials = par_block_map(cells.len(), |range| {
        let mut acc = KahanSum::new();
        for p in range {
            if a[p] == 0.0 {
                continue;
            }
            let mut inner = KahanSum::new();
            for r in 0..cells.len() {
                let c = model.cell_covariance(cells[p], cells[r]);
                inner.add(a[r] * (9.0 * v[p] * v[r] * c + 6.0 * c * c * c));
            }
            acc.add(a[p] * inner.value());
        }
        acc.value()
    });
    kahan_sum(partials)
}

/// `nu = E h = sum_{jk} b_jk * 3 Var(sigma_j + tau_k)²`.
pub fn compute_nu_bipartite(model: &BipartiteGaussianModel, sol: &BipartiteMaxEntSolution) -> f64 {
    kahan_sum(model.cells().into_iter().map(|c| {
        let v = model.cell_covariance(c, c);
        3.0 * quartic_coefficient(sol.zeta(c.0, c.1)) * v * v
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartiteCountReport {
    pub m: usize,
    pub n: usize,
    pub entropy_term: f64,
    /// `1/2 ln(m+n) - ((m+n-1)/2) ln 4π - 1/2 log_pdet`.
    pub gaussian_term: f64,
    pub log_pdet: f64,
    pub mu: f64,
    pub nu: f64,
    pub edgeworth_term: f64,
    pub ln_count: f64,
    pub count: Option<f64>,
    pub delta_observed: f64,
    /// Whether `delta m <= n` and `delta n <= m` for the observed delta.
    pub aspect_ok: bool,
    pub iterations: usize,
    pub residual_inf: f64,
}

pub fn assemble_bipartite_report(
    sol: &BipartiteMaxEntSolution,
    model: &BipartiteGaussianModel,
) -> BipartiteCountReport {
    let (m, n) = (sol.m(), sol.n());
    let dim = (m + n) as f64;
    let mu = compute_mu_bipartite(model, sol);
    let nu = compute_nu_bipartite(model, sol);
    let entropy_term = sol.entropy;
    let gaussian_term = 0.5 * dim.ln()
        - ((dim - 1.0) / 2.0) * (4.0 * std::f64::consts::PI).ln()
        - 0.5 * model.log_pdet;
    let edgeworth_term = -mu / 2.0 + nu;
    let ln_count = entropy_term + gaussian_term + edgeworth_term;
    let delta = tameness_observed_bipartite(sol);
    BipartiteCountReport {
        m,
        n,
        entropy_term,
        gaussian_term,
        log_pdet: model.log_pdet,
        mu,
        nu,
        edgeworth_term,
        ln_count,
        count: (ln_count < COUNT_LIMIT.ln()).then(|| ln_count.exp()),
        delta_observed: delta,
        aspect_ok: delta * m as f64 <= n as f64 && delta * n as f64 <= m as f64,
        iterations: sol.iterations,
        residual_inf: sol.residual_inf,
    }
}

pub fn count_bipartite(margins: &BipartiteMargins, tol: f64) -> Result<BipartiteCountReport> {
    count_bipartite_with_solution(margins, tol).map(|(r, _)| r)
}

pub fn count_bipartite_with_solution(
    margins: &BipartiteMargins,
    tol: f64,
) -> Result<(BipartiteCountReport, BipartiteMaxEntSolution)> {
    let report = gale_ryser(margins);
    if !report.feasible {
        return Err(Error::Infeasible(report.first_violated_k));
    }
    let sol = solve_maxent_bipartite(margins, tol, DEFAULT_MAX_ITER)?;
    let model = build_bipartite_gaussian(&sol)?;
    Ok((assemble_bipartite_report(&sol, &model), sol))
}

pub fn count_bipartite_default(margins: &BipartiteMargins) -> Result<BipartiteCountReport> {
    let max_margin = margins
        .rows()
        .iter()
        .chain(margins.cols())
        .copied()
        .max()
        .unwrap_or(0);
    count_bipartite(margins, default_tol(max_margin))
}

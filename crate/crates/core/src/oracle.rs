//! Exact ground truth at desk scale.
//!
//! * [`exact_count_graphs`]: recursive edge assignment memoized on the
//!   multiset of residual degrees.
//! * [`exact_count_bipartite`]: column-by-column dynamic program memoized on
//!   the multiset of residual row sums.
//! * [`fourier_count_graphs`]: the count as the constant Fourier coefficient
//!   of a trigonometric polynomial, evaluated exactly by the trapezoid rule.
//! * [`mc_moments`] / [`mc_moments_bipartite`]: Monte Carlo estimates of
//!   `E f²` and `E h` sampled directly from the Gaussian model.

use std::collections::HashMap;

use nalgebra::DVector;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bipartite::{coordinate_hyperplane_covariance, BipartiteGaussianModel};
use crate::degrees::{BipartiteMargins, DegreeSequence};
use crate::edgeworth::{cubic_coefficient, quartic_coefficient, GaussianModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::maxent::{edge_list, logistic_zeta, BipartiteMaxEntSolution, MaxEntSolution};
use crate::rng;
use crate::summation::{par_block_map, KahanSum};

pub const MAX_BACKTRACK_N: usize = 14;
pub const MAX_DP_CELLS: usize = 64;
pub const MAX_DP_STATES: usize = 10_000_000;
pub const MAX_FOURIER_N: usize = 6;
pub const MIN_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Backtrack,
    Dp,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactCount {
    pub value: BigUint,
    pub method: CountMethod,
}

impl ExactCount {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Natural logarithm of the count (`-inf` for zero).
    pub fn ln(&self) -> f64 {
        if self.value.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.value.bits();
        if bits < 1000 {
            return self.to_f64().ln();
        }
        let shift = bits - 900;
        (&self.value >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Numeric type for memoized counts: exact integers or floating point.
pub(crate) trait Weight:
    Clone + Zero + One + std::ops::Add<Output = Self> + std::ops::Mul<Output = Self>
{
}

impl<T> Weight for T where
    T: Clone + Zero + One + std::ops::Add<Output = T> + std::ops::Mul<Output = T>
{
}

fn binomial_table<T: Weight>(n: usize) -> Vec<Vec<T>> {
    let mut t = vec![vec![T::zero(); n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = T::one();
        for k in 1..=i {
            t[i][k] = t[i - 1][k - 1].clone() + t[i - 1][k].clone();
        }
    }
    t
}

/// Runs of equal values in a non-increasing slice, as `(value, count)`.
pub(crate) fn classes(sorted: &[u8]) -> Vec<(u8, usize)> {
    let mut out: Vec<(u8, usize)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((value, count)) if *value == v => *count += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Calls `visit(choice)` for every `choice[c] <= caps[c]` with
/// `sum(choice) == total`, in lexicographic order.
pub(crate) fn for_each_composition(caps: &[usize], total: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(
        caps: &[usize],
        suffix_cap: &[usize],
        pos: usize,
        left: usize,
        choice: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if pos == caps.len() {
            if left == 0 {
                visit(choice);
            }
            return;
        }
        let hi = caps[pos].min(left);
        let lo = left.saturating_sub(suffix_cap[pos + 1]);
        for k in lo..=hi {
            choice.push(k);
            rec(caps, suffix_cap, pos + 1, left - k, choice, visit);
            choice.pop();
        }
    }
    let mut suffix_cap = vec![0usize; caps.len() + 1];
    for i in (0..caps.len()).rev() {
        suffix_cap[i] = suffix_cap[i + 1] + caps[i];
    }
    if suffix_cap[0] < total {
        return;
    }
    let mut choice = Vec::with_capacity(caps.len());
    rec(caps, &suffix_cap, 0, total, &mut choice, visit);
}

fn eg_holds(sorted: &[u8]) -> bool {
    let n = sorted.len();
    let mut prefix = 0i64;
    for k in 1..=n {
        prefix += sorted[k - 1] as i64;
        let kk = k as i64;
        let tail: i64 = sorted[k..].iter().map(|&d| (d as i64).min(kk)).sum();
        if prefix > kk * (kk - 1) + tail {
            return false;
        }
    }
    true
}

/// Memoized count of graphs realizing a multiset of residual degrees.
pub(crate) struct GraphCounter<T> {
    binom: Vec<Vec<T>>,
    memo: HashMap<Vec<u8>, T>,
    prune: bool,
}

impl<T: Weight> GraphCounter<T> {
    pub(crate) fn new(n: usize, prune: bool) -> Self {
        GraphCounter {
            binom: binomial_table(n),
            memo: HashMap::new(),
            prune,
        }
    }

    pub(crate) fn binomial(&self, size: usize, k: usize) -> T {
        self.binom[size][k].clone()
    }

    /// Number of simple graphs on the vertices of `state` (residual degrees,
    /// sorted non-increasingly) realizing exactly those degrees.
    pub(crate) fn count(&mut self, state: &[u8]) -> T {
        let Some(&top) = state.first() else {
            return T::one();
        };
        if top == 0 {
            return T::one();
        }
        let sum: u32 = state.iter().map(|&d| d as u32).sum();
        if sum % 2 == 1 || top as usize >= state.len() {
            return T::zero();
        }
        if let Some(v) = self.memo.get(state) {
            return v.clone();
        }
        if self.prune && !eg_holds(state) {
            self.memo.insert(state.to_vec(), T::zero());
            return T::zero();
        }
        let rest = &state[1..];
        let cls = classes(rest);
        let caps: Vec<usize> = cls
            .iter()
            .map(|&(v, c)| if v == 0 { 0 } else { c })
            .collect();
        let mut choices = Vec::new();
        for_each_composition(&caps, top as usize, &mut |choice| {
            choices.push(choice.to_vec())
        });
        let mut total = T::zero();
        for choice in choices {
            let mut weight = T::one();
            for (&(_, size), &k) in cls.iter().zip(&choice) {
                weight = weight * self.binom[size][k].clone();
            }
            let next = reduce_classes(&cls, &choice);
            let sub = self.count(&next);
            if !sub.is_zero() {
                total = total + weight * sub;
            }
        }
        self.memo.insert(state.to_vec(), total.clone());
        total
    }
}

/// Residual multiset after taking `choice[c]` members of each class,
/// sorted non-increasingly.
pub(crate) fn reduce_classes(cls: &[(u8, usize)], choice: &[usize]) -> Vec<u8> {
    let mut next = Vec::with_capacity(cls.iter().map(|c| c.1).sum());
    for (&(value, size), &k) in cls.iter().zip(choice) {
        next.extend(std::iter::repeat_n(value.saturating_sub(1), k));
        next.extend(std::iter::repeat_n(value, size - k));
    }
    next.sort_unstable_by(|a, b| b.cmp(a));
    next
}

fn graph_count(d: &DegreeSequence, prune: bool) -> Result<ExactCount> {
    if d.n() > MAX_BACKTRACK_N {
        return Err(Error::TooLarge(format!(
            "n = {} exceeds {MAX_BACKTRACK_N} for exact graph counting",
            d.n()
        )));
    }
    let mut state: Vec<u8> = d.degrees().iter().map(|&x| x as u8).collect();
    state.sort_unstable_by(|a, b| b.cmp(a));
    let mut counter = GraphCounter::<BigUint>::new(d.n(), prune);
    Ok(ExactCount {
        value: counter.count(&state),
        method: CountMethod::Backtrack,
    })
}

/// Exact number of labeled simple graphs with degree sequence `d`.
///
/// The highest-degree remaining vertex is joined to a set of partners;
/// partners are chosen per class of equal residual degree (weighted by
/// binomial coefficients), and the count of the residual problem is
/// memoized on its sorted residual degrees. Branches whose residual
/// sequence fails Erdős–Gallai are cut.
pub fn exact_count_graphs(d: &DegreeSequence) -> Result<ExactCount> {
    graph_count(d, true)
}

/// [`exact_count_graphs`] without Erdős–Gallai pruning.
pub fn exact_count_graphs_unpruned(d: &DegreeSequence) -> Result<ExactCount> {
    graph_count(d, false)
}

/// All graphs with degree sequence `d` as sorted edge lists, by brute force
/// over edge subsets. Limited to `n <= 7`.
pub fn enumerate_graphs(d: &DegreeSequence) -> Result<Vec<Vec<(usize, usize)>>> {
    let n = d.n();
    if n > 7 {
        return Err(Error::TooLarge(format!(
            "n = {n} exceeds 7 for enumeration"
        )));
    }
    let edges: Vec<(usize, usize)> = edge_list(n).collect();
    let target = d.degrees();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << edges.len()) {
        let mut deg = vec![0u32; n];
        for (i, &(j, k)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                deg[j] += 1;
                deg[k] += 1;
            }
        }
        if deg == target {
            out.push(
                edges
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect(),
            );
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 0-1 matrices

struct MatrixCounter<'a> {
    cols: &'a [u32],
    binom: Vec<Vec<BigUint>>,
    memo: HashMap<(usize, Vec<u8>), BigUint>,
}

impl MatrixCounter<'_> {
    fn count(&mut self, col: usize, rows: &[u8]) -> Result<BigUint> {
        if col == self.cols.len() {
            return Ok(if rows.iter().all(|&r| r == 0) {
                BigUint::one()
            } else {
                BigUint::zero()
            });
        }
        let remaining_cols = self.cols.len() - col;
        if rows.first().is_some_and(|&r| r as usize > remaining_cols) {
            return Ok(BigUint::zero());
        }
        let key = (col, rows.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        if self.memo.len() >= MAX_DP_STATES {
            return Err(Error::TooLarge(format!(
                "dynamic program exceeded {MAX_DP_STATES} states"
            )));
        }
        let cls = classes(rows);
        let caps: Vec<usize> = cls
            .iter()
            .map(|&(v, c)| if v == 0 { 0 } else { c })
            .collect();
        let mut choices = Vec::new();
        for_each_composition(&caps, self.cols[col] as usize, &mut |c| {
            choices.push(c.to_vec())
        });
        let mut total = BigUint::zero();
        for choice in choices {
            let mut weight = BigUint::one();
            for (&(_, size), &k) in cls.iter().zip(&choice) {
                weight *= &self.binom[size][k];
            }
            let next = reduce_classes(&cls, &choice);
            let sub = self.count(col + 1, &next)?;
            if !sub.is_zero() {
                total += weight * sub;
            }
        }
        self.memo.insert(key, total.clone());
        Ok(total)
    }
}

/// Exact number of 0-1 matrices with the given margins.
pub fn exact_count_bipartite(margins: &BipartiteMargins) -> Result<ExactCount> {
    let (m, n) = (margins.m(), margins.n());
    if m * n > MAX_DP_CELLS {
        return Err(Error::TooLarge(format!(
            "{m}x{n} exceeds {MAX_DP_CELLS} cells for exact matrix counting"
        )));
    }
    let rsum: u32 = margins.rows().iter().sum();
    let csum: u32 = margins.cols().iter().sum();
    if rsum != csum {
        return Ok(ExactCount {
            value: BigUint::zero(),
            method: CountMethod::Dp,
        });
    }
    let mut rows: Vec<u8> = margins.rows().iter().map(|&r| r as u8).collect();
    rows.sort_unstable_by(|a, b| b.cmp(a));
    let mut counter = MatrixCounter {
        cols: margins.cols(),
        binom: binomial_table(m),
        memo: HashMap::new(),
    };
    Ok(ExactCount {
        value: counter.count(0, &rows)?,
        method: CountMethod::Dp,
    })
}

// ---------------------------------------------------------------------------
// Fourier quadrature

#[derive(Clone, Copy, Default)]
struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

fn cmul((re, im): (f64, f64), (a, b): (f64, f64)) -> (f64, f64) {
    (re * a - im * b, re * b + im * a)
}

/// Factor tables for the grid sum, visited depth-first over coordinates.
struct Grid<'a> {
    grid: usize,
    phases: &'a [Vec<(f64, f64)>],
    tables: &'a [Vec<(f64, f64)>],
    closing: &'a [Vec<(usize, usize)>],
}

impl Grid<'_> {
    /// Multiplies in the factors that become determined once coordinate
    /// `m` is fixed.
    fn extend(&self, mut value: (f64, f64), m: usize, idx: &[usize]) -> (f64, f64) {
        value = cmul(value, self.phases[m][idx[m]]);
        for &(e, j) in &self.closing[m] {
            value = cmul(value, self.tables[e][(idx[j] + idx[m]) % self.grid]);
        }
        value
    }

    fn accumulate(&self, m: usize, value: (f64, f64), idx: &mut [usize], acc: &mut ComplexKahan) {
        if m == idx.len() {
            acc.re.add(value.0);
            acc.im.add(value.1);
            return;
        }
        for i in 0..self.grid {
            idx[m] = i;
            let next = self.extend(value, m, idx);
            self.accumulate(m + 1, next, idx, acc);
        }
    }
}

/// Count via the integral representation with the maximum entropy tilt.
///
/// The count equals `e^{H(z)} (2π)^{-n} ∫ F(t) dt` over `[-π, π]^n`. In
/// each coordinate `F` is a trigonometric polynomial with frequencies in
/// `[-d_j, n-1-d_j]`, so the trapezoid rule on `2n+1` points per axis is
/// exact up to rounding.
pub fn fourier_count_graphs(d: &DegreeSequence, sol: &MaxEntSolution) -> Result<ExactCount> {
    if sol.n() != d.n() {
        return Err(Error::InvalidInput(
            "solution does not match the sequence".into(),
        ));
    }
    fourier_count_graphs_tilted(d, &sol.lambda)
}

/// The same quadrature for an arbitrary tilt `zeta_jk = 1/(1+e^{l_j+l_k})`.
///
/// For any tilt the independent-edge measure is constant on `G(D)`, equal
/// to `prod_e (1 - zeta_e) * exp(-sum_k l_k d_k)`, which replaces
/// `e^{-H(z)}` in the normalization. A zero tilt (`zeta = 1/2`) works for
/// sequences whose degree polytope has no interior.
pub fn fourier_count_graphs_tilted(d: &DegreeSequence, lambda: &[f64]) -> Result<ExactCount> {
    let n = d.n();
    if n > MAX_FOURIER_N {
        return Err(Error::TooLarge(format!(
            "n = {n} exceeds {MAX_FOURIER_N} for Fourier quadrature"
        )));
    }
    if lambda.len() != n {
        return Err(Error::InvalidInput(
            "tilt length does not match the sequence".into(),
        ));
    }
    let grid = 2 * n + 1;
    let step = 2.0 * std::f64::consts::PI / grid as f64;
    let edges: Vec<(usize, usize)> = edge_list(n).collect();
    // factor of edge e at grid index sum s = i_j + i_k (mod grid)
    let tables: Vec<Vec<(f64, f64)>> = edges
        .iter()
        .map(|&(j, k)| {
            let z = logistic_zeta(lambda[j] + lambda[k]);
            (0..grid)
                .map(|s| {
                    let (sin, cos) = (step * s as f64).sin_cos();
                    (1.0 - z + z * cos, z * sin)
                })
                .collect()
        })
        .collect();
    // exp(-i d_m tau_m) at grid index i
    let phases: Vec<Vec<(f64, f64)>> = d
        .degrees()
        .iter()
        .map(|&dm| {
            (0..grid)
                .map(|i| {
                    let (sin, cos) = (step * ((dm as usize * i) % grid) as f64).sin_cos();
                    (cos, -sin)
                })
                .collect()
        })
        .collect();

    // edges (j, m) with j < m, grouped by their larger endpoint
    let mut closing: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(j, k)) in edges.iter().enumerate() {
        closing[k].push((e, j));
    }
    let ctx = Grid {
        grid,
        phases: &phases,
        tables: &tables,
        closing: &closing,
    };
    let points = grid.pow(n as u32);
    // the first two coordinates index parallel tasks
    let head = if n >= 2 { 2 } else { 1 };
    let tasks = grid.pow(head as u32);
    let partials = par_block_map(tasks, |range| {
        let mut acc = ComplexKahan::default();
        let mut idx = vec![0usize; n];
        for t in range {
            let mut rem = t;
            let mut value = (1.0, 0.0);
            for m in 0..head {
                idx[m] = rem % grid;
                rem /= grid;
                value = ctx.extend(value, m, &idx);
            }
            ctx.accumulate(head, value, &mut idx, &mut acc);
        }
        acc
    });
    let mut total = ComplexKahan::default();
    for part in partials {
        total.re.add(part.re.value());
        total.im.add(part.im.value());
    }
    let mean = total.re.value() / points as f64;

    // ln of 1 / P(x) for any x in G(D): sum_k l_k d_k - sum_e ln(1 - zeta_e)
    let mut log_norm = KahanSum::new();
    for (k, &dk) in d.degrees().iter().enumerate() {
        log_norm.add(lambda[k] * dk as f64);
    }
    for &(j, k) in &edges {
        log_norm.add(-(1.0 - logistic_zeta(lambda[j] + lambda[k])).ln());
    }
    let value = mean * log_norm.value().exp();
    let rounded = value.round();
    if !value.is_finite()
        || (value - rounded).abs() >= 1e-6 * rounded.abs().max(1.0)
        || rounded < 0.0
    {
        return Err(Error::NotAnInteger { value });
    }
    Ok(ExactCount {
        value: BigUint::from(rounded as u64),
        method: CountMethod::Fourier,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo moments

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mu_hat: f64,
    pub nu_hat: f64,
    pub se_mu: f64,
    pub se_nu: f64,
    pub samples: usize,
}

/// Running mean and centered second moment, merged in fixed order.
#[derive(Clone, Copy, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Welford {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn standard_error(&self) -> f64 {
        (self.m2 / (self.count - 1.0)).sqrt() / self.count.sqrt()
    }
}

/// One linear form `x[i] + x[k]` with its cubic and quartic coefficients.
struct Form {
    i: usize,
    k: usize,
    cubic: f64,
    quartic: f64,
}

fn run_mc<S>(
    dim_normals: usize,
    forms: &[Form],
    sample: S,
    samples: usize,
    seed: u64,
) -> MomentEstimate
where
    S: Fn(&DVector<f64>) -> DVector<f64> + Sync,
{
    let parts = par_block_map(samples, |range| {
        let mut f2 = Welford::default();
        let mut hw = Welford::default();
        let mut z = DVector::<f64>::zeros(dim_normals);
        for s in range {
            let mut r = rng::stream(seed, s as u64);
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut r);
            }
            let x = sample(&z);
            let (mut f, mut h) = (0.0, 0.0);
            for form in forms {
                let w = x[form.i] + x[form.k];
                let w2 = w * w;
                f += form.cubic * w2 * w;
                h += form.quartic * w2 * w2;
            }
            f2.push(f * f);
            hw.push(h);
        }
        (f2, hw)
    });
    let (f2, hw) = parts.into_iter().fold(
        (Welford::default(), Welford::default()),
        |(a, b), (c, d)| (a.merge(c), b.merge(d)),
    );
    MomentEstimate {
        mu_hat: f2.mean,
        nu_hat: hw.mean,
        se_mu: f2.standard_error(),
        se_nu: hw.standard_error(),
        samples,
    }
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "at least {MIN_MC_SAMPLES} Monte Carlo samples are required"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of `E f²` and `E h` for the graph model, sampling
/// `t = L⁻ᵀ z` with `Q = L Lᵀ` and `z` standard normal.
pub fn mc_moments(
    model: &GaussianModel,
    sol: &MaxEntSolution,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    check_samples(samples)?;
    let n = model.n();
    let forms: Vec<Form> = edge_list(n)
        .map(|(j, k)| {
            let z = sol.zeta(j, k);
            Form {
                i: j,
                k,
                cubic: cubic_coefficient(z),
                quartic: quartic_coefficient(z),
            }
        })
        .collect();
    let factor = &model.chol;
    Ok(run_mc(
        n,
        &forms,
        |z| {
            let mut t = z.clone();
            factor.tr_solve_lower_triangular_mut(&mut t);
            t
        },
        samples,
        seed,
    ))
}

/// Monte Carlo estimate for the bipartite model. Samples are drawn on the
/// coordinate hyperplane `tau_n = 0` rather than on `u⊥`; the moments of
/// forms `sigma_j + tau_k` agree on both.
pub fn mc_moments_bipartite(
    model: &BipartiteGaussianModel,
    sol: &BipartiteMaxEntSolution,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    check_samples(samples)?;
    let (m, n) = (model.m, model.n);
    let dim = m + n;
    let drop = dim - 1;
    let cov = coordinate_hyperplane_covariance(model, drop)?;
    let sub = cov.view((0, 0), (drop, drop)).into_owned();
    let chol = linalg::cholesky_log_det(&sub)?;
    let factor = chol.factor;
    let forms: Vec<Form> = (0..m)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .map(|(j, k)| {
            let z = sol.zeta(j, k);
            Form {
                i: j,
                k: m + k,
                cubic: cubic_coefficient(z),
                quartic: quartic_coefficient(z),
            }
        })
        .collect();
    Ok(run_mc(
        drop,
        &forms,
        |z| {
            let y = &factor * z;
            let mut x = DVector::<f64>::zeros(dim);
            x.rows_mut(0, drop).copy_from(&y);
            x
        },
        samples,
        seed,
    ))
}

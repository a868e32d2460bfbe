//! Uniform random graphs with a prescribed degree sequence.
//!
//! [`sample_uniform`] draws every edge independently with probability
//! `zeta_jk` and keeps the first proposal that realizes the sequence. Every
//! graph in `G(D)` has the same proposal probability, so accepted graphs
//! are exactly uniform. The acceptance probability `e^{-H(z)} |G(D)|`
//! decays quickly with `n`; [`sample_uniform_counting`] is an exact
//! alternative driven by the memoized residual-degree count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::degrees::{check_parity, DegreeSequence};
use crate::edgeworth::{assemble_report, build_gaussian};
use crate::error::{Error, Result};
use crate::maxent::MaxEntSolution;
use crate::oracle::{classes, for_each_composition, reduce_classes, GraphCounter};
use crate::rng;

pub const DEFAULT_MAX_TRIALS: u64 = 10_000_000;
pub const MAX_COUNTING_N: usize = 30;
const TRIALS_PER_TASK: u64 = 256;
const TASKS_PER_ROUND: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSample {
    pub n: usize,
    /// Sorted pairs `(j, k)` with `j < k`.
    pub edges: Vec<(usize, usize)>,
}

impl GraphSample {
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n];
        for &(j, k) in &self.edges {
            deg[j] += 1;
            deg[k] += 1;
        }
        deg
    }

    /// Edge list as space-separated `j-k` tokens.
    pub fn to_line(&self) -> String {
        self.edges
            .iter()
            .map(|(j, k)| format!("{j}-{k}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeStatistic {
    pub subset_size: usize,
    pub sigma_g: u64,
    pub sigma_z: f64,
    pub relative_deviation: f64,
}

/// Proposal with every `zeta_jk = 1/2`. Any tilt gives a uniform sampler;
/// this one exists even when the degree polytope has no interior.
pub fn zero_tilt(d: &DegreeSequence) -> MaxEntSolution {
    let n = d.n();
    let half = (n as f64 - 1.0) / 2.0;
    let pairs = (n * (n - 1) / 2) as f64;
    MaxEntSolution {
        lambda: vec![0.0; n],
        entropy: pairs * std::f64::consts::LN_2,
        zeta_min: 0.5,
        zeta_max: 0.5,
        residual_inf: d
            .degrees()
            .iter()
            .map(|&x| (x as f64 - half).abs())
            .fold(0.0, f64::max),
        iterations: 0,
        dual_value: pairs * std::f64::consts::LN_2,
    }
}

/// Edge probabilities in lexicographic pair order.
fn proposal_table(sol: &MaxEntSolution) -> Vec<f64> {
    sol.edges().map(|(j, k)| sol.zeta(j, k)).collect()
}

/// Runs trial `index`. Edges are drawn in lexicographic order; the trial
/// stops as soon as a vertex exceeds its degree or a finished vertex falls
/// short of it.
fn trial(target: &[u32], zeta: &[f64], seed: u64, index: u64) -> Option<GraphSample> {
    let n = target.len();
    let mut r = rng::stream(seed, index);
    let mut deg = vec![0u32; n];
    let mut edges = Vec::new();
    let mut e = 0;
    for j in 0..n {
        for k in j + 1..n {
            if r.gen::<f64>() < zeta[e] {
                deg[j] += 1;
                deg[k] += 1;
                if deg[j] > target[j] || deg[k] > target[k] {
                    return None;
                }
                edges.push((j, k));
            }
            e += 1;
        }
        if deg[j] != target[j] {
            return None;
        }
    }
    Some(GraphSample { n, edges })
}

fn check_inputs(d: &DegreeSequence, sol: &MaxEntSolution) -> Result<()> {
    if !check_parity(d) {
        return Err(Error::OddParity);
    }
    if sol.n() != d.n() {
        return Err(Error::InvalidInput(
            "solution does not match the sequence".into(),
        ));
    }
    Ok(())
}

/// First accepted trial with index in `start..end`, scanning in parallel
/// over disjoint index ranges.
fn first_accepted(
    target: &[u32],
    zeta: &[f64],
    seed: u64,
    start: u64,
    end: u64,
) -> Option<(u64, GraphSample)> {
    use rayon::prelude::*;
    let mut lo = start;
    while lo < end {
        let hi = end.min(lo + TRIALS_PER_TASK * TASKS_PER_ROUND);
        let tasks = (hi - lo).div_ceil(TRIALS_PER_TASK);
        let found = (0..tasks).into_par_iter().find_map_first(|t| {
            let a = lo + t * TRIALS_PER_TASK;
            let b = hi.min(a + TRIALS_PER_TASK);
            (a..b).find_map(|i| trial(target, zeta, seed, i).map(|g| (i, g)))
        });
        if found.is_some() {
            return found;
        }
        lo = hi;
    }
    None
}

fn estimated_acceptance(d: &DegreeSequence, sol: &MaxEntSolution) -> f64 {
    build_gaussian(sol, d)
        .map(|model| assemble_report(sol, &model).acceptance_probability())
        .unwrap_or(f64::NAN)
}

/// One uniform sample from `G(D)` by rejection. Returns the sample and the
/// number of trials used. The result depends only on `seed`.
pub fn sample_uniform(
    d: &DegreeSequence,
    sol: &MaxEntSolution,
    seed: u64,
    max_trials: u64,
) -> Result<(GraphSample, u64)> {
    let mut out = sample_uniform_many(d, sol, seed, 1, max_trials)?;
    Ok(out.pop().unwrap())
}

/// `k` uniform samples from consecutive accepted trials of one trial stream.
/// Each sample may use at most `max_trials` trials.
pub fn sample_uniform_many(
    d: &DegreeSequence,
    sol: &MaxEntSolution,
    seed: u64,
    k: usize,
    max_trials: u64,
) -> Result<Vec<(GraphSample, u64)>> {
    check_inputs(d, sol)?;
    let zeta = proposal_table(sol);
    let mut next = 0u64;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        match first_accepted(
            d.degrees(),
            &zeta,
            seed,
            next,
            next.saturating_add(max_trials),
        ) {
            Some((index, g)) => {
                out.push((g, index - next + 1));
                next = index + 1;
            }
            None => {
                return Err(Error::TrialsExhausted {
                    trials: max_trials,
                    acceptance: estimated_acceptance(d, sol),
                })
            }
        }
    }
    Ok(out)
}

/// Number of accepted proposals among trials `0..trials`.
pub fn count_accepted(
    d: &DegreeSequence,
    sol: &MaxEntSolution,
    seed: u64,
    trials: u64,
) -> Result<u64> {
    check_inputs(d, sol)?;
    let zeta = proposal_table(sol);
    let target = d.degrees();
    let tasks = trials.div_ceil(TRIALS_PER_TASK);
    let parts = crate::summation::par_block_map(tasks as usize, |range| {
        let mut hits = 0u64;
        for t in range {
            let a = t as u64 * TRIALS_PER_TASK;
            let b = trials.min(a + TRIALS_PER_TASK);
            hits += (a..b)
                .filter(|&i| trial(target, &zeta, seed, i).is_some())
                .count() as u64;
        }
        hits
    });
    Ok(parts.into_iter().sum())
}

/// Exact uniform sampler from the memoized count of residual sequences.
pub struct CountingSampler {
    target: Vec<u32>,
    counter: GraphCounter<f64>,
}

impl CountingSampler {
    pub fn new(d: &DegreeSequence) -> Result<Self> {
        if d.n() > MAX_COUNTING_N {
            return Err(Error::TooLarge(format!(
                "n = {} exceeds {MAX_COUNTING_N} for the counting sampler",
                d.n()
            )));
        }
        let mut sampler = CountingSampler {
            target: d.degrees().to_vec(),
            counter: GraphCounter::new(d.n(), true),
        };
        let mut state: Vec<u8> = sampler.target.iter().map(|&x| x as u8).collect();
        state.sort_unstable_by(|a, b| b.cmp(a));
        if sampler.counter.count(&state) == 0.0 {
            return Err(Error::Infeasible(None));
        }
        Ok(sampler)
    }

    /// Sample number `index` under `seed`.
    ///
    /// The vertex of largest residual degree (lowest label on ties) is
    /// joined to a partner set chosen with probability proportional to the
    /// number of completions, which makes every graph equally likely.
    pub fn sample(&mut self, seed: u64, index: u64) -> GraphSample {
        let n = self.target.len();
        let mut r = rng::stream(seed, index);
        let mut residual: Vec<u32> = self.target.clone();
        let mut active: Vec<bool> = vec![true; n];
        let mut edges = Vec::new();
        while let Some(v) = (0..n)
            .filter(|&i| active[i])
            .max_by(|&a, &b| residual[a].cmp(&residual[b]).then(b.cmp(&a)))
        {
            active[v] = false;
            let need = residual[v] as usize;
            if need == 0 {
                continue;
            }
            // remaining vertices grouped by residual degree, descending
            let mut others: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
            others.sort_by(|&a, &b| residual[b].cmp(&residual[a]).then(a.cmp(&b)));
            let sorted: Vec<u8> = others.iter().map(|&i| residual[i] as u8).collect();
            let cls = classes(&sorted);
            let caps: Vec<usize> = cls
                .iter()
                .map(|&(val, c)| if val == 0 { 0 } else { c })
                .collect();
            let mut options = Vec::new();
            for_each_composition(&caps, need, &mut |c| options.push(c.to_vec()));
            let weights: Vec<f64> = options
                .iter()
                .map(|choice| {
                    let mut w = 1.0;
                    for (&(_, size), &k) in cls.iter().zip(choice) {
                        w *= self.counter.binomial(size, k);
                    }
                    w * self.counter.count(&reduce_classes(&cls, choice))
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = r.gen::<f64>() * total;
            let mut pick = weights.len() - 1;
            for (i, &w) in weights.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            let mut offset = 0;
            for (&(_, size), &k) in cls.iter().zip(&options[pick]) {
                let members = &others[offset..offset + size];
                for idx in rand::seq::index::sample(&mut r, size, k) {
                    let w = members[idx];
                    residual[w] -= 1;
                    edges.push((v.min(w), v.max(w)));
                }
                offset += size;
            }
            residual[v] = 0;
        }
        edges.sort_unstable();
        GraphSample { n, edges }
    }
}

/// One exact uniform sample via [`CountingSampler`].
pub fn sample_uniform_counting(d: &DegreeSequence, seed: u64) -> Result<GraphSample> {
    Ok(CountingSampler::new(d)?.sample(seed, 0))
}

/// `sigma_S(G) = |E(G) ∩ S|` against `sigma_S(z) = sum over S of zeta`.
/// Pairs in `s` may be given in either orientation; repeats count once.
pub fn edge_statistic(
    g: &GraphSample,
    sol: &MaxEntSolution,
    s: &[(usize, usize)],
) -> Result<EdgeStatistic> {
    let n = g.n;
    if sol.n() != n {
        return Err(Error::InvalidInput(
            "solution does not match the graph".into(),
        ));
    }
    let mut pairs = Vec::with_capacity(s.len());
    for &(a, b) in s {
        for index in [a, b] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        if a == b {
            return Err(Error::InvalidInput(format!("pair ({a}, {a}) is a loop")));
        }
        pairs.push((a.min(b), a.max(b)));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let sigma_g = pairs
        .iter()
        .filter(|p| g.edges.binary_search(p).is_ok())
        .count() as u64;
    let sigma_z = crate::summation::kahan_sum(pairs.iter().map(|&(j, k)| sol.zeta(j, k)));
    Ok(EdgeStatistic {
        subset_size: pairs.len(),
        sigma_g,
        sigma_z,
        relative_deviation: (sigma_g as f64 - sigma_z).abs() / sigma_z.max(1.0),
    })
}

/// Pairs inside the vertex set `0..size`.
pub fn pairs_within(size: usize) -> Vec<(usize, usize)> {
    crate::maxent::edge_list(size).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::solve_maxent_default;

    fn setup(v: &[u32]) -> (DegreeSequence, MaxEntSolution) {
        let d = DegreeSequence::new(v.to_vec()).unwrap();
        let sol = solve_maxent_default(&d).unwrap();
        (d, sol)
    }

    #[test]
    fn matchings_on_four_vertices_are_equally_likely() {
        let (d, sol) = setup(&[1, 1, 1, 1]);
        let runs = 30_000;
        let samples = sample_uniform_many(&d, &sol, 17, runs, DEFAULT_MAX_TRIALS).unwrap();
        let mut counts = std::collections::BTreeMap::new();
        for (g, _) in &samples {
            *counts.entry(g.edges.clone()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 3);
        let sd = (runs as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in counts.values() {
            assert!(
                (c as f64 - runs as f64 / 3.0).abs() < 3.0 * sd,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn complete_graph_is_forced() {
        let d = DegreeSequence::new(vec![3, 3, 3, 3]).unwrap();
        let sol = zero_tilt(&d);
        assert_eq!(sol.residual_inf, 1.5);
        let (g, trials) = sample_uniform(&d, &sol, 1, DEFAULT_MAX_TRIALS).unwrap();
        assert_eq!(g.edges.len(), 6);
        assert!(trials >= 1);
    }

    #[test]
    fn accepted_samples_realize_the_sequence() {
        let d = DegreeSequence::regular(9, 4).unwrap();
        let sol = solve_maxent_default(&d).unwrap();
        for (g, _) in sample_uniform_many(&d, &sol, 3, 5, DEFAULT_MAX_TRIALS).unwrap() {
            assert_eq!(g.degrees(), vec![4; 9]);
            assert!(g.edges.windows(2).all(|w| w[0] < w[1]));
            assert!(g.edges.iter().all(|&(j, k)| j < k));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let (d, sol) = setup(&[2, 2, 2, 1, 1]);
        let a = sample_uniform_many(&d, &sol, 99, 20, 1000).unwrap();
        let b = sample_uniform_many(&d, &sol, 99, 20, 1000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustion_reports_acceptance_estimate() {
        let d = DegreeSequence::regular(20, 10).unwrap();
        let sol = solve_maxent_default(&d).unwrap();
        match sample_uniform(&d, &sol, 0, 1000) {
            Err(Error::TrialsExhausted { trials, acceptance }) => {
                assert_eq!(trials, 1000);
                assert!(acceptance > 0.0 && acceptance < 1e-10, "{acceptance}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn odd_parity_is_rejected() {
        let d = DegreeSequence::new(vec![1, 1, 1]).unwrap();
        let sol = zero_tilt(&d);
        assert_eq!(sample_uniform(&d, &sol, 0, 10), Err(Error::OddParity));
    }

    #[test]
    fn counting_sampler_is_uniform_on_small_case() {
        // labeled 5-cycles: 12 graphs
        let d = DegreeSequence::regular(5, 2).unwrap();
        let mut sampler = CountingSampler::new(&d).unwrap();
        let runs = 12_000u64;
        let mut counts = std::collections::BTreeMap::new();
        for i in 0..runs {
            let g = sampler.sample(5, i);
            assert_eq!(g.degrees(), vec![2; 5]);
            *counts.entry(g.edges).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 12);
        let expect = runs as f64 / 12.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // 11 degrees of freedom, 0.999 quantile is 31.26
        assert!(chi2 < 31.26, "{chi2}");
    }

    #[test]
    fn counting_sampler_handles_irregular_sequences() {
        let d = DegreeSequence::new(vec![5, 4, 4, 3, 3, 2, 2, 1]).unwrap();
        let mut sampler = CountingSampler::new(&d).unwrap();
        for i in 0..50 {
            assert_eq!(sampler.sample(1, i).degrees(), d.degrees());
        }
    }

    #[test]
    fn edge_statistic_identities() {
        let (d, sol) = setup(&[3, 2, 2, 2, 1]);
        let (g, _) = sample_uniform(&d, &sol, 4, DEFAULT_MAX_TRIALS).unwrap();
        let all = pairs_within(5);
        let st = edge_statistic(&g, &sol, &all).unwrap();
        assert_eq!(st.sigma_g, 5);
        assert!((st.sigma_z - 5.0).abs() < 5.0 * sol.residual_inf + 1e-12);
        let empty = edge_statistic(&g, &sol, &[]).unwrap();
        assert_eq!((empty.sigma_g, empty.sigma_z), (0, 0.0));
        assert!(matches!(
            edge_statistic(&g, &sol, &[(0, 5)]),
            Err(Error::IndexOutOfRange { index: 5, len: 5 })
        ));
    }

    #[test]
    fn edge_statistic_mean_on_regular_graphs() {
        let d = DegreeSequence::regular(9, 4).unwrap();
        let sol = solve_maxent_default(&d).unwrap();
        let s = pairs_within(5);
        let mut sampler = CountingSampler::new(&d).unwrap();
        let values: Vec<f64> = (0..1000)
            .map(|i| {
                edge_statistic(&sampler.sample(8, i), &sol, &s)
                    .unwrap()
                    .sigma_g as f64
            })
            .collect();
        let sigma_z = edge_statistic(&sampler.sample(8, 0), &sol, &s)
            .unwrap()
            .sigma_z;
        assert!((sigma_z - 5.0).abs() < 1e-9);
        let mean = values.iter().sum::<f64>() / 1000.0;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((mean - 5.0).abs() < 3.0 * (var / 1000.0).sqrt(), "{mean}");
    }
}

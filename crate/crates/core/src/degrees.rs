//! Degree sequences, bipartite margins and their combinatorial feasibility
//! tests (Erdős–Gallai and Gale–Ryser).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degrees `d_1, ..., d_n` of a labeled simple graph, kept in input order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
}

impl DegreeSequence {
    /// Every degree must satisfy `1 <= d <= n - 1`.
    pub fn new(degrees: Vec<u32>) -> Result<Self> {
        let n = degrees.len();
        if n == 0 {
            return Err(Error::InvalidInput("degree sequence is empty".into()));
        }
        for (i, &d) in degrees.iter().enumerate() {
            if d == 0 {
                return Err(Error::InvalidInput(format!(
                    "degree at position {} is zero; strip isolated vertices first",
                    i + 1
                )));
            }
            if d as usize > n - 1 {
                return Err(Error::InvalidInput(format!(
                    "degree {} at position {} exceeds n - 1 = {}",
                    d,
                    i + 1,
                    n - 1
                )));
            }
        }
        Ok(Self { degrees })
    }

    pub fn regular(n: usize, d: u32) -> Result<Self> {
        Self::new(vec![d; n])
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn sum(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> u32 {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    /// Copy sorted in non-increasing order; ties keep their input order.
    pub fn sorted_desc(&self) -> Vec<u32> {
        let mut v = self.degrees.clone();
        // `sort_by` is stable
        v.sort_by(|a, b| b.cmp(a));
        v
    }
}

/// Row sums `r_1..r_m` and column sums `c_1..c_n` of a 0-1 matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteMargins {
    rows: Vec<u32>,
    cols: Vec<u32>,
}

impl BipartiteMargins {
    /// Requires `r_j <= n` and `c_k <= m`. Balance is left to [`gale_ryser`].
    pub fn new(rows: Vec<u32>, cols: Vec<u32>) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::InvalidInput("margins must be non-empty".into()));
        }
        let (m, n) = (rows.len(), cols.len());
        if let Some((j, &r)) = rows.iter().enumerate().find(|(_, &r)| r as usize > n) {
            return Err(Error::InvalidInput(format!(
                "row sum {r} at row {} exceeds the number of columns {n}",
                j + 1
            )));
        }
        if let Some((k, &c)) = cols.iter().enumerate().find(|(_, &c)| c as usize > m) {
            return Err(Error::InvalidInput(format!(
                "column sum {c} at column {} exceeds the number of rows {m}",
                k + 1
            )));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    pub fn transpose(&self) -> Self {
        Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }
}

/// Outcome of a feasibility test.
///
/// For graphs `parity_ok` is the parity of the degree sum; for bipartite
/// margins it records the balance `sum(R) == sum(C)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub parity_ok: bool,
    pub feasible: bool,
    pub strictly_feasible: bool,
    /// Smallest (1-based) `k` whose inequality fails in the requested mode.
    pub first_violated_k: Option<usize>,
}

pub fn check_parity(d: &DegreeSequence) -> bool {
    d.sum().is_multiple_of(2)
}

/// Per-`k` slack `k(k-1) + sum_{i>k} min(k, d_i) - sum_{i<=k} d_i` of the
/// Erdős–Gallai inequalities, for a sequence sorted non-increasingly.
fn erdos_gallai_slacks(sorted: &[u32]) -> Vec<i64> {
    let n = sorted.len();
    let mut slacks = Vec::with_capacity(n);
    let mut prefix = 0i64;
    for k in 1..=n {
        prefix += sorted[k - 1] as i64;
        let kk = k as i64;
        let tail: i64 = sorted[k..].iter().map(|&d| (d as i64).min(kk)).sum();
        slacks.push(kk * (kk - 1) + tail - prefix);
    }
    slacks
}

/// Erdős–Gallai test.
///
/// With `strict = false`, `feasible` is the exact graphicality predicate
/// (parity plus all inequalities) and `strictly_feasible` additionally
/// requires every inequality to be strict.
///
/// With `strict = true` the test concerns the interior of the degree
/// polytope, which is a real relaxation: parity is ignored and both
/// `feasible` and `strictly_feasible` report whether all strict
/// inequalities hold. `parity_ok` is still reported.
pub fn erdos_gallai(d: &DegreeSequence, strict: bool) -> FeasibilityReport {
    let parity_ok = check_parity(d);
    let slacks = erdos_gallai_slacks(&d.sorted_desc());
    let weak_fail = slacks.iter().position(|&s| s < 0).map(|i| i + 1);
    let strict_fail = slacks.iter().position(|&s| s <= 0).map(|i| i + 1);
    if strict {
        let ok = strict_fail.is_none();
        FeasibilityReport {
            parity_ok,
            feasible: ok,
            strictly_feasible: ok,
            first_violated_k: strict_fail,
        }
    } else {
        let feasible = parity_ok && weak_fail.is_none();
        FeasibilityReport {
            parity_ok,
            feasible,
            strictly_feasible: feasible && strict_fail.is_none(),
            first_violated_k: weak_fail,
        }
    }
}

/// Non-strict Erdős–Gallai test on arbitrary non-negative integers, for
/// screening raw input that [`DegreeSequence::new`] rejects.
pub fn erdos_gallai_raw(degrees: &[u32]) -> FeasibilityReport {
    let parity_ok = degrees.iter().map(|&d| d as u64).sum::<u64>() % 2 == 0;
    let mut sorted = degrees.to_vec();
    sorted.sort_by(|a, b| b.cmp(a));
    let slacks = erdos_gallai_slacks(&sorted);
    let weak_fail = slacks.iter().position(|&s| s < 0).map(|i| i + 1);
    let feasible = parity_ok && weak_fail.is_none();
    FeasibilityReport {
        parity_ok,
        feasible,
        strictly_feasible: feasible && slacks.iter().all(|&s| s > 0),
        first_violated_k: weak_fail,
    }
}

/// Whether the degree polytope is non-empty (inequalities only, no parity).
pub fn polytope_nonempty(d: &DegreeSequence) -> bool {
    erdos_gallai_slacks(&d.sorted_desc())
        .iter()
        .all(|&s| s >= 0)
}

/// Gale–Ryser test for 0-1 matrices with margins `(R, C)`.
///
/// `feasible` is the exact existence predicate. `strictly_feasible`
/// holds when the transportation polytope with `0 <= x <= 1` has an
/// interior point: balance, strict inequalities for `k = 1..m-1`, and
/// `0 < r_j < n`, `0 < c_k < m`.
pub fn gale_ryser(margins: &BipartiteMargins) -> FeasibilityReport {
    let (m, n) = (margins.m(), margins.n());
    let rsum: u64 = margins.rows().iter().map(|&r| r as u64).sum();
    let csum: u64 = margins.cols().iter().map(|&c| c as u64).sum();
    let balanced = rsum == csum;

    let mut rows = margins.rows().to_vec();
    rows.sort_by(|a, b| b.cmp(a));
    let mut prefix = 0i64;
    let mut weak_fail = None;
    let mut strict_fail = None;
    for k in 1..=m {
        prefix += rows[k - 1] as i64;
        let cap: i64 = margins
            .cols()
            .iter()
            .map(|&c| (c as i64).min(k as i64))
            .sum();
        if weak_fail.is_none() && prefix > cap {
            weak_fail = Some(k);
        }
        if strict_fail.is_none() && k < m && prefix >= cap {
            strict_fail = Some(k);
        }
    }
    let feasible = balanced && weak_fail.is_none();
    let entries_interior = margins.rows().iter().all(|&r| r > 0 && (r as usize) < n)
        && margins.cols().iter().all(|&c| c > 0 && (c as usize) < m);
    FeasibilityReport {
        parity_ok: balanced,
        feasible,
        strictly_feasible: feasible && strict_fail.is_none() && entries_interior,
        first_violated_k: weak_fail,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(v: &[u32]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn parity_examples() {
        assert!(check_parity(&ds(&[3, 3, 3, 3])));
        assert!(!check_parity(&ds(&[2, 1, 1, 1])));
        assert!(check_parity(&ds(&[1, 1])));
    }

    #[test]
    fn rejects_invalid_sequences() {
        assert!(DegreeSequence::new(vec![]).is_err());
        assert!(DegreeSequence::new(vec![0, 1, 1]).is_err());
        assert!(DegreeSequence::new(vec![3, 1, 1]).is_err());
        assert!(BipartiteMargins::new(vec![4], vec![1, 1, 1]).is_err());
        assert!(BipartiteMargins::new(vec![1, 1], vec![3]).is_err());
    }

    #[test]
    fn complete_graph_is_feasible_but_not_interior() {
        let r = erdos_gallai(&ds(&[3, 3, 3, 3]), false);
        assert!(r.parity_ok && r.feasible);
        assert!(!r.strictly_feasible);
        assert_eq!(r.first_violated_k, None);
    }

    #[test]
    fn three_one_one_violates_at_one() {
        // (3,1,1) cannot be built as a DegreeSequence (3 > n-1), so check the
        // inequality directly on the sorted sequence.
        let slacks = erdos_gallai_slacks(&[3, 1, 1]);
        assert_eq!(slacks[0], -1);
        let raw = erdos_gallai_raw(&[1, 3, 1]);
        assert!(!raw.feasible);
        assert_eq!(raw.first_violated_k, Some(1));
        assert!(erdos_gallai_raw(&[0, 1, 1]).feasible);
        let r = erdos_gallai(&ds(&[2, 1, 1, 1, 1, 1]), false);
        assert!(!r.parity_ok);
        assert!(!r.feasible);
    }

    #[test]
    fn first_violation_reported() {
        // sorted (4,4,1,1,1,1): k=1 slack 0+5-4=1, k=2: 2+4-8=-2
        let r = erdos_gallai(&ds(&[1, 4, 1, 4, 1, 1]), false);
        assert!(r.parity_ok);
        assert!(!r.feasible);
        assert_eq!(r.first_violated_k, Some(2));
    }

    #[test]
    fn single_edge_has_no_interior() {
        let r = erdos_gallai(&ds(&[1, 1]), true);
        assert!(!r.strictly_feasible);
        assert_eq!(r.first_violated_k, Some(1));
        assert!(erdos_gallai(&ds(&[1, 1]), false).feasible);
    }

    #[test]
    fn four_regular_nine_is_strictly_feasible() {
        let d = DegreeSequence::regular(9, 4).unwrap();
        // slacks by hand: k(k-1) + (9-k)min(k,4) - 4k
        let expected: Vec<i64> = (1..=9i64)
            .map(|k| k * (k - 1) + (9 - k) * k.min(4) - 4 * k)
            .collect();
        assert_eq!(erdos_gallai_slacks(&d.sorted_desc()), expected);
        assert!(expected.iter().all(|&s| s > 0));
        assert!(erdos_gallai(&d, true).strictly_feasible);
    }

    #[test]
    fn odd_sequence_in_strict_mode_ignores_parity() {
        let d = ds(&[3, 2, 2, 2, 2]);
        let r = erdos_gallai(&d, true);
        assert!(!r.parity_ok);
        assert!(r.strictly_feasible);
        assert!(!erdos_gallai(&d, false).feasible);
    }

    #[test]
    fn gale_ryser_examples() {
        let ok = BipartiteMargins::new(vec![1, 1, 1], vec![1, 1, 1]).unwrap();
        let r = gale_ryser(&ok);
        assert!(r.feasible && r.strictly_feasible);

        let unbalanced = BipartiteMargins::new(vec![3, 3], vec![1, 1, 1]).unwrap();
        let r = gale_ryser(&unbalanced);
        assert!(!r.parity_ok && !r.feasible);

        // Two full columns and an empty one: realized by [[1,1,0]; 3], so
        // feasible, but the zero column rules out an interior point.
        let zero_col = BipartiteMargins::new(vec![2, 2, 2], vec![3, 3, 0]).unwrap();
        let r = gale_ryser(&zero_col);
        assert!(r.feasible);
        assert!(!r.strictly_feasible);

        let bad = BipartiteMargins::new(vec![2, 2, 0], vec![3, 1]).unwrap();
        let r = gale_ryser(&bad);
        assert!(!r.feasible);
        assert_eq!(r.first_violated_k, Some(2));
    }

    #[test]
    fn regular_sequences_are_graphical() {
        for n in 2..=8usize {
            for d in 1..n as u32 {
                if (n as u32 * d).is_multiple_of(2) {
                    let r = erdos_gallai(&DegreeSequence::regular(n, d).unwrap(), false);
                    assert!(r.feasible, "n={n} d={d}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn erdos_gallai_is_permutation_invariant(
            v in (2usize..12).prop_flat_map(|n| proptest::collection::vec(1u32..n as u32, n)),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let d = DegreeSequence::new(v.clone()).unwrap();
            let mut w = v;
            w.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let p = DegreeSequence::new(w).unwrap();
            prop_assert_eq!(erdos_gallai(&d, false), erdos_gallai(&p, false));
            prop_assert_eq!(erdos_gallai(&d, true), erdos_gallai(&p, true));
        }

        #[test]
        fn strict_implies_feasible_for_even_sums(
            v in (2usize..12).prop_flat_map(|n| proptest::collection::vec(1u32..n as u32, n)),
        ) {
            let d = DegreeSequence::new(v).unwrap();
            let weak = erdos_gallai(&d, false);
            prop_assert!(!weak.strictly_feasible || weak.feasible);
            prop_assert!(!weak.feasible || weak.parity_ok);
            if check_parity(&d) && erdos_gallai(&d, true).strictly_feasible {
                prop_assert!(weak.feasible && weak.strictly_feasible);
            }
        }
    }
}

//! Compensated summation and a fixed-order parallel reduction.
//!
//! Parallel sums split the index range into contiguous blocks whose
//! boundaries depend only on the range length, sum each block with Kahan
//! compensation, then combine the block partials sequentially in block
//! order. The result is therefore bit-identical for any thread count.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// Block length used by [`par_block_sum`].
pub const BLOCK: usize = 64;

/// Deterministic parallel sum of `term(i)` for `i in 0..len`.
pub fn par_block_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    par_block_map(len, |range| kahan_sum(range.map(&term)))
        .into_iter()
        .collect::<KahanSum>()
        .value()
}

/// Evaluates `block` on consecutive index ranges of length [`BLOCK`]
/// (the last may be shorter) in parallel and returns results in block order.
pub fn par_block_map<T, F>(len: usize, block: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let blocks = len.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| block(b * BLOCK..((b + 1) * BLOCK).min(len)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut terms = vec![1.0];
        terms.extend(std::iter::repeat_n(1e-16, 10_000));
        let naive: f64 = terms.iter().sum();
        let compensated = kahan_sum(terms.iter().copied());
        assert_eq!(naive, 1.0);
        assert!((compensated - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn block_sum_is_thread_count_independent() {
        let term = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let sums: Vec<f64> = [1, 2, 7]
            .iter()
            .map(|&threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| par_block_sum(10_007, term))
            })
            .collect();
        assert_eq!(sums[0].to_bits(), sums[1].to_bits());
        assert_eq!(sums[0].to_bits(), sums[2].to_bits());
        let serial = kahan_sum((0..10_007).map(term));
        assert!((serial - sums[0]).abs() < 1e-14);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(par_block_sum(0, |_| 1.0), 0.0);
    }
}

//! Deterministic reductions.
//!
//! Work is cut into fixed-size blocks independent of the thread count; each
//! block is summed sequentially with compensation and block totals are
//! combined by a fixed pairwise tree. Results are bit-identical for any
//! rayon pool size.

use rayon::prelude::*;

/// Items per reduction block.
pub const BLOCK: usize = 4096;

pub fn block_count(len: usize) -> usize {
    len.div_ceil(BLOCK)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn pairwise_arrays<const K: usize>(values: &[[f64; K]]) -> [f64; K] {
    match values.len() {
        0 => [0.0; K],
        1 => values[0],
        len => {
            let (lo, hi) = values.split_at(len / 2);
            let (a, b) = (pairwise_arrays(lo), pairwise_arrays(hi));
            std::array::from_fn(|i| a[i] + b[i])
        }
    }
}

/// Sums `block(b)` over `b in 0..blocks` in a fixed pairwise order.
pub fn block_reduce<const K: usize, F>(blocks: usize, block: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync + Send,
{
    let partial: Vec<[f64; K]> = (0..blocks).into_par_iter().map(block).collect();
    pairwise_arrays(&partial)
}

/// Compensated, blocked sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    block_reduce::<1, _>(block_count(values.len()), |b| {
        let mut acc = Compensated::default();
        for &v in &values[b * BLOCK..((b + 1) * BLOCK).min(values.len())] {
            acc.add(v);
        }
        [acc.value()]
    })[0]
}

/// `log Σ exp(v)` with max subtraction. Empty or all `-∞` input gives `-∞`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let total = block_reduce::<1, _>(block_count(values.len()), |b| {
        let mut acc = Compensated::default();
        for &v in &values[b * BLOCK..((b + 1) * BLOCK).min(values.len())] {
            acc.add((v - max).exp());
        }
        [acc.value()]
    })[0];
    max + total.ln()
}

/// `exp(v - LSE(v))`, computed blockwise.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(values);
    values.par_iter().map(|v| (v - lse).exp()).collect()
}

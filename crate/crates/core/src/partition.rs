//! Oblivious geometric partitions of an index range and flattening.
//!
//! Interval `j` (counting from the heavy end) has size
//! `max(1, floor((1+ε)^j + 1/4))` for `j = 1, 2, …`, the last one truncated to
//! fit. Plain floor overshoots the interval-count bound for small `n`, while
//! rounding to nearest widens the first size-2 interval too early and a
//! step-shaped sequence then flattens to more than `ε` away; the quarter offset
//! keeps both properties. For a non-increasing
//! sequence the heavy end is on the left, so sizes grow left to right; for a
//! non-decreasing one the same sizes are laid out right to left.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::universe::{compensated_sum, Interval, Universe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// Weights non-increasing: small intervals on the left.
    Decreasing,
    /// Weights non-decreasing: small intervals on the right.
    Increasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPartition {
    intervals: Vec<Interval>,
    direction: Direction,
    epsilon: f64,
}

impl IntervalPartition {
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of intervals, `ℓ`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    /// The covered range.
    pub fn domain(&self) -> Interval {
        let lo = self.intervals[0].lo();
        let hi = self.intervals[self.intervals.len() - 1].hi();
        Interval::span(lo, hi).expect("partition is non-empty and ordered")
    }

    /// 1-based ordinal of the interval containing `i`.
    pub fn interval_of(&self, i: usize) -> Result<usize> {
        let d = self.domain();
        if !d.contains(i) {
            return Err(Error::IndexOutOfRange { index: i, n: d.hi() });
        }
        Ok(self.intervals.partition_point(|iv| iv.hi() < i) + 1)
    }
}

const SIZE_OFFSET: f64 = 0.25;

/// Nominal size of interval `j` (1-based, from the heavy end).
fn nominal_size(epsilon: f64, j: usize) -> usize {
    let v = (1.0 + epsilon).powi(j as i32);
    (v + SIZE_OFFSET).floor().max(1.0) as usize
}

/// Upper bound on the interval count for a range of `n` elements.
pub fn interval_count_bound(n: usize, epsilon: f64) -> usize {
    ((n as f64 * epsilon + 1.0).ln() / (1.0 + epsilon).ln()).ceil() as usize + 2
}

/// Partition of `[1..n]`.
pub fn make_partition(n: usize, epsilon: f64, direction: Direction) -> Result<IntervalPartition> {
    if n == 0 {
        return Err(Error::Config("partition needs n >= 1".into()));
    }
    make_partition_on(Interval::span(1, n)?, epsilon, direction)
}

/// Partition of an arbitrary range `domain`, expressed in global indices.
///
/// `epsilon` must lie in `(0, 1]`.
pub fn make_partition_on(domain: Interval, epsilon: f64, direction: Direction) -> Result<IntervalPartition> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let n = domain.len();
    let mut sizes = Vec::new();
    let mut covered = 0usize;
    let mut j = 1;
    while covered < n {
        let s = nominal_size(epsilon, j).min(n - covered);
        sizes.push(s);
        covered += s;
        j += 1;
    }
    if direction == Direction::Increasing {
        sizes.reverse();
    }
    let mut intervals = Vec::with_capacity(sizes.len());
    let mut lo = domain.lo();
    for s in sizes {
        intervals.push(Interval::span(lo, lo + s - 1)?);
        lo += s;
    }
    Ok(IntervalPartition { intervals, direction, epsilon })
}

/// Flattened distribution of `u`: inside each interval every coordinate equals
/// `W(I_j) / (|I_j| · W)`. The partition must cover `[1..n]`.
pub fn flatten(u: &Universe, p: &IntervalPartition) -> Result<Vec<f64>> {
    if p.domain() != u.full() {
        return Err(Error::Config(format!("partition covers {} but universe is {}", p.domain(), u.full())));
    }
    let total = u.exact_sum();
    let w = u.weights();
    let mut out = vec![0.0; u.n()];
    for iv in p.intervals() {
        let s = compensated_sum(w[iv.lo() - 1..iv.hi()].iter().copied());
        out[iv.lo() - 1..iv.hi()].fill(s / (iv.len() as f64 * total));
    }
    Ok(out)
}

/// Flattening applied to a probability vector indexed `1..=d.len()`.
pub fn flatten_distribution(d: &[f64], p: &IntervalPartition) -> Result<Vec<f64>> {
    if p.domain() != Interval::span(1, d.len().max(1))? || d.is_empty() {
        return Err(Error::LengthMismatch(d.len(), p.domain().hi()));
    }
    let mut out = vec![0.0; d.len()];
    for iv in p.intervals() {
        let s = compensated_sum(d[iv.lo() - 1..iv.hi()].iter().copied());
        out[iv.lo() - 1..iv.hi()].fill(s / iv.len() as f64);
    }
    Ok(out)
}

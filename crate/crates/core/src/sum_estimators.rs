//! Total-weight estimation for monotone and unimodal universes.
//!
//! The monotone estimator partitions the domain obliviously, tests every
//! interval for uniformity of its conditional distribution, and averages the
//! weights of full-domain weighted samples that land outside the rejected
//! intervals. When no interval is rejected it switches to one of two exact
//! branches: a constant universe (`w(lo) = w(hi)`) or one conditional draw per
//! interval scaled by the interval length. Every conditioning set is a function
//! of the domain and `ε` alone.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{OracleSession, QueryStats, SamplePair};
use crate::partition::{make_partition_on, Direction, IntervalPartition};
use crate::universe::Interval;

pub const DEFAULT_C_T: f64 = 50.0;
pub const DEFAULT_C_U: f64 = 4.0;

/// Partition parameter `ε(1 − √(1 − ε))` used by the estimator for accuracy `ε`.
///
/// Accepts `ε ∈ (0, 1]`; at `ε = 1` the result is `1`.
pub fn refined_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(epsilon * (1.0 - (1.0 - epsilon).sqrt()))
}

/// Per-interval tester sample budget `ceil((c_U / ε) · ln(100 / ε))`.
pub fn tester_budget(epsilon: f64, c_u: f64) -> usize {
    ((c_u / epsilon) * (100.0 / epsilon).ln()).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumParams {
    pub epsilon: f64,
    /// `√(1 − ε)`.
    pub delta: f64,
    /// `ε(1 − δ)`, the partition parameter.
    pub epsilon1: f64,
    /// Main-loop sample count `ceil(c_T / ε⁶)`.
    pub t_main: usize,
    pub t1: usize,
    pub t2: usize,
    pub c_t: f64,
    pub c_u: f64,
    /// Fixed repetition count for each interval test; `None` derives it from `ℓ`.
    pub amplification: Option<usize>,
    /// Relative tolerance of the `w(lo) = w(hi)` check; 0 means exact equality.
    pub equality_tolerance: f64,
}

impl SumParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_constants(epsilon, DEFAULT_C_T, DEFAULT_C_U)
    }

    pub fn with_constants(epsilon: f64, c_t: f64, c_u: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        for (name, c) in [("c_T", c_t), ("c_U", c_u)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {c}")));
            }
        }
        let delta = (1.0 - epsilon).sqrt();
        let t_main = (c_t / epsilon.powi(6)).ceil() as usize;
        let t = tester_budget(epsilon, c_u);
        Ok(SumParams {
            epsilon,
            delta,
            epsilon1: epsilon * (1.0 - delta),
            t_main: t_main.max(1),
            t1: t,
            t2: t,
            c_t,
            c_u,
            amplification: None,
            equality_tolerance: 0.0,
        })
    }

    pub fn with_amplification(mut self, reps: usize) -> Result<Self> {
        if reps == 0 {
            return Err(Error::Config("amplification must be at least 1".into()));
        }
        self.amplification = Some(reps);
        Ok(self)
    }

    pub fn with_equality_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::Config(format!("equality tolerance must be >= 0, got {tol}")));
        }
        self.equality_tolerance = tol;
        Ok(self)
    }

    /// Majority-vote repetitions for a partition of `ell` intervals:
    /// `2 · ceil(log₂(10ℓ)) + 1` unless overridden.
    pub fn amplification_for(&self, ell: usize) -> usize {
        self.amplification.unwrap_or_else(|| 2 * (10.0 * ell as f64).log2().ceil() as usize + 1)
    }

    pub fn partition(&self, domain: Interval, direction: Direction) -> Result<IntervalPartition> {
        make_partition_on(domain, self.epsilon1, direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformityVerdict {
    pub verdict: Verdict,
    /// Weighted-sample pair over uniform-sample pair with the largest ratio; set on rejection.
    pub witness: Option<(SamplePair, SamplePair)>,
    /// Every weighted draw fell back to uniform because `W(iv) = 0`.
    pub zero_mass: bool,
}

/// Draws `t1` weighted-conditional and `t2` uniform-conditional samples on `iv`
/// and rejects iff some cross pair has `w(i) / w(j) > 1 + ε/2`. A zero weight in
/// the denominator counts as an infinite ratio; a zero-mass interval rejects.
pub fn test_uniformity(
    s: &mut OracleSession<'_>,
    iv: Interval,
    epsilon: f64,
    t1: usize,
    t2: usize,
) -> Result<UniformityVerdict> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if t1 == 0 || t2 == 0 {
        return Err(Error::Config("tester budgets t1 and t2 must be at least 1".into()));
    }
    let fallbacks_before = s.stats().zero_mass_fallbacks;
    // The largest ratio over all cross pairs is max(weighted) / min(uniform).
    let mut heaviest = s.weighted_cond_sample(iv)?;
    for _ in 1..t1 {
        let p = s.weighted_cond_sample(iv)?;
        if p.weight > heaviest.weight {
            heaviest = p;
        }
    }
    let mut lightest = s.uniform_cond_sample(iv)?;
    for _ in 1..t2 {
        let p = s.uniform_cond_sample(iv)?;
        if p.weight < lightest.weight {
            lightest = p;
        }
    }
    let zero_mass = s.stats().zero_mass_fallbacks - fallbacks_before == t1 as u64;
    let reject = zero_mass
        || if lightest.weight == 0.0 {
            heaviest.weight > 0.0
        } else {
            heaviest.weight / lightest.weight > 1.0 + epsilon / 2.0
        };
    Ok(if reject {
        UniformityVerdict { verdict: Verdict::Reject, witness: Some((heaviest, lightest)), zero_mass }
    } else {
        UniformityVerdict { verdict: Verdict::Accept, witness: None, zero_mass }
    })
}

/// Majority vote over `reps` independent runs of [`test_uniformity`]; rejects
/// when strictly more than half of the runs reject.
pub fn test_uniformity_amplified(
    s: &mut OracleSession<'_>,
    iv: Interval,
    epsilon: f64,
    t1: usize,
    t2: usize,
    reps: usize,
) -> Result<Verdict> {
    let mut rejects = 0;
    for _ in 0..reps {
        if test_uniformity(s, iv, epsilon, t1, t2)?.verdict == Verdict::Reject {
            rejects += 1;
        }
    }
    Ok(if 2 * rejects > reps { Verdict::Reject } else { Verdict::Accept })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SumBranch {
    MainLoop,
    ConstantUniverse,
    PerIntervalFlat,
}

impl fmt::Display for SumBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SumBranch::MainLoop => "main-loop",
            SumBranch::ConstantUniverse => "constant-universe",
            SumBranch::PerIntervalFlat => "per-interval-flat",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumEstimate {
    /// The returned estimate `Ŵ`.
    pub value: f64,
    /// Mean of the main-loop samples, computed on every branch.
    pub main_loop_value: f64,
    pub branch: SumBranch,
    /// 1-based ordinals of the rejected intervals (the set `J`).
    pub rejected_intervals: Vec<usize>,
    pub domain: Interval,
    pub direction: Direction,
    pub intervals: usize,
    pub amplification: usize,
    pub stats: QueryStats,
    pub params: SumParams,
}

impl SumEstimate {
    /// Conditional queries the run must have spent given its branch.
    pub fn expected_conditional_queries(&self) -> u64 {
        let p = &self.params;
        let base = (self.intervals * self.amplification * (p.t1 + p.t2) + p.t_main) as u64;
        base + match self.branch {
            SumBranch::MainLoop => 0,
            SumBranch::ConstantUniverse => 2,
            SumBranch::PerIntervalFlat => 2 + self.intervals as u64,
        }
    }
}

/// Runs the monotone estimator on `domain`, whose weights are non-increasing
/// (`Decreasing`) or non-decreasing (`Increasing`).
pub fn estimate_sum_on(
    s: &mut OracleSession<'_>,
    domain: Interval,
    direction: Direction,
    params: &SumParams,
) -> Result<SumEstimate> {
    s.universe().check_interval(domain)?;
    let before = s.stats();
    let partition = params.partition(domain, direction)?;
    let ell = partition.len();
    let reps = params.amplification_for(ell);

    let mut rejected = vec![false; ell];
    for (j, &iv) in partition.intervals().iter().enumerate() {
        let v = test_uniformity_amplified(s, iv, params.epsilon, params.t1, params.t2, reps)?;
        rejected[j] = v == Verdict::Reject;
    }

    let mut acc = 0.0;
    for _ in 0..params.t_main {
        let p = s.weighted_cond_sample(domain)?;
        if !rejected[partition.interval_of(p.index)? - 1] {
            acc += p.weight;
        }
    }
    let main_loop_value = acc / params.t_main as f64;

    let rejected_intervals: Vec<usize> =
        rejected.iter().enumerate().filter(|(_, &r)| r).map(|(j, _)| j + 1).collect();
    let (value, branch) = if rejected_intervals.is_empty() {
        let first = s.weighted_cond_sample(Interval::singleton(domain.lo())?)?.weight;
        let last = s.weighted_cond_sample(Interval::singleton(domain.hi())?)?.weight;
        let tol = params.equality_tolerance * first.abs().max(last.abs());
        if (first - last).abs() <= tol {
            (domain.len() as f64 * first, SumBranch::ConstantUniverse)
        } else {
            let mut total = 0.0;
            for &iv in partition.intervals() {
                total += iv.len() as f64 * s.weighted_cond_sample(iv)?.weight;
            }
            (total, SumBranch::PerIntervalFlat)
        }
    } else {
        (main_loop_value, SumBranch::MainLoop)
    };

    Ok(SumEstimate {
        value,
        main_loop_value,
        branch,
        rejected_intervals,
        domain,
        direction,
        intervals: ell,
        amplification: reps,
        stats: s.stats() - before,
        params: *params,
    })
}

/// Estimates `W` for a non-increasing universe.
pub fn estimate_sum_monotone(s: &mut OracleSession<'_>, params: &SumParams) -> Result<SumEstimate> {
    debug_assert!(s.universe().is_monotone_nonincreasing(), "universe is not non-increasing");
    let full = s.universe().full();
    estimate_sum_on(s, full, Direction::Decreasing, params)
}

/// Binary search for the minimum of a decreasing-then-increasing sequence using
/// evaluation queries only.
///
/// Each step evaluates `w(mid - 1)`, `w(mid)`, `w(mid + 1)`: a strict local
/// minimum is returned at once, a descent moves right, anything else (ascent or
/// tie) moves left keeping `mid`. Ranges of at most four elements are scanned,
/// ties going to the smallest index.
pub fn find_valley(s: &mut OracleSession<'_>) -> Result<usize> {
    let (mut lo, mut hi) = (1, s.n());
    while hi - lo + 1 > 4 {
        let mid = lo + (hi - lo) / 2;
        let left = s.eval_query(mid - 1)?;
        let here = s.eval_query(mid)?;
        let right = s.eval_query(mid + 1)?;
        if left > here && here < right {
            return Ok(mid);
        }
        if here > right {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let mut best = (lo, s.eval_query(lo)?);
    for i in lo + 1..=hi {
        let w = s.eval_query(i)?;
        if w < best.1 {
            best = (i, w);
        }
    }
    Ok(best.0)
}

/// Evaluation-query budget of [`find_valley`]: `3 · ceil(log₂ n) + 8`.
pub fn valley_query_bound(n: usize) -> u64 {
    3 * (n as f64).log2().ceil() as u64 + 8
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnimodalEstimate {
    pub value: f64,
    pub main_loop_value: f64,
    pub valley: usize,
    /// Estimate for `[1..valley]` with the decreasing partition.
    pub left: SumEstimate,
    /// Estimate for `[valley + 1..n]` with the increasing partition; absent when the valley is `n`.
    pub right: Option<SumEstimate>,
    pub stats: QueryStats,
}

impl UnimodalEstimate {
    pub fn branch_label(&self) -> String {
        match &self.right {
            Some(r) => format!("{}+{}", self.left.branch, r.branch),
            None => self.left.branch.to_string(),
        }
    }
}

/// Estimates `W` for a universe that decreases to a valley and then increases.
pub fn estimate_sum_unimodal(s: &mut OracleSession<'_>, params: &SumParams) -> Result<UnimodalEstimate> {
    let before = s.stats();
    let n = s.n();
    let valley = find_valley(s)?;
    let left = estimate_sum_on(s, Interval::span(1, valley)?, Direction::Decreasing, params)?;
    let right = if valley < n {
        Some(estimate_sum_on(s, Interval::span(valley + 1, n)?, Direction::Increasing, params)?)
    } else {
        None
    };
    let (value, main_loop_value) = match &right {
        Some(r) => (left.value + r.value, left.main_loop_value + r.main_loop_value),
        None => (left.value, left.main_loop_value),
    };
    Ok(UnimodalEstimate { value, main_loop_value, valley, left, right, stats: s.stats() - before })
}

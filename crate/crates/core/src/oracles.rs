//! Simulated access models over a [`Universe`].
//!
//! An [`OracleSession`] owns a seeded ChaCha8 stream and counts every query by
//! access model. Conditioning sets are contiguous intervals.

use std::ops::{Add, Sub};

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::universe::{Interval, Universe};

/// An `(index, weight)` pair as returned by the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplePair {
    pub index: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryStats {
    pub weighted_cond: u64,
    pub uniform_cond: u64,
    pub eval: u64,
    pub weighted_full: u64,
    pub uniform_full: u64,
    pub zero_mass_fallbacks: u64,
}

impl QueryStats {
    /// Weighted plus uniform conditional queries.
    pub fn conditional(&self) -> u64 {
        self.weighted_cond + self.uniform_cond
    }
}

impl Add for QueryStats {
    type Output = QueryStats;

    fn add(self, o: QueryStats) -> QueryStats {
        QueryStats {
            weighted_cond: self.weighted_cond + o.weighted_cond,
            uniform_cond: self.uniform_cond + o.uniform_cond,
            eval: self.eval + o.eval,
            weighted_full: self.weighted_full + o.weighted_full,
            uniform_full: self.uniform_full + o.uniform_full,
            zero_mass_fallbacks: self.zero_mass_fallbacks + o.zero_mass_fallbacks,
        }
    }
}

impl Sub for QueryStats {
    type Output = QueryStats;

    fn sub(self, o: QueryStats) -> QueryStats {
        QueryStats {
            weighted_cond: self.weighted_cond - o.weighted_cond,
            uniform_cond: self.uniform_cond - o.uniform_cond,
            eval: self.eval - o.eval,
            weighted_full: self.weighted_full - o.weighted_full,
            uniform_full: self.uniform_full - o.uniform_full,
            zero_mass_fallbacks: self.zero_mass_fallbacks - o.zero_mass_fallbacks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondModel {
    WeightedCond,
    UniformCond,
}

/// RNG for trial `trial` of a run seeded with `master_seed`: one ChaCha8 key
/// per master seed, one stream per trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Single-owner query interface over a shared universe.
pub struct OracleSession<'u> {
    universe: &'u Universe,
    rng: ChaCha8Rng,
    /// Precomputed sampler for `[1..n]`; the support estimator draws from it
    /// millions of times per run.
    full_uniform: Uniform<usize>,
    stats: QueryStats,
    comparisons: u64,
    conditioning_log: Option<Vec<(CondModel, Interval)>>,
}

impl<'u> OracleSession<'u> {
    pub fn new(universe: &'u Universe, seed: u64) -> Self {
        Self::from_rng(universe, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn for_trial(universe: &'u Universe, master_seed: u64, trial: u64) -> Self {
        Self::from_rng(universe, trial_rng(master_seed, trial))
    }

    pub fn from_rng(universe: &'u Universe, rng: ChaCha8Rng) -> Self {
        OracleSession {
            universe,
            rng,
            full_uniform: Uniform::new_inclusive(1, universe.n()),
            stats: QueryStats::default(),
            comparisons: 0,
            conditioning_log: None,
        }
    }

    pub fn universe(&self) -> &'u Universe {
        self.universe
    }

    pub fn n(&self) -> usize {
        self.universe.n()
    }

    pub fn stats(&self) -> QueryStats {
        self.stats
    }

    /// Prefix-sum comparisons spent locating weighted samples so far.
    pub fn search_comparisons(&self) -> u64 {
        self.comparisons
    }

    /// Starts recording every conditioning set passed to the conditional samplers.
    pub fn enable_conditioning_log(&mut self) {
        self.conditioning_log = Some(Vec::new());
    }

    pub fn conditioning_log(&self) -> Option<&[(CondModel, Interval)]> {
        self.conditioning_log.as_deref()
    }

    fn log(&mut self, model: CondModel, iv: Interval) {
        if let Some(log) = self.conditioning_log.as_mut() {
            log.push((model, iv));
        }
    }

    fn pair(&self, index: usize) -> SamplePair {
        SamplePair { index, weight: self.universe.weights()[index - 1] }
    }

    /// Smallest `i` in `[lo..hi]` with `prefix[i] > target`.
    fn locate(&mut self, iv: Interval, target: f64) -> usize {
        let prefix = self.universe.prefix();
        let (mut l, mut h) = (iv.lo(), iv.hi());
        while l < h {
            let mid = l + (h - l) / 2;
            self.comparisons += 1;
            if prefix[mid] > target {
                h = mid;
            } else {
                l = mid + 1;
            }
        }
        l
    }

    /// Index drawn with probability `w(i) / W(iv)`; `None` when `W(iv) = 0`.
    fn draw_weighted(&mut self, iv: Interval) -> Option<usize> {
        let prefix = self.universe.prefix();
        let (a, b) = (prefix[iv.lo() - 1], prefix[iv.hi()]);
        if b <= a {
            return None;
        }
        loop {
            let target = a + self.rng.gen::<f64>() * (b - a);
            if target < b {
                return Some(self.locate(iv, target));
            }
        }
    }

    fn draw_uniform(&mut self, iv: Interval) -> usize {
        self.rng.gen_range(iv.lo()..=iv.hi())
    }

    /// Returns `i ∈ iv` with probability `w(i) / W(iv)`. A zero-mass interval
    /// yields a uniform draw and bumps `zero_mass_fallbacks`.
    pub fn weighted_cond_sample(&mut self, iv: Interval) -> Result<SamplePair> {
        self.universe.check_interval(iv)?;
        self.stats.weighted_cond += 1;
        self.log(CondModel::WeightedCond, iv);
        let index = match self.draw_weighted(iv) {
            Some(i) => i,
            None => {
                self.stats.zero_mass_fallbacks += 1;
                self.draw_uniform(iv)
            }
        };
        Ok(self.pair(index))
    }

    /// Returns `i ∈ iv` with probability `1 / |iv|`.
    pub fn uniform_cond_sample(&mut self, iv: Interval) -> Result<SamplePair> {
        self.universe.check_interval(iv)?;
        self.stats.uniform_cond += 1;
        self.log(CondModel::UniformCond, iv);
        let index = self.draw_uniform(iv);
        Ok(self.pair(index))
    }

    /// `w(i)`.
    pub fn eval_query(&mut self, i: usize) -> Result<f64> {
        let w = self.universe.weight(i)?;
        self.stats.eval += 1;
        Ok(w)
    }

    /// Returns `i ∈ [1..n]` with probability `w(i) / W`.
    pub fn weighted_full_sample(&mut self) -> SamplePair {
        self.stats.weighted_full += 1;
        let full = self.universe.full();
        let index = self.draw_weighted(full).expect("universe has positive total weight");
        self.pair(index)
    }

    /// Returns `i ∈ [1..n]` with probability `1 / n`.
    pub fn uniform_full_sample(&mut self) -> SamplePair {
        self.stats.uniform_full += 1;
        let index = self.rng.sample(self.full_uniform);
        self.pair(index)
    }
}

/// Exact pmf over `iv` of the conditional sampler for `model`, including the
/// uniform fallback on zero-mass intervals.
pub fn exact_pmf(u: &Universe, iv: Interval, model: CondModel) -> Result<Vec<f64>> {
    u.check_interval(iv)?;
    let len = iv.len() as f64;
    let w = &u.weights()[iv.lo() - 1..iv.hi()];
    let total: f64 = w.iter().sum();
    Ok(match model {
        CondModel::WeightedCond if total > 0.0 => w.iter().map(|&x| x / total).collect(),
        _ => vec![1.0 / len; iv.len()],
    })
}

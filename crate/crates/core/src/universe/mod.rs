//! The weighted universe and exact ground-truth computations.
//!
//! Indices are 1-based everywhere in the public API. The universe stores its
//! weights and their running prefix sums; both are fixed at construction.

mod generators;

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generators::{generate, GeneratorSpec};

/// Closed index range `[lo..hi]`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    /// Builds `[lo..hi]` after checking `1 <= lo <= hi <= n`.
    pub fn new(lo: usize, hi: usize, n: usize) -> Result<Self> {
        if lo == 0 || lo > hi || hi > n {
            return Err(Error::InvalidInterval { lo, hi, n });
        }
        Ok(Interval { lo, hi })
    }

    /// Builds an interval without a universe bound; only `1 <= lo <= hi` is checked.
    pub fn span(lo: usize, hi: usize) -> Result<Self> {
        Self::new(lo, hi, hi)
    }

    pub fn singleton(i: usize) -> Result<Self> {
        Self::span(i, i)
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lo, self.hi)
    }
}

/// An immutable array of `n` non-negative weights with cached prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Universe {
    weights: Vec<f64>,
    /// `prefix[0] = 0`, `prefix[i] = prefix[i - 1] + w(i)`.
    prefix: Vec<f64>,
    total: f64,
}

#[derive(Serialize, Deserialize)]
struct UniverseFile {
    n: usize,
    weights: Vec<f64>,
}

impl Universe {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight(k + 1));
            }
            if w < 0.0 {
                return Err(Error::NegativeWeight { index: k + 1, weight: w });
            }
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::AllZero);
        }
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &w in &weights {
            acc += w;
            prefix.push(acc);
        }
        let total = compensated_sum(weights.iter().copied());
        Ok(Universe { weights, prefix, total })
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// `w(i)` for `1 <= i <= n`.
    pub fn weight(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.weights[i - 1])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn full(&self) -> Interval {
        Interval { lo: 1, hi: self.n() }
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    pub fn check_interval(&self, iv: Interval) -> Result<()> {
        if iv.hi > self.n() {
            return Err(Error::InvalidInterval { lo: iv.lo, hi: iv.hi, n: self.n() });
        }
        Ok(())
    }

    /// `W(iv)` from the prefix sums.
    pub fn interval_weight(&self, iv: Interval) -> f64 {
        self.prefix[iv.hi] - self.prefix[iv.lo - 1]
    }

    /// True when every weight inside `iv` is zero.
    pub fn is_zero_mass(&self, iv: Interval) -> bool {
        self.weights[iv.lo - 1..iv.hi].iter().all(|&w| w == 0.0)
    }

    /// Total weight `W`, summed with Neumaier compensation.
    pub fn exact_sum(&self) -> f64 {
        self.total
    }

    /// Number of strictly positive weights.
    pub fn exact_support(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    pub fn is_monotone_nonincreasing(&self) -> bool {
        self.weights.windows(2).all(|p| p[0] >= p[1])
    }

    pub fn is_monotone_nondecreasing(&self) -> bool {
        self.weights.windows(2).all(|p| p[0] <= p[1])
    }

    /// Smallest `j` such that `w(1..=j)` is non-increasing and `w(j..=n)` is
    /// non-decreasing, if any.
    pub fn unimodal_valley(&self) -> Option<usize> {
        let w = &self.weights;
        let n = w.len();
        // Largest a with w(1..=a) non-increasing.
        let a = (1..n).find(|&k| w[k] > w[k - 1]).unwrap_or(n);
        // Smallest b with w(b..=n) non-decreasing.
        let b = (1..n).rev().find(|&k| w[k - 1] > w[k]).map_or(1, |k| k + 1);
        (b <= a).then_some(b)
    }

    /// Every positive weight is at least `W / n`.
    pub fn satisfies_min_weight_promise(&self) -> bool {
        let floor = self.total / self.n() as f64;
        self.weights.iter().all(|&w| w == 0.0 || w >= floor)
    }

    /// The induced distribution `D(i) = w(i) / W`.
    pub fn distribution(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| w / self.total).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: UniverseFile = serde_json::from_str(s)?;
        if file.n != file.weights.len() {
            return Err(Error::Config(format!(
                "universe file declares n = {} but lists {} weights",
                file.n,
                file.weights.len()
            )));
        }
        Universe::new(file.weights)
    }

    pub fn to_json_string(&self) -> String {
        let file = UniverseFile { n: self.n(), weights: self.weights.clone() };
        serde_json::to_string(&file).expect("universe serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }
}

/// Neumaier-compensated summation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

const NORMALIZATION_TOL: f64 = 1e-9;

/// Total variation distance `½ Σ |p(i) − q(i)|` between two probability vectors.
pub fn exact_tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    for v in [p, q] {
        let s = compensated_sum(v.iter().copied());
        if (s - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(s));
        }
    }
    let d = 0.5 * compensated_sum(p.iter().zip(q).map(|(a, b)| (a - b).abs()));
    Ok(d.clamp(0.0, 1.0))
}

//! Support-size estimation with full-domain weighted and uniform samples.
//!
//! A set `R` of weighted samples serves as neighborhood centers; a point `y` is
//! in the neighborhood of `x` when `w(x)/(1+ε) ≤ w(y) ≤ (1+ε)·w(x)`. The
//! `Literal` variant sums `n · f̂_r` over every center, which counts overlapping
//! neighborhoods once per center. The `Union` variant estimates the fraction of
//! the domain covered by at least one center from a single shared pool of
//! uniform samples.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracles::{OracleSession, QueryStats, SamplePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportVariant {
    Literal,
    Union,
}

impl fmt::Display for SupportVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SupportVariant::Literal => "literal",
            SupportVariant::Union => "union",
        })
    }
}

impl FromStr for SupportVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(SupportVariant::Literal),
            "union" => Ok(SupportVariant::Union),
            other => Err(Error::Config(format!("unknown variant '{other}' (literal|union)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportParams {
    pub epsilon: f64,
    pub n: usize,
    /// Additive accuracy of each neighborhood fraction.
    pub alpha: f64,
    /// The closed-form `α` was replaced by `ε/4` (degenerate or larger).
    pub alpha_clamped: bool,
    /// Uniform samples per neighborhood estimate (or in the shared pool).
    pub s_budget: usize,
    /// Weighted samples forming `R`.
    pub r_budget: usize,
    pub variant: SupportVariant,
    pub c_s: f64,
    pub c_r: f64,
}

impl SupportParams {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        Self::with_constants(epsilon, n, 1.0, 1.0, SupportVariant::Union)
    }

    /// `α = min(ε³ / (ln(n/ε) · ln ln(n/ε)), ε/4)`,
    /// `R = ceil(c_R · (ln(n/ε) / ε²) · ln(ln(n/ε) / ε))`,
    /// `S = ceil(c_S · ln(10R) / α²)`; both budgets are at least 1.
    pub fn with_constants(
        epsilon: f64,
        n: usize,
        c_s: f64,
        c_r: f64,
        variant: SupportVariant,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        if n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        for (name, c) in [("c_S", c_s), ("c_R", c_r)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {c}")));
            }
        }
        let log_ratio = (n as f64 / epsilon).ln();
        let log_log = log_ratio.ln();
        let cap = epsilon / 4.0;
        let (alpha, alpha_clamped) = if log_log > 0.0 {
            let formula = epsilon.powi(3) / (log_ratio * log_log);
            if formula > cap {
                (cap, true)
            } else {
                (formula, false)
            }
        } else {
            (cap, true)
        };
        let r_budget =
            (c_r * (log_ratio / (epsilon * epsilon)) * (log_ratio / epsilon).ln()).ceil().max(1.0) as usize;
        let s_budget = (c_s * (10.0 * r_budget as f64).ln() / (alpha * alpha)).ceil().max(1.0) as usize;
        Ok(SupportParams { epsilon, n, alpha, alpha_clamped, s_budget, r_budget, variant, c_s, c_r })
    }

    pub fn with_variant(mut self, variant: SupportVariant) -> Self {
        self.variant = variant;
        self
    }

    /// Closed-form `(weighted_full, uniform_full)` query counts of one run.
    pub fn expected_queries(&self) -> (u64, u64) {
        let r = self.r_budget as u64;
        let s = self.s_budget as u64;
        match self.variant {
            SupportVariant::Literal => (r, r * s),
            SupportVariant::Union => (r, s),
        }
    }
}

/// `w_center/(1+ε) ≤ w_other ≤ (1+ε)·w_center`.
pub fn in_neighborhood(w_center: f64, w_other: f64, epsilon: f64) -> Result<bool> {
    if w_center <= 0.0 {
        return Err(Error::ZeroWeightCenter);
    }
    Ok(w_center / (1.0 + epsilon) <= w_other && w_other <= (1.0 + epsilon) * w_center)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeighborhoodEstimate {
    pub center: SamplePair,
    pub fraction: f64,
}

/// Fraction of `S` uniform samples that fall in the neighborhood of `center`.
pub fn estimate_neighborhood_fraction(
    s: &mut OracleSession<'_>,
    center: SamplePair,
    params: &SupportParams,
) -> Result<NeighborhoodEstimate> {
    if center.weight <= 0.0 {
        return Err(Error::ZeroWeightCenter);
    }
    let mut hits = 0usize;
    for _ in 0..params.s_budget {
        let p = s.uniform_full_sample();
        if in_neighborhood(center.weight, p.weight, params.epsilon)? {
            hits += 1;
        }
    }
    Ok(NeighborhoodEstimate { center, fraction: hits as f64 / params.s_budget as f64 })
}

/// Union of the neighborhoods of a set of centers, as merged closed weight ranges.
///
/// Membership agrees exactly with "some center `c` has
/// `in_neighborhood(c, w, ε)`": the ranges are built from the same floating
/// point bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSet {
    ranges: Vec<(f64, f64)>,
}

impl CoverSet {
    pub fn new(center_weights: impl IntoIterator<Item = f64>, epsilon: f64) -> Result<Self> {
        let mut raw = Vec::new();
        for c in center_weights {
            if c <= 0.0 {
                return Err(Error::ZeroWeightCenter);
            }
            raw.push((c / (1.0 + epsilon), (1.0 + epsilon) * c));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ranges: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match ranges.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => ranges.push((lo, hi)),
            }
        }
        Ok(CoverSet { ranges })
    }

    pub fn covers(&self, w: f64) -> bool {
        let k = self.ranges.partition_point(|r| r.0 <= w);
        let Some(r) = self.ranges.get(k.saturating_sub(1)) else {
            return false;
        };
        // Non-short-circuiting: the outcome is close to a coin flip in the hot loop.
        (k > 0) & (w <= r.1)
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEstimate {
    /// `k̂`.
    pub value: f64,
    pub variant: SupportVariant,
    pub stats: QueryStats,
    /// `|R|` counted with multiplicity.
    pub cover_set_size: usize,
    pub distinct_centers: usize,
    #[serde(skip)]
    pub centers: Vec<SamplePair>,
    pub params: SupportParams,
}

/// Estimates the number of positive weights. Assumes every positive weight is
/// at least `W / n`.
pub fn estimate_support_size(s: &mut OracleSession<'_>, params: &SupportParams) -> Result<SupportEstimate> {
    debug_assert!(s.universe().satisfies_min_weight_promise(), "min-weight promise violated");
    let before = s.stats();
    let n = s.n() as f64;
    let centers: Vec<SamplePair> = (0..params.r_budget).map(|_| s.weighted_full_sample()).collect();

    let value = match params.variant {
        SupportVariant::Literal => {
            let mut k = 0.0;
            for &c in &centers {
                k += n * estimate_neighborhood_fraction(s, c, params)?.fraction;
            }
            k
        }
        SupportVariant::Union => {
            let cover = CoverSet::new(centers.iter().map(|c| c.weight), params.epsilon)?;
            let mut hits = 0usize;
            for _ in 0..params.s_budget {
                hits += cover.covers(s.uniform_full_sample().weight) as usize;
            }
            n * (hits as f64 / params.s_budget as f64)
        }
    };

    let mut distinct: Vec<usize> = centers.iter().map(|c| c.index).collect();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(SupportEstimate {
        value,
        variant: params.variant,
        stats: s.stats() - before,
        cover_set_size: centers.len(),
        distinct_centers: distinct.len(),
        centers,
        params: *params,
    })
}

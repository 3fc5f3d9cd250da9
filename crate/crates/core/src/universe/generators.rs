//! Seeded synthetic universes with structural promises.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Interval, Universe};
use crate::error::{Error, Result};
use crate::partition::{make_partition, make_partition_on, Direction};
use crate::sum_estimators::refined_epsilon;

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Every weight equals `c`.
    Constant { c: f64 },
    /// `w(i) = i^(-exponent)`.
    PowerLaw { exponent: f64 },
    /// `levels` equal-width blocks with integer weights `levels, levels - 1, …, 1`.
    Step { levels: usize },
    /// Piecewise constant on the decreasing partition built for an estimator run
    /// with this `epsilon`, with strictly decreasing integer levels. With a
    /// `valley`, a V shape: strictly decreasing on `[1..valley]`, flat on the
    /// increasing partition of `[valley + 1..n]`, unique minimum at `valley`.
    BirgeFlat { epsilon: f64, valley: Option<Valley> },
    /// `k <= n / 2` positive weights drawn from `[1, 2]` at random positions.
    SparseSupport { k: usize },
    /// Strictly decreasing then strictly increasing with a unique minimum.
    StrictUnimodal { valley: Option<usize>, profile: UnimodalProfile },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valley {
    /// Longest prefix on which the decreasing partition is all singletons.
    Auto,
    At(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnimodalProfile {
    /// `w(i) = |i - valley| + 1`.
    Linear,
    /// Random increments in `[0.5, 1.5)` away from a random valley weight in `[1, 2)`.
    Random,
}

impl GeneratorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Constant { .. } => "constant",
            GeneratorSpec::PowerLaw { .. } => "power-law",
            GeneratorSpec::Step { .. } => "step",
            GeneratorSpec::BirgeFlat { .. } => "birge-flat",
            GeneratorSpec::SparseSupport { .. } => "sparse-support",
            GeneratorSpec::StrictUnimodal { .. } => "strict-unimodal",
        }
    }

    /// Whether the generated universe is promised to be non-increasing.
    pub fn is_monotone(&self) -> bool {
        matches!(
            self,
            GeneratorSpec::Constant { .. }
                | GeneratorSpec::PowerLaw { .. }
                | GeneratorSpec::Step { .. }
                | GeneratorSpec::BirgeFlat { valley: None, .. }
        )
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Generator(format!("cannot parse {key}={value}")))
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// `kind` or `kind:key=value,key=value`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k.trim(), r),
            None => (s.trim(), ""),
        };
        let mut params = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Generator(format!("expected key=value, got '{item}'")))?;
            params.push((k.trim(), v.trim()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        let required = |key: &str| {
            get(key).ok_or_else(|| Error::Generator(format!("{kind} requires parameter '{key}'")))
        };
        let allowed: &[&str] = match kind {
            "constant" => &["c"],
            "power-law" => &["exponent"],
            "step" => &["levels"],
            "birge-flat" => &["epsilon", "valley"],
            "sparse-support" => &["k"],
            "strict-unimodal" => &["valley", "profile"],
            other => return Err(Error::Generator(format!("unknown generator kind '{other}'"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::Generator(format!("unknown parameter '{k}' for {kind}")));
        }
        let spec = match kind {
            "constant" => GeneratorSpec::Constant { c: get("c").map_or(Ok(1.0), |v| parse_num("c", v))? },
            "power-law" => GeneratorSpec::PowerLaw {
                exponent: get("exponent").map_or(Ok(1.0), |v| parse_num("exponent", v))?,
            },
            "step" => GeneratorSpec::Step { levels: parse_num("levels", required("levels")?)? },
            "birge-flat" => GeneratorSpec::BirgeFlat {
                epsilon: parse_num("epsilon", required("epsilon")?)?,
                valley: match get("valley") {
                    None => None,
                    Some("auto") => Some(Valley::Auto),
                    Some(v) => Some(Valley::At(parse_num("valley", v)?)),
                },
            },
            "sparse-support" => GeneratorSpec::SparseSupport { k: parse_num("k", required("k")?)? },
            "strict-unimodal" => GeneratorSpec::StrictUnimodal {
                valley: get("valley").map(|v| parse_num("valley", v)).transpose()?,
                profile: match get("profile").unwrap_or("random") {
                    "random" => UnimodalProfile::Random,
                    "linear" => UnimodalProfile::Linear,
                    other => return Err(Error::Generator(format!("unknown profile '{other}'"))),
                },
            },
            _ => unreachable!(),
        };
        Ok(spec)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::Constant { c } => write!(f, "constant:c={c}"),
            GeneratorSpec::PowerLaw { exponent } => write!(f, "power-law:exponent={exponent}"),
            GeneratorSpec::Step { levels } => write!(f, "step:levels={levels}"),
            GeneratorSpec::BirgeFlat { epsilon, valley } => {
                write!(f, "birge-flat:epsilon={epsilon}")?;
                match valley {
                    None => Ok(()),
                    Some(Valley::Auto) => write!(f, ",valley=auto"),
                    Some(Valley::At(m)) => write!(f, ",valley={m}"),
                }
            }
            GeneratorSpec::SparseSupport { k } => write!(f, "sparse-support:k={k}"),
            GeneratorSpec::StrictUnimodal { valley, profile } => {
                write!(f, "strict-unimodal:")?;
                if let Some(v) = valley {
                    write!(f, "valley={v},")?;
                }
                match profile {
                    UnimodalProfile::Linear => write!(f, "profile=linear"),
                    UnimodalProfile::Random => write!(f, "profile=random"),
                }
            }
        }
    }
}

/// Number of leading singleton intervals in the decreasing partition used by
/// the sum estimator for `epsilon`, capped at `n`.
pub fn singleton_prefix(n: usize, epsilon: f64) -> Result<usize> {
    let p = make_partition(n, refined_epsilon(epsilon)?, Direction::Decreasing)?;
    Ok(p.intervals().iter().take_while(|iv| iv.len() == 1).count())
}

/// Builds the universe described by `spec` over `n` elements. Deterministic in
/// `(spec, n, seed)`.
pub fn generate(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<Universe> {
    if n == 0 {
        return Err(Error::Generator("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = match *spec {
        GeneratorSpec::Constant { c } => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::Generator(format!("constant level must be positive, got {c}")));
            }
            vec![c; n]
        }
        GeneratorSpec::PowerLaw { exponent } => {
            if !(exponent >= 0.0 && exponent.is_finite()) {
                return Err(Error::Generator(format!("exponent must be >= 0, got {exponent}")));
            }
            (1..=n).map(|i| (i as f64).powf(-exponent)).collect()
        }
        GeneratorSpec::Step { levels } => {
            if levels == 0 || levels > n {
                return Err(Error::Generator(format!("step needs 1 <= levels <= n, got {levels}")));
            }
            let mut w = vec![0.0; n];
            for b in 0..levels {
                let lo = b * n / levels;
                let hi = (b + 1) * n / levels;
                w[lo..hi].fill((levels - b) as f64);
            }
            w
        }
        GeneratorSpec::BirgeFlat { epsilon, valley } => birge_flat(n, epsilon, valley)?,
        GeneratorSpec::SparseSupport { k } => {
            if k == 0 || 2 * k > n {
                return Err(Error::Generator(format!(
                    "sparse-support needs 1 <= k <= n/2, got k={k}, n={n}"
                )));
            }
            let mut w = vec![0.0; n];
            for pos in index::sample(&mut rng, n, k).into_iter() {
                w[pos] = rng.gen_range(1.0..=2.0);
            }
            w
        }
        GeneratorSpec::StrictUnimodal { valley, profile } => {
            let v = match valley {
                Some(v) if v == 0 || v > n => {
                    return Err(Error::Generator(format!("valley {v} outside 1..={n}")))
                }
                Some(v) => v,
                None => match profile {
                    UnimodalProfile::Linear => (n / 2).max(1),
                    UnimodalProfile::Random => rng.gen_range(1..=n),
                },
            };
            match profile {
                UnimodalProfile::Linear => (1..=n).map(|i| i.abs_diff(v) as f64 + 1.0).collect(),
                UnimodalProfile::Random => {
                    let mut w = vec![0.0; n];
                    w[v - 1] = rng.gen_range(1.0..2.0);
                    for i in (0..v - 1).rev() {
                        w[i] = w[i + 1] + rng.gen_range(0.5..1.5);
                    }
                    for i in v..n {
                        w[i] = w[i - 1] + rng.gen_range(0.5..1.5);
                    }
                    w
                }
            }
        }
    };
    Universe::new(weights)
}

fn birge_flat(n: usize, epsilon: f64, valley: Option<Valley>) -> Result<Vec<f64>> {
    let eps1 = refined_epsilon(epsilon)?;
    let Some(valley) = valley else {
        let p = make_partition(n, eps1, Direction::Decreasing)?;
        let ell = p.len();
        let mut w = vec![0.0; n];
        for (j, iv) in p.intervals().iter().enumerate() {
            w[iv.lo() - 1..iv.hi()].fill((ell - j) as f64);
        }
        return Ok(w);
    };
    let m = match valley {
        Valley::Auto => singleton_prefix(n, epsilon)?.clamp(1, n),
        Valley::At(m) if m == 0 || m > n => {
            return Err(Error::Generator(format!("valley {m} outside 1..={n}")))
        }
        Valley::At(m) => m,
    };
    let mut w = vec![0.0; n];
    let left = make_partition(m, eps1, Direction::Decreasing)?;
    let a = left.len();
    for (j, iv) in left.intervals().iter().enumerate() {
        w[iv.lo() - 1..iv.hi()].fill((a - j) as f64);
    }
    if m < n {
        let right = make_partition_on(Interval::span(m + 1, n)?, eps1, Direction::Increasing)?;
        for (k, iv) in right.intervals().iter().enumerate() {
            w[iv.lo() - 1..iv.hi()].fill((k + 2) as f64);
        }
    }
    Ok(w)
}

//! The error functional `err_{k,i}(η, c) = E|aver(η, c) - i/2^k|` and its
//! minimum over a `may` enumeration.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::bitstream::Bitstream;
use crate::condition::Condition;
use crate::creature::Creature;
use crate::error::{Error, Result};
use crate::extension::{may_candidates, SearchSpace};
use crate::scalar::{dyadic, format_rational, rational_to_f64, Scalar};
use crate::sequence::SequenceSource;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrMode {
    /// Deterministic sources only.
    Exact,
    /// Exact expectation over every assignment of the dependency window.
    Enumerate { max_bits: usize },
    /// Monte Carlo mean over `samples` bitstreams derived from `seed`.
    Estimate { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ErrValue {
    Exact(Rational),
    Enumerated(Rational),
    Estimated { mean: f64, samples: u64 },
}

impl ErrValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            ErrValue::Exact(r) | ErrValue::Enumerated(r) => rational_to_f64(r),
            ErrValue::Estimated { mean, .. } => *mean,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            ErrValue::Exact(r) | ErrValue::Enumerated(r) => Some(r),
            ErrValue::Estimated { .. } => None,
        }
    }

    pub fn provenance(&self) -> &'static str {
        match self {
            ErrValue::Exact(_) => "exact",
            ErrValue::Enumerated(_) => "enumerated",
            ErrValue::Estimated { .. } => "estimated",
        }
    }

    /// Exact comparison when both sides are exact, otherwise by value.
    pub fn cmp_value(&self, other: &ErrValue) -> Ordering {
        match (self.exact(), other.exact()) {
            (Some(a), Some(b)) => a.cmp(b),
            _ => self.to_f64().partial_cmp(&other.to_f64()).unwrap_or(Ordering::Equal),
        }
    }
}

impl fmt::Display for ErrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrValue::Exact(r) | ErrValue::Enumerated(r) => write!(f, "{} ({})", format_rational(r), self.provenance()),
            ErrValue::Estimated { mean, samples } => write!(f, "{mean:.6} (estimated, n={samples})"),
        }
    }
}

fn check_grid_index(k: u32, i: u64) -> Result<()> {
    if k >= 63 || i > 1u64 << k {
        return Err(Error::Param(format!("grid index {i} exceeds 2^{k}")));
    }
    Ok(())
}

/// `|aver(η, c) - i/2^k|` for a fixed sequence, in any scalar.
pub fn err_fixed<T: Scalar>(eta: impl Fn(usize) -> bool, k: u32, i: u64, c: &Creature) -> T {
    let a: T = c.aver_with(eta);
    let t = T::dyadic(i, k);
    if a >= t {
        a - t
    } else {
        t - a
    }
}

pub fn err(source: &SequenceSource, k: u32, i: u64, c: &Creature, mode: ErrMode) -> Result<ErrValue> {
    check_grid_index(k, i)?;
    if !source.is_random() {
        let v: Rational = err_fixed(|j| source.eval(j as u64).expect("deterministic source"), k, i, c);
        return Ok(ErrValue::Exact(v));
    }
    match mode {
        ErrMode::Exact => Err(Error::Param(format!("source `{}` is a random name; exact mode needs a fixed sequence", source.name))),
        ErrMode::Enumerate { max_bits } => err_enumerated(source, k, i, c, max_bits).map(ErrValue::Enumerated),
        ErrMode::Estimate { samples, seed } => {
            if samples == 0 {
                return Err(Error::Param("samples must be at least 1".into()));
            }
            let mean = err_sampled::<f64>(source, k, i, c, samples, seed);
            Ok(ErrValue::Estimated { mean, samples })
        }
    }
}

/// Exact expectation over all `2^|W|` assignments of the dependency window.
pub fn err_enumerated(source: &SequenceSource, k: u32, i: u64, c: &Creature, max_bits: usize) -> Result<Rational> {
    let window: Vec<u64> = source.dependency_window_of(c.support().into_iter().map(|j| j as u64))?.into_iter().collect();
    if window.len() > max_bits || window.len() >= 63 {
        return Err(Error::WindowTooLarge { bits: window.len(), bound: max_bits });
    }
    let total = 1u64 << window.len();
    let target = dyadic(i, k);
    let sum = (0..total)
        .into_par_iter()
        .map(|assignment| {
            let bit = |p: u64| {
                let idx = window.binary_search(&p).expect("position inside window");
                assignment >> idx & 1 == 1
            };
            let a: Rational = c.aver_with(|j| source.eval_on(j as u64, &bit).expect("random name"));
            (a - &target).abs()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Rational::zero(), |acc, v| acc + v);
    Ok(sum / Rational::from_integer(BigInt::from(total)))
}

/// Monte Carlo mean in scalar `T`; sample `s` reads `Bitstream::for_sample(seed, s)`.
pub fn err_sampled<T: Scalar>(source: &SequenceSource, k: u32, i: u64, c: &Creature, samples: u64, seed: u64) -> f64 {
    let vals: Vec<T> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let stream = Bitstream::for_sample(seed, s);
            let bit = |p: u64| stream.bit(p);
            err_fixed::<T>(|j| source.eval_on(j as u64, &bit).expect("random name"), k, i, c)
        })
        .collect();
    let total = vals.into_iter().fold(T::zero(), |acc, v| acc + v);
    total.to_f64_lossy() / samples as f64
}

/// `𝔢^ℓ_{k,i}(q)`: the minimum of `err` over the first `budget` elements of
/// `may_ℓ(q)`, with the first minimizer in enumeration order.
pub fn eee(
    q: &Condition,
    source: &SequenceSource,
    k: u32,
    i: u64,
    ell: usize,
    search: &SearchSpace,
    mode: ErrMode,
) -> Result<(ErrValue, Creature)> {
    let cands = may_candidates(q, ell, search)?;
    let mut best: Option<(ErrValue, Creature)> = None;
    for cand in cands {
        let v = err(source, k, i, &cand.creature, mode)?;
        let better = match &best {
            None => true,
            Some((b, _)) => v.cmp_value(b) == Ordering::Less,
        };
        if better {
            best = Some((v, cand.creature));
        }
    }
    best.ok_or_else(|| Error::EmptySearch("may enumeration is empty".into()))
}

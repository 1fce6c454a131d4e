//! Evaluation of a source over `[0, horizon)` for every candidate in a pass.
//!
//! Deterministic sources have one path. Random names with short adapter
//! windows get exact laws; others share sampled paths, so comparisons use
//! common random numbers.

use rayon::prelude::*;

use crate::bitstream::Bitstream;
use crate::creature::{compose, Creature};
use crate::error::{Error, Result};
use crate::extension::to_weights;
use crate::scalar::{rational_to_f64, Scalar};
use crate::sequence::{Adapter, SequenceSource};
use crate::synthesis::law::{self, interacts, mix, Law};
use crate::Rational;

#[derive(Debug, Clone)]
pub struct PathSampler {
    paths: Vec<Vec<bool>>,
    horizon: usize,
    random: bool,
    exact: Option<(Adapter, u64)>,
}

impl PathSampler {
    /// One path for a deterministic source; exact laws for a random name
    /// with a short window, `samples` paths otherwise.
    pub fn new(source: &SequenceSource, horizon: usize, samples: u64, seed: u64) -> Result<Self> {
        if let Some(a) = source.adapter() {
            if let Some(d) = law::window(a) {
                return Ok(Self { paths: Vec::new(), horizon, random: true, exact: Some((a.clone(), d)) });
            }
        }
        Self::sampled(source, horizon, samples, seed)
    }

    /// Sampled paths even where an exact law is available.
    pub fn sampled(source: &SequenceSource, horizon: usize, samples: u64, seed: u64) -> Result<Self> {
        if !source.is_random() {
            return Ok(Self { paths: vec![source.prefix(horizon)?], horizon, random: false, exact: None });
        }
        if samples == 0 {
            return Err(Error::Param("samples must be at least 1".into()));
        }
        let paths = (0..samples)
            .into_par_iter()
            .map(|s| source.values_on(&Bitstream::for_sample(seed, s), horizon))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { paths, horizon, random: true, exact: None })
    }

    /// Number of paths; zero when laws are exact.
    pub fn samples(&self) -> usize {
        self.paths.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn law(&self, c: &Creature) -> Result<Law> {
        let (a, _) = self.exact.as_ref().ok_or_else(|| Error::Param("sampler has no exact laws".into()))?;
        if c.max_support() >= self.horizon {
            return Err(Error::EtaTooShort { have: self.horizon, need: c.max_support() });
        }
        law::law(a, c).ok_or_else(|| Error::Param(format!("denominators of {c} are too large for an exact law")))
    }

    /// `E|aver - x|` for `Σ (nums_i / den) rows_i`, given the rows' laws.
    pub fn mixed_law_err(&self, rows: &[Creature], laws: &[&Law], nums: &[u64], den: u64, x: f64) -> Result<f64> {
        let (_, d) = self.exact.as_ref().ok_or_else(|| Error::Param("sampler has no exact laws".into()))?;
        let live: Vec<usize> = (0..nums.len()).filter(|&t| nums[t] > 0).collect();
        if live.len() == 1 {
            return Ok(laws[live[0]].err(x));
        }
        let independent = live.windows(2).all(|w| !interacts(laws[w[0]], laws[w[1]], *d));
        let mixed = if independent { mix(laws, nums, den) } else { None };
        match mixed {
            Some(l) => Ok(l.err(x)),
            None => Ok(self.law(&compose(rows, &to_weights(nums, den))?)?.err(x)),
        }
    }

    pub fn is_random(&self) -> bool {
        self.random
    }

    pub fn path(&self, s: usize) -> &[bool] {
        &self.paths[s]
    }

    /// Smallest difference between estimates treated as meaningful when the
    /// least of `candidates` estimates is taken: zero for a fixed sequence,
    /// otherwise the standard-error bound `1/(2√n)` scaled by `√(2 ln m)`.
    pub fn resolution(&self, candidates: usize) -> f64 {
        if self.random && self.exact.is_none() {
            (2.0 * (candidates.max(2) as f64).ln()).sqrt() * 0.5 / (self.paths.len() as f64).sqrt()
        } else {
            0.0
        }
    }

    /// `aver(η_s, c)` for every sample path `s`.
    pub fn avers<T: Scalar>(&self, c: &Creature) -> Result<Vec<T>> {
        let need = c.max_support();
        if need >= self.horizon {
            return Err(Error::EtaTooShort { have: self.horizon, need });
        }
        let w: Vec<(usize, T)> = c.entries().iter().map(|(k, v)| (*k, T::from_rational(v))).collect();
        Ok(self
            .paths
            .iter()
            .map(|p| w.iter().filter(|(k, _)| p[*k]).fold(T::zero(), |acc, (_, v)| acc + v.clone()))
            .collect())
    }

    /// `aver` in `f64` without the generic dispatch.
    pub fn avers_f64(&self, c: &Creature) -> Vec<f64> {
        let w: Vec<(usize, f64)> = c.entries().iter().map(|(k, v)| (*k, rational_to_f64(v))).collect();
        self.paths.iter().map(|p| w.iter().filter(|(k, _)| p[*k]).map(|(_, v)| v).sum()).collect()
    }
}

/// Mean of `|Σ_j d_j a_j[s] - x|` over samples `s`, for per-part averages `a_j`.
pub fn mixed_err(parts: &[&[f64]], weights: &[f64], x: f64) -> f64 {
    let n = parts[0].len();
    let mut total = 0.0;
    for s in 0..n {
        let mut v = 0.0;
        for (a, d) in parts.iter().zip(weights) {
            v += d * a[s];
        }
        total += (v - x).abs();
    }
    total / n as f64
}

pub fn as_f64(r: &Rational) -> f64 {
    rational_to_f64(r)
}

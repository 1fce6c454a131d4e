use std::fmt;

use crate::error::{Error, Result};
use crate::extension::SearchSpace;
use crate::scalar::dyadic;
use crate::Rational;

/// Parameters of a synthesis run.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SynthesisSchedule {
    pub k_star: u32,
    pub k_max: u32,
    pub search: SearchSpace,
    pub samples: u64,
    pub seed: u64,
    /// Number of consecutive stage values that must agree within `1/ℓ`.
    pub window: usize,
    /// New rows are built only from stages starting below this position.
    pub stage_limit: usize,
}

impl SynthesisSchedule {
    pub fn new(k_star: u32, k_max: u32, horizon: usize, budget: usize, samples: u64, seed: u64) -> Self {
        Self {
            k_star,
            k_max,
            search: SearchSpace { horizon, max_block: 2, weight_den: 2, budget },
            samples,
            seed,
            window: 3,
            stage_limit: horizon / 2,
        }
    }

    pub fn horizon(&self) -> usize {
        self.search.horizon
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<u32> {
        self.k_star..=self.k_max
    }

    /// `ε_k = 3/2^k`.
    pub fn eps(k: u32) -> Rational {
        dyadic(3, k)
    }

    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        if self.k_star > self.k_max {
            return Err(Error::Param(format!("k* = {} exceeds k_max = {}", self.k_star, self.k_max)));
        }
        if self.k_max > 30 {
            return Err(Error::Param(format!("k_max = {} is too large", self.k_max)));
        }
        if self.samples == 0 || self.window == 0 {
            return Err(Error::Param("samples and window must be positive".into()));
        }
        if self.stage_limit > self.horizon() {
            return Err(Error::Param("stage limit beyond horizon".into()));
        }
        Ok(())
    }
}

impl fmt::Display for SynthesisSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k_star={},k_max={},{},samples={},seed={},window={},stage_limit={}",
            self.k_star, self.k_max, self.search, self.samples, self.seed, self.window, self.stage_limit
        )
    }
}

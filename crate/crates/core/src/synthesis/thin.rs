//! Thinning so that row `ℓ` of `q(k)` is a former row `ℓ̂` with
//! `2^{2k+2}/ℓ̂ ≤ 1/ℓ!`.

use crate::condition::{find_leq_witness, Condition};
use crate::creature::Creature;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ThinOutcome {
    pub cond: Condition,
    /// Rows `0..certified` meet the factorial bound (or are below it).
    pub certified: usize,
    /// `relabel[j] = (ℓ, ℓ̂)` for each thinned row.
    pub relabel: Vec<(usize, usize)>,
    pub guaranteed_until: usize,
}

/// `⌈2^{2k+2} ℓ!⌉`, or `None` past `u128`.
pub fn factorial_target(k: u32, ell: usize) -> Option<u128> {
    let mut v: u128 = 1u128.checked_shl(2 * k + 2)?;
    for j in 2..=ell as u128 {
        v = v.checked_mul(j)?;
    }
    Some(v)
}

/// First row index subject to thinning: rows `ℓ ≤ max(k, 1)` and the trunk
/// plus `k` rows stay.
pub fn first_thinned(trunk_len: usize, k: u32) -> usize {
    (trunk_len + k as usize + 1).max(k.max(1) as usize + 1)
}

pub fn thin_factorial(q: &Condition, k: u32, guaranteed_until: usize, horizon: usize) -> Result<ThinOutcome> {
    let rows = q.rows_below(horizon);
    let available = rows.iter().take_while(|c| c.mup() <= guaranteed_until).count();
    let base = first_thinned(q.trunk_len(), k);
    if available <= base {
        return Err(Error::Exhausted(format!(
            "thinning at level {k}: only {available} constructed rows below position {guaranteed_until}, need more than {base}"
        )));
    }
    let mut out: Vec<Creature> = rows[..base].to_vec();
    let mut relabel = Vec::new();
    let mut prev = base - 1;
    let mut ell = base;
    while let Some(t) = factorial_target(k, ell) {
        let target = (prev as u128 + 1).max(t);
        if target >= available as u128 {
            break;
        }
        let target = target as usize;
        let last = out.pop().expect("base rows exist");
        out.push(last.pad_with_zeroes(rows[target].mdn())?);
        out.push(rows[target].clone());
        relabel.push((ell, target));
        prev = target;
        ell += 1;
    }
    let certified = out.len();
    out.extend_from_slice(&rows[prev + 1..]);
    if rows.len() < q.explicit_len() {
        out.extend_from_slice(&q.rows()[rows.len()..]);
    }
    let cond = Condition::with_start(q.trunk_len(), q.start(), out)?;
    if find_leq_witness(q, &cond).is_none() {
        return Err(Error::Witness("thinned condition is not above its input".into()));
    }
    Ok(ThinOutcome { cond, certified, relabel, guaranteed_until })
}

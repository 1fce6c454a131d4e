//! Finite extension spaces: `Σ(S)`, `pos*`, `pos`, and the `may_k` spaces.
//!
//! Every enumeration is relative to a [`SearchSpace`]: weights are multiples of
//! `1 / weight_den`, blocks have at most `max_block` rows and end below
//! `horizon`, and at most `budget` elements are produced.

use num_bigint::BigInt;

use crate::condition::Condition;
use crate::creature::{compose, Creature};
use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SearchSpace {
    pub horizon: usize,
    pub max_block: usize,
    pub weight_den: u64,
    pub budget: usize,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.max_block == 0 || self.weight_den == 0 || self.budget == 0 {
            return Err(Error::Param(format!("search space has a zero parameter: {self}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "horizon={},max_block={},weight_den={},budget={}",
            self.horizon, self.max_block, self.weight_den, self.budget
        )
    }
}

/// Numerators `a` in `0..=den` such that `a/den` is an admissible weight for `c`.
pub fn admissible_numerators(c: &Creature, den: u64) -> Vec<u64> {
    (0..=den)
        .filter(|&a| a == 0 || c.admits_weight(&Rational::new(BigInt::from(a), BigInt::from(den))))
        .collect()
}

/// All admissible numerator vectors over `parts` summing to `den`, in
/// lexicographic order.
pub fn weight_vectors(parts: &[Creature], den: u64) -> Vec<Vec<u64>> {
    let allowed: Vec<Vec<u64>> = parts.iter().map(|c| admissible_numerators(c, den)).collect();
    weight_vectors_from(&allowed, den)
}

/// Like [`weight_vectors`], from precomputed per-part admissible numerators.
pub fn weight_vectors_from(allowed: &[Vec<u64>], den: u64) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(allowed.len());
    fill(allowed, den, &mut cur, &mut out);
    out
}

fn fill(allowed: &[Vec<u64>], left: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    let i = cur.len();
    if i + 1 == allowed.len() {
        if allowed[i].binary_search(&left).is_ok() {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
        }
        return;
    }
    for &a in allowed[i].iter().take_while(|&&a| a <= left) {
        cur.push(a);
        fill(allowed, left - a, cur, out);
        cur.pop();
    }
}

pub fn to_weights(numerators: &[u64], den: u64) -> Vec<Rational> {
    numerators.iter().map(|&a| Rational::new(BigInt::from(a), BigInt::from(den))).collect()
}

/// `Σ(S)` over the weight grid `1/den`.
pub fn sigma(parts: &[Creature], den: u64) -> Result<Vec<Creature>> {
    if parts.is_empty() {
        return Err(Error::EmptySearch("Σ of an empty set".into()));
    }
    weight_vectors(parts, den).iter().map(|a| compose(parts, &to_weights(a, den))).collect()
}

/// `pos*(w, S)`: `w` extended by one element of `Σ(S)`.
pub fn pos_star(w: &[Creature], parts: &[Creature], den: u64) -> Result<Vec<Vec<Creature>>> {
    Ok(sigma(parts, den)?
        .into_iter()
        .map(|c| {
            let mut u = w.to_vec();
            u.push(c);
            u
        })
        .collect())
}

/// Cut points of every split of `0..n` into consecutive non-empty intervals,
/// in lexicographic order of the cut sets.
fn interval_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << (n - 1)) {
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|j| mask >> (j - 1) & 1 == 1));
        cuts.push(n);
        out.push(cuts);
    }
    out.sort();
    out
}

/// `pos(w, S)`: iterated `pos*` over the splits of `S` into consecutive
/// intervals `S_0, ..., S_{m-1}`.
pub fn pos(w: &[Creature], parts: &[Creature], den: u64) -> Result<Vec<Vec<Creature>>> {
    if parts.is_empty() {
        return Err(Error::EmptySearch("pos of an empty set".into()));
    }
    if parts.len() > 20 {
        return Err(Error::Param(format!("{} creatures is too many to partition", parts.len())));
    }
    let mut out = Vec::new();
    for cuts in interval_partitions(parts.len()) {
        let mut acc = vec![w.to_vec()];
        for seg in cuts.windows(2) {
            let choices = sigma(&parts[seg[0]..seg[1]], den)?;
            acc = acc
                .into_iter()
                .flat_map(|u| {
                    choices.iter().map(move |c| {
                        let mut v = u.clone();
                        v.push(c.clone());
                        v
                    })
                })
                .collect();
        }
        out.extend(acc);
    }
    Ok(out)
}

/// `|pos(w, S)|` without materializing the extensions.
pub fn pos_count(parts: &[Creature], den: u64) -> Result<u128> {
    if parts.is_empty() {
        return Err(Error::EmptySearch("pos of an empty set".into()));
    }
    let n = parts.len();
    // sizes[a][b] = |Σ(S[a..b])|
    let mut sizes = vec![vec![0u128; n + 1]; n + 1];
    for a in 0..n {
        for b in a + 1..=n {
            sizes[a][b] = weight_vectors(&parts[a..b], den).len() as u128;
        }
    }
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for b in 1..=n {
        ways[b] = (0..b).map(|a| ways[a].saturating_mul(sizes[a][b])).fold(0u128, u128::saturating_add);
    }
    Ok(ways[n])
}

/// One element of a `may` enumeration, with the block it was composed from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    /// Row index (in the underlying condition) of the first part.
    pub start: usize,
    pub weights: Vec<u64>,
    pub creature: Creature,
}

impl Candidate {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn end(&self) -> usize {
        self.start + self.weights.len()
    }
}

/// Lazy enumeration of compositions of consecutive blocks of `rows` with
/// block start `≥ from`, ordered by `(start, length, weight numerators)`.
pub struct BlockIter<'a> {
    rows: &'a [Creature],
    den: u64,
    max_block: usize,
    start: usize,
    len: usize,
    pending: std::vec::IntoIter<Vec<u64>>,
}

impl<'a> BlockIter<'a> {
    pub fn new(rows: &'a [Creature], from: usize, search: &SearchSpace) -> Self {
        Self {
            rows,
            den: search.weight_den,
            max_block: search.max_block,
            start: from,
            len: 0,
            pending: Vec::new().into_iter(),
        }
    }
}

impl Iterator for BlockIter<'_> {
    type Item = Candidate;

    fn next(&mut self) -> Option<Candidate> {
        loop {
            if let Some(a) = self.pending.next() {
                let parts = &self.rows[self.start..self.start + self.len];
                let creature = compose(parts, &to_weights(&a, self.den)).expect("admissible weights compose");
                return Some(Candidate { start: self.start, weights: a, creature });
            }
            if self.start >= self.rows.len() {
                return None;
            }
            if self.len < self.max_block && self.start + self.len < self.rows.len() {
                self.len += 1;
            } else {
                self.start += 1;
                self.len = 1;
                if self.start >= self.rows.len() {
                    return None;
                }
            }
            let parts = &self.rows[self.start..self.start + self.len];
            self.pending = weight_vectors(parts, self.den).into_iter();
        }
    }
}

/// Rows of `p` available to `may`: explicit rows then tail, all ending at or
/// below `horizon`.
pub fn may_rows(p: &Condition, horizon: usize) -> Vec<Creature> {
    p.rows_below(horizon)
}

/// The first `budget` elements of `may_k(p)` within `search`.
pub fn may(p: &Condition, k: usize, search: &SearchSpace) -> Result<Vec<Creature>> {
    Ok(may_candidates(p, k, search)?.into_iter().map(|c| c.creature).collect())
}

pub fn may_candidates(p: &Condition, k: usize, search: &SearchSpace) -> Result<Vec<Candidate>> {
    search.validate()?;
    let rows = may_rows(p, search.horizon);
    let from = p.trunk_len() + k;
    if from >= rows.len() {
        return Err(Error::EmptySearch(format!(
            "row {from} of the condition does not end below horizon {}",
            search.horizon
        )));
    }
    Ok(BlockIter::new(&rows, from, search).take(search.budget).collect())
}

//! Continuous reading of names on a bounded universe.
//!
//! A name is read off the trunk: a finite list of creatures. A condition
//! forces a value when every full extension of its trunk through its rows up
//! to the horizon decides that value. Names here depend only on the domains of
//! the trunk creatures, so forcing does not depend on the weight grid.

use std::fmt;
use std::str::FromStr;

use crate::condition::{find_leq_witness, restrict, Condition};
use crate::creature::Creature;
use crate::error::{Error, Result};
use crate::extension::{pos, pos_count};

/// A name `τ(m)` evaluated on trunks. Once decided on a trunk it must be
/// decided identically on every extension.
pub trait NameOracle {
    fn index(&self) -> usize;
    fn decide(&self, trunk: &[Creature]) -> Option<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    /// `mdn` of trunk creature `j`.
    Mdn(usize),
    /// `mup` of trunk creature `j`.
    Mup(usize),
    /// Number of trunk creatures ending at or below `x`, once the trunk reaches `x`.
    CountBelow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrunkReader {
    pub index: usize,
    pub reading: Reading,
}

impl NameOracle for TrunkReader {
    fn index(&self) -> usize {
        self.index
    }

    fn decide(&self, trunk: &[Creature]) -> Option<u64> {
        match self.reading {
            Reading::Mdn(j) => trunk.get(j).map(|c| c.mdn() as u64),
            Reading::Mup(j) => trunk.get(j).map(|c| c.mup() as u64),
            Reading::CountBelow(x) => {
                let end = trunk.last()?.mup();
                (end >= x).then(|| trunk.iter().filter(|c| c.mup() <= x).count() as u64)
            }
        }
    }
}

impl fmt::Display for TrunkReader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, arg) = match self.reading {
            Reading::Mdn(j) => ("mdn", j),
            Reading::Mup(j) => ("mup", j),
            Reading::CountBelow(x) => ("count", x),
        };
        write!(f, "{}:{kind}:{arg}", self.index)
    }
}

/// Parses `index:kind:arg` with kind one of `mdn`, `mup`, `count`.
impl FromStr for TrunkReader {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Param(format!("name `{s}` is not index:mdn|mup|count:arg"));
        let mut it = s.split(':');
        let (Some(i), Some(kind), Some(arg), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(bad());
        };
        let index = i.trim().parse().map_err(|_| bad())?;
        let arg = arg.trim().parse().map_err(|_| bad())?;
        let reading = match kind.trim() {
            "mdn" => Reading::Mdn(arg),
            "mup" => Reading::Mup(arg),
            "count" => Reading::CountBelow(arg),
            _ => return Err(bad()),
        };
        Ok(Self { index, reading })
    }
}

/// Bounds of the finite universe: rows end at or below `horizon`, weights are
/// multiples of `1 / den`, and no `pos` set may exceed `bound` elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Universe {
    pub horizon: usize,
    pub den: u64,
    pub bound: usize,
}

fn extensions(w: &[Creature], rows: &[Creature], u: &Universe) -> Result<Vec<Vec<Creature>>> {
    if rows.is_empty() {
        return Ok(vec![w.to_vec()]);
    }
    let n = pos_count(rows, u.den)?;
    if n > u.bound as u128 {
        return Err(Error::Exhausted(format!("|pos| = {n} exceeds the universe bound {}", u.bound)));
    }
    pos(w, rows, u.den)
}

/// The value `(w, rows)` forces on `name`, if any.
pub fn forced(name: &dyn NameOracle, w: &[Creature], rows: &[Creature], u: &Universe) -> Result<Option<u64>> {
    let mut value = None;
    for t in extensions(w, rows, u)? {
        match (name.decide(&t), value) {
            (None, _) => return Ok(None),
            (Some(v), None) => value = Some(v),
            (Some(v), Some(prev)) if v != prev => return Ok(None),
            _ => {}
        }
    }
    Ok(value)
}

fn split(c: &Condition, horizon: usize) -> (Vec<Creature>, Vec<Creature>, Vec<Creature>) {
    let n = c.trunk_len();
    let below = c.rows_below(horizon);
    let body: Vec<Creature> = below.get(n..).map(<[Creature]>::to_vec).unwrap_or_default();
    let end = below.last().map_or(c.start(), Creature::mup);
    let beyond = c.rows().iter().filter(|r| r.mdn() >= end).cloned().collect();
    (c.trunk().to_vec(), body, beyond)
}

fn reach(w: &[Creature], s: &[Creature], start: usize) -> usize {
    s.last().or(w.last()).map_or(start, Creature::mup)
}

/// Builds `q ≥₀ p` whose rows `s_0, s_1, ...` below the horizon satisfy: for
/// every `w ∈ pos(w^p, s_0, ..., s_{n-1})` and every name with index at most
/// `mup(s_{n-1})`, if some `r ≥₀ (w, s_n, ...)` forces a value then
/// `(w, s_n, ...)` already does.
///
/// Fails with [`Error::Exhausted`] when a `pos` set exceeds the bound or a
/// name is left undecided by some full extension of the trunk of `p`.
pub fn fuse_deciding(p: &Condition, names: &[&dyn NameOracle], u: &Universe) -> Result<Condition> {
    let (w, mut tail, beyond) = split(p, u.horizon);
    let start = tail.first().map_or(p.tail_start(), Creature::mdn);
    for t in extensions(&w, &tail, u)? {
        if let Some(name) = names.iter().find(|n| n.decide(&t).is_none()) {
            return Err(Error::Exhausted(format!("name {} is undecided below horizon {}", name.index(), u.horizon)));
        }
    }
    let mut order: Vec<&dyn NameOracle> = names.to_vec();
    order.sort_by_key(|n| n.index());
    let mut s: Vec<Creature> = Vec::new();
    while !tail.is_empty() {
        let m_max = reach(&w, &s, start);
        let trunks = if s.is_empty() { vec![w.clone()] } else { pos(&w, &s, u.den)? };
        for t in &trunks {
            for name in order.iter().take_while(|n| n.index() <= m_max) {
                if forced(*name, t, &tail, u)?.is_some() {
                    continue;
                }
                for cand in extensions(&[], &tail, u)? {
                    if forced(*name, t, &cand, u)?.is_some() {
                        tail = cand;
                        break;
                    }
                }
            }
        }
        s.push(tail.remove(0));
    }
    let mut rows = w;
    rows.extend(s);
    rows.extend(beyond);
    Condition::with_start(p.trunk_len(), p.start(), rows)
}

/// Outcome of the approximation check for one `(n, m)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approximation {
    pub n: usize,
    pub m: usize,
    /// Extensions `r ≥ q` that force a value to the name.
    pub forcing: usize,
    /// Of those, how many have `r^{q,n}` forcing something else or nothing.
    pub failures: usize,
}

impl Approximation {
    pub fn holds(&self) -> bool {
        self.failures == 0
    }
}

/// Brute-force check that `q` approximates each name `τ(m)` at `s_n` for
/// every `n` and `m ≤ mup(s_{n-1})`, over every `r ≥ q` in the universe.
pub fn check_approximation(q: &Condition, names: &[&dyn NameOracle], u: &Universe) -> Result<Vec<Approximation>> {
    let (w, s, beyond) = split(q, u.horizon);
    let start = s.first().map_or(q.tail_start(), Creature::mdn);
    let mut out: Vec<Approximation> = Vec::new();
    for n in 0..s.len() {
        let m_max = reach(&w, &s[..n], start);
        for name in names.iter().filter(|x| x.index() <= m_max) {
            out.push(Approximation { n, m: name.index(), forcing: 0, failures: 0 });
        }
    }
    for j in 0..=s.len() {
        let trunks = if j == 0 { vec![w.clone()] } else { pos(&w, &s[..j], u.den)? };
        for wr in &trunks {
            for body in extensions(&[], &s[j..], u)? {
                let forcing: Vec<(usize, u64)> = names
                    .iter()
                    .enumerate()
                    .filter_map(|(i, x)| forced(*x, wr, &body, u).transpose().map(|v| v.map(|v| (i, v))))
                    .collect::<Result<_>>()?;
                if forcing.is_empty() {
                    continue;
                }
                let mut rows = wr.clone();
                rows.extend(body.iter().cloned());
                rows.extend(beyond.iter().cloned());
                let r = Condition::with_start(wr.len(), q.start(), rows)?;
                let wit = find_leq_witness(q, &r)
                    .ok_or_else(|| Error::Witness("extension is not above the fused condition".into()))?;
                let mut k = 0;
                for n in 0..s.len() {
                    let restricted = restrict(&r, q, n, &wit)?;
                    let (rw, rbody, _) = split(&restricted, u.horizon);
                    let m_max = reach(&w, &s[..n], start);
                    for (i, x) in names.iter().enumerate() {
                        if x.index() > m_max {
                            continue;
                        }
                        let slot = &mut out[k];
                        k += 1;
                        let Some(&(_, v)) = forcing.iter().find(|f| f.0 == i) else { continue };
                        slot.forcing += 1;
                        if forced(*x, &rw, &rbody, u)? != Some(v) {
                            slot.failures += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

//! Creatures: finitely supported probability rows on the factorial grid.
//!
//! A creature `c` lives on `[mdn, mup)`, every entry satisfies
//! `c(k) * k! ∈ ℤ`, and the entries sum to exactly one. Only nonzero entries
//! are stored, so `mdn` may sit strictly below the smallest support point.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Scalar};
use crate::Rational;

/// Whether `den` divides `k!`.
pub fn divides_factorial(den: &BigInt, k: usize) -> bool {
    if den.is_one() {
        return true;
    }
    if let Some(d) = den.to_usize() {
        if d <= k.max(1) {
            return true;
        }
    }
    let mut rest = den.clone();
    for j in 2..=k {
        let g = rest.gcd(&BigInt::from(j));
        if !g.is_one() {
            rest /= g;
            if rest.is_one() {
                return true;
            }
        }
    }
    rest.is_one()
}

/// Whether `value * k!` is an integer, i.e. `value ∈ H(k)` up to range.
pub fn on_grid(value: &Rational, k: usize) -> bool {
    divides_factorial(value.denom(), k)
}

pub fn factorial(k: usize) -> BigInt {
    (2..=k).fold(BigInt::one(), |acc, j| acc * j)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Creature {
    mdn: usize,
    mup: usize,
    entries: BTreeMap<usize, Rational>,
}

impl Creature {
    /// Validates and builds a creature. Explicit zero entries are dropped.
    pub fn new(mdn: usize, mup: usize, entries: impl IntoIterator<Item = (usize, Rational)>) -> Result<Self> {
        if mdn >= mup {
            return Err(Error::BadDomain { mdn, mup });
        }
        let mut map = BTreeMap::new();
        let mut sum = Rational::zero();
        for (k, v) in entries {
            if k < mdn || k >= mup {
                return Err(Error::KeyOutsideDomain { k, mdn, mup });
            }
            if v.is_negative() || v > Rational::one() {
                return Err(Error::EntryOutOfRange { k, value: format_rational(&v) });
            }
            if v.is_zero() {
                continue;
            }
            if !on_grid(&v, k) {
                return Err(Error::GridViolation { k, value: format_rational(&v) });
            }
            sum += &v;
            if map.insert(k, v).is_some() {
                return Err(Error::BadComposition(format!("duplicate key {k}")));
            }
        }
        if map.is_empty() {
            return Err(Error::EmptySupport);
        }
        if !sum.is_one() {
            return Err(Error::SumNotOne(format_rational(&sum)));
        }
        Ok(Self { mdn, mup, entries: map })
    }

    pub fn point_mass(k: usize) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(k, Rational::one());
        Self { mdn: k, mup: k + 1, entries }
    }

    pub fn mdn(&self) -> usize {
        self.mdn
    }

    pub fn mup(&self) -> usize {
        self.mup
    }

    /// The norm of a creature is its left endpoint.
    pub fn norm(&self) -> usize {
        self.mdn
    }

    pub fn entries(&self) -> &BTreeMap<usize, Rational> {
        &self.entries
    }

    pub fn get(&self, k: usize) -> Rational {
        self.entries.get(&k).cloned().unwrap_or_else(Rational::zero)
    }

    /// `w(c)`: the indices with nonzero weight, increasing.
    pub fn support(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }

    pub fn max_support(&self) -> usize {
        *self.entries.keys().next_back().expect("support is non-empty")
    }

    pub fn is_point_mass(&self) -> bool {
        self.entries.len() == 1 && self.mup == self.mdn + 1
    }

    /// `aver(η, c) = Σ_{k ∈ w(c)} c(k) η(k)`, evaluated in any scalar.
    pub fn aver<T: Scalar>(&self, eta: &[bool]) -> Result<T> {
        let need = self.max_support();
        if eta.len() <= need {
            return Err(Error::EtaTooShort { have: eta.len(), need });
        }
        Ok(self.aver_with(|k| eta[k]))
    }

    pub fn aver_with<T: Scalar>(&self, eta: impl Fn(usize) -> bool) -> T {
        self.entries
            .iter()
            .filter(|(k, _)| eta(**k))
            .fold(T::zero(), |acc, (_, v)| acc + T::from_rational(v))
    }

    /// End-extends the domain by zeroes.
    pub fn pad_with_zeroes(&self, new_mup: usize) -> Result<Self> {
        if new_mup < self.mup {
            return Err(Error::PadBelowMup { new_mup, mup: self.mup });
        }
        Ok(Self { mup: new_mup, ..self.clone() })
    }

    /// Extends the domain to the left by zeroes.
    pub fn pad_left(&self, new_mdn: usize) -> Result<Self> {
        if new_mdn > self.mdn {
            return Err(Error::BadDomain { mdn: new_mdn, mup: self.mup });
        }
        Ok(Self { mdn: new_mdn, ..self.clone() })
    }

    /// Whether scaling by `d` keeps every entry on the factorial grid.
    pub fn admits_weight(&self, d: &Rational) -> bool {
        self.entries.iter().all(|(k, v)| on_grid(&(v * d), *k))
    }

    /// `g` such that the admissible weights are exactly the multiples of `1/g`:
    /// the gcd of the integers `c(k) * k!`.
    pub fn weight_granularity(&self) -> BigInt {
        let mut fact = BigInt::one();
        let mut upto = 1usize;
        let mut g = BigInt::zero();
        for (k, v) in &self.entries {
            while upto < *k {
                upto += 1;
                fact *= upto;
            }
            let m = (v * Rational::from_integer(fact.clone())).to_integer();
            g = g.gcd(&m);
        }
        g
    }

    pub fn parse_row(line: &str) -> Result<(usize, Self)> {
        let bad = |msg: &str| Error::Syntax { line: 0, msg: format!("{msg}: `{line}`") };
        let rest = line.trim().strip_prefix("row ").ok_or_else(|| bad("expected `row`"))?;
        let (idx, rest) = rest.split_once(':').ok_or_else(|| bad("expected `row <n>:`"))?;
        let idx: usize = idx.trim().parse().map_err(|_| bad("bad row index"))?;
        let mut words = rest.split_whitespace();
        let field = |w: Option<&str>, key: &str| -> Result<usize> {
            w.and_then(|w| w.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(&format!("expected {key}<int>")))
        };
        let mdn = field(words.next(), "mdn=")?;
        let mup = field(words.next(), "mup=")?;
        let mut entries = Vec::new();
        for w in words {
            let (k, v) = w.split_once(':').ok_or_else(|| bad("expected <k>:<num>/<den>"))?;
            let k: usize = k.parse().map_err(|_| bad("bad entry index"))?;
            let v = parse_rational(v).ok_or_else(|| bad("bad rational"))?;
            entries.push((k, v));
        }
        Ok((idx, Creature::new(mdn, mup, entries)?))
    }

    pub fn format_row(&self, n: usize) -> String {
        format!("row {n}: {self}")
    }
}

impl fmt::Display for Creature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mdn={} mup={}", self.mdn, self.mup)?;
        for (k, v) in &self.entries {
            write!(f, " {k}:{}", format_rational(v))?;
        }
        Ok(())
    }
}

/// Convex combination `Σ d_ℓ c_ℓ` of ordered, domain-disjoint parts.
///
/// `weights[ℓ] = 0` means part `ℓ` is outside `u`; its domain still belongs
/// to the result.
pub fn compose(parts: &[Creature], weights: &[Rational]) -> Result<Creature> {
    if parts.is_empty() || parts.len() != weights.len() {
        return Err(Error::BadComposition(format!("{} parts but {} weights", parts.len(), weights.len())));
    }
    for w in parts.windows(2) {
        if w[0].mup > w[1].mdn {
            return Err(Error::BadComposition(format!(
                "parts overlap or are out of order: [{}, {}) then [{}, {})",
                w[0].mdn, w[0].mup, w[1].mdn, w[1].mup
            )));
        }
    }
    let mut sum = Rational::zero();
    for d in weights {
        if d.is_negative() {
            return Err(Error::BadComposition(format!("negative weight {}", format_rational(d))));
        }
        sum += d;
    }
    if weights.iter().all(Zero::is_zero) {
        return Err(Error::EmptyComposition);
    }
    if !sum.is_one() {
        return Err(Error::WeightSum(format_rational(&sum)));
    }
    let mut entries = BTreeMap::new();
    for (c, d) in parts.iter().zip(weights) {
        if d.is_zero() {
            continue;
        }
        for (k, v) in &c.entries {
            let e = v * d;
            if !on_grid(&e, *k) {
                return Err(Error::GridViolation { k: *k, value: format_rational(&e) });
            }
            entries.insert(*k, e);
        }
    }
    Ok(Creature { mdn: parts[0].mdn, mup: parts[parts.len() - 1].mup, entries })
}

/// Nearest admissible positive weight vector in the max norm, ties broken by
/// the lexicographically smallest vector.
pub fn snap_weights(weights: &[Rational], parts: &[Creature]) -> Result<Vec<Rational>> {
    if weights.len() != parts.len() || parts.is_empty() {
        return Err(Error::BadComposition("weights and parts differ in length".into()));
    }
    if weights.iter().any(|w| !w.is_positive()) {
        return Err(Error::Param("weights must be positive".into()));
    }
    let sum: Rational = weights.iter().sum();
    if !sum.is_one() {
        return Err(Error::WeightSum(format_rational(&sum)));
    }
    if parts.iter().zip(weights).all(|(c, d)| c.admits_weight(d)) {
        return Ok(weights.to_vec());
    }
    let grains: Vec<BigInt> = parts.iter().map(Creature::weight_granularity).collect();
    let min_step = grains.iter().map(|g| Rational::new(BigInt::one(), g.clone())).max().unwrap();
    let mut radius = min_step;
    loop {
        let mut search = SnapSearch { target: weights, grains: &grains, radius: radius.clone(), best: None, nodes: 0 };
        search.dfs(0, &mut Vec::new(), &Rational::zero());
        if let Some((_, v)) = search.best {
            return Ok(v);
        }
        if search.nodes > 5_000_000 {
            return Err(Error::Exhausted("weight snapping search too large".into()));
        }
        if radius >= Rational::one() {
            return Err(Error::NoAdmissibleWeights);
        }
        radius = (radius * Rational::from_integer(2.into())).min(Rational::one());
    }
}

struct SnapSearch<'a> {
    target: &'a [Rational],
    grains: &'a [BigInt],
    radius: Rational,
    best: Option<(Rational, Vec<Rational>)>,
    nodes: u64,
}

impl SnapSearch<'_> {
    fn consider(&mut self, v: Vec<Rational>) {
        let dist = v.iter().zip(self.target).map(|(a, b)| (a - b).abs()).max().unwrap();
        let better = match &self.best {
            None => true,
            Some((d, bv)) => dist < *d || (dist == *d && v < *bv),
        };
        if better {
            self.best = Some((dist, v));
        }
    }

    fn dfs(&mut self, i: usize, chosen: &mut Vec<Rational>, partial: &Rational) {
        self.nodes += 1;
        if self.nodes > 5_000_000 {
            return;
        }
        let n = self.target.len();
        let g = Rational::from_integer(self.grains[i].clone());
        if i == n - 1 {
            let last = Rational::one() - partial;
            if last.is_positive() && (&last * &g).is_integer() && (&last - &self.target[i]).abs() <= self.radius {
                chosen.push(last);
                self.consider(chosen.clone());
                chosen.pop();
            }
            return;
        }
        let lo = (&self.target[i] - &self.radius).max(Rational::zero());
        let hi = (&self.target[i] + &self.radius).min(Rational::one());
        let mut m = (&lo * &g).ceil().to_integer();
        let top = (&hi * &g).floor().to_integer();
        while m <= top {
            let d = Rational::new(m.clone(), self.grains[i].clone());
            m += 1;
            if !d.is_positive() {
                continue;
            }
            let next = partial + &d;
            if next >= Rational::one() {
                break;
            }
            chosen.push(d);
            self.dfs(i + 1, chosen, &next);
            chosen.pop();
        }
    }
}

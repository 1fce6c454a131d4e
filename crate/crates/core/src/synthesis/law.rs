//! Exact law of `aver(f(r), c)` for a random name whose value at `j` reads
//! only `r(j) .. r(j + d)`.
//!
//! Values at positions more than `d` apart read disjoint bits, so the support
//! of `c` splits into independent clusters. Each cluster is a sliding-window
//! recursion over its bits; clusters are combined by convolution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::creature::Creature;
use crate::sequence::Adapter;

/// Widest adapter window handled exactly.
pub const MAX_WINDOW: u64 = 12;
/// Largest common denominator handled exactly.
pub const MAX_DEN: u64 = 1 << 40;

/// Distribution of `aver = value / den` as sorted `(value, probability)` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Law {
    pub den: u64,
    pub atoms: Vec<(u64, f64)>,
    /// Least and greatest support position of the creature.
    pub first: usize,
    pub last: usize,
}

impl Law {
    /// `E|aver - x|`.
    pub fn err(&self, x: f64) -> f64 {
        let d = self.den as f64;
        self.atoms.iter().map(|&(v, p)| p * (v as f64 / d - x).abs()).sum()
    }

    pub fn mean(&self) -> f64 {
        let d = self.den as f64;
        self.atoms.iter().map(|&(v, p)| p * v as f64 / d).sum()
    }
}

/// Largest offset read by the adapter, if small enough for exact laws.
pub fn window(adapter: &Adapter) -> Option<u64> {
    let d = adapter.max_offset();
    (d <= MAX_WINDOW).then_some(d)
}

fn collect(map: BTreeMap<u64, f64>) -> Vec<(u64, f64)> {
    map.into_iter().filter(|(_, p)| *p > 0.0).collect()
}

fn convolve(a: &[(u64, f64)], b: &[(u64, f64)], fa: u64, fb: u64) -> Vec<(u64, f64)> {
    let mut out = BTreeMap::new();
    for &(x, p) in a {
        for &(y, q) in b {
            *out.entry(x * fa + y * fb).or_insert(0.0) += p * q;
        }
    }
    collect(out)
}

/// Law of `Σ n_j f_j(r)` over one cluster of terms sorted by position.
fn cluster_law(adapter: &Adapter, d: u64, terms: &[(u64, u64)]) -> Vec<(u64, f64)> {
    let start = terms[0].0;
    let end = terms[terms.len() - 1].0 + d;
    let full: u64 = (1u64 << (d + 1)) - 1;
    let mut states: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    states.insert((0, 0), 1.0);
    let mut next_term = 0;
    for p in start..=end {
        // the window of position p - d is complete once bit p is placed
        let closing = (p >= start + d && next_term < terms.len() && terms[next_term].0 == p - d).then(|| {
            next_term += 1;
            terms[next_term - 1]
        });
        let mut next = BTreeMap::new();
        for (&(mask, sum), &pr) in &states {
            for b in 0..2u64 {
                let m = ((mask << 1) | b) & full;
                let mut s = sum;
                if let Some((j, n)) = closing {
                    let bit = |q: u64| (m >> (p - q)) & 1 == 1;
                    if adapter.eval(j, &bit) {
                        s += n;
                    }
                }
                *next.entry((m, s)).or_insert(0.0) += pr * 0.5;
            }
        }
        states = next;
    }
    let mut out = BTreeMap::new();
    for ((_, s), p) in states {
        *out.entry(s).or_insert(0.0) += p;
    }
    collect(out)
}

/// Exact law of `aver(f(r), c)`, or `None` when the adapter window or the
/// common denominator of `c` is too large.
pub fn law(adapter: &Adapter, c: &Creature) -> Option<Law> {
    let d = window(adapter)?;
    let den = c.entries().values().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
    let den = den.to_u64().filter(|&v| v <= MAX_DEN)?;
    let terms: Vec<(u64, u64)> = c
        .entries()
        .iter()
        .filter(|(_, v)| v.numer().sign() == num_bigint::Sign::Plus)
        .map(|(&j, v)| (j as u64, (v * BigInt::from(den)).to_integer().to_u64().expect("numerator below den")))
        .collect();
    let mut atoms = vec![(0u64, 1.0f64)];
    let mut from = 0;
    for t in 1..=terms.len() {
        if t == terms.len() || terms[t].0 > terms[t - 1].0 + d {
            atoms = convolve(&atoms, &cluster_law(adapter, d, &terms[from..t]), 1, 1);
            from = t;
        }
    }
    let support = c.support();
    Some(Law { den, atoms, first: support[0], last: support[support.len() - 1] })
}

/// Law of `Σ (nums_i / den) aver_i` for parts that read disjoint bits.
pub fn mix(laws: &[&Law], nums: &[u64], den: u64) -> Option<Law> {
    let lcm = laws.iter().zip(nums).filter(|(_, &n)| n > 0).fold(1u64, |l, (law, _)| l.lcm(&law.den));
    let total = lcm.checked_mul(den).filter(|&v| v <= MAX_DEN)?;
    let mut atoms = vec![(0u64, 1.0f64)];
    let (mut first, mut last) = (usize::MAX, 0);
    for (law, &n) in laws.iter().zip(nums) {
        if n == 0 {
            continue;
        }
        atoms = convolve(&atoms, &law.atoms, 1, n * (lcm / law.den));
        first = first.min(law.first);
        last = last.max(law.last);
    }
    Some(Law { den: total, atoms, first, last })
}

/// Whether the values under `a` and `b` can read a common bit.
pub fn interacts(a: &Law, b: &Law, d: u64) -> bool {
    let (lo, hi) = if a.last <= b.first { (a, b) } else { (b, a) };
    !(lo.last as u64 + d < hi.first as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::creature::compose;
    use crate::scalar::{rat, rational_to_f64};
    use crate::sequence::{SequenceSource, SourceKind};
    use crate::synthesis::err::err_enumerated;
    use crate::Rational;
    use proptest::prelude::*;

    fn adapters() -> Vec<Adapter> {
        vec![
            Adapter::Bit(0),
            Adapter::Xor(vec![Adapter::Bit(0), Adapter::Bit(1)]),
            Adapter::Majority(3),
            Adapter::And(vec![Adapter::Bit(0), Adapter::Not(Box::new(Adapter::Bit(2)))]),
        ]
    }

    fn uniform(positions: &[usize]) -> Creature {
        let parts: Vec<Creature> = positions.iter().map(|&j| Creature::point_mass(j)).collect();
        let n = parts.len() as i64;
        compose(&parts, &vec![rat(1, n); parts.len()]).unwrap()
    }

    #[test]
    fn single_bit_law() {
        let l = law(&Adapter::Bit(0), &Creature::point_mass(7)).unwrap();
        assert_eq!(l.atoms, vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(l.err(0.5), 0.5);
    }

    #[test]
    fn four_bits_binomial() {
        let l = law(&Adapter::Bit(0), &uniform(&[8, 9, 10, 11])).unwrap();
        assert_eq!(l.den, 4);
        let probs: Vec<f64> = l.atoms.iter().map(|a| a.1 * 16.0).collect();
        assert_eq!(probs, vec![1.0, 4.0, 6.0, 4.0, 1.0]);
        // E|X/4 - 1/2| for X ~ Bin(4, 1/2) is 3/16
        assert_eq!(l.err(0.5), 3.0 / 16.0);
    }

    #[test]
    fn wide_window_declined() {
        assert!(law(&Adapter::Majority(20), &Creature::point_mass(4)).is_none());
    }

    #[test]
    fn mix_matches_direct() {
        let a = uniform(&[4, 6]);
        let b = uniform(&[10, 12]);
        let ad = Adapter::Majority(3);
        let (la, lb) = (law(&ad, &a).unwrap(), law(&ad, &b).unwrap());
        assert!(!interacts(&la, &lb, 2));
        let m = mix(&[&la, &lb], &[1, 1], 2).unwrap();
        let direct = law(&ad, &compose(&[a, b], &[rat(1, 2), rat(1, 2)]).unwrap()).unwrap();
        assert_eq!(m.den, direct.den);
        for (x, y) in m.atoms.iter().zip(&direct.atoms) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-15);
        }
    }

    #[test]
    fn neighbours_interact() {
        let ad = Adapter::Majority(3);
        let (la, lb) = (law(&ad, &Creature::point_mass(4)).unwrap(), law(&ad, &Creature::point_mass(6)).unwrap());
        assert!(interacts(&la, &lb, 2));
        assert!(!interacts(&la, &lb, 1));
    }

    proptest! {
        #[test]
        fn matches_enumeration(which in 0usize..4, picks in prop::collection::btree_set(4usize..14, 1..5), i in 0u64..=4) {
            let ad = adapters()[which].clone();
            let positions: Vec<usize> = picks.into_iter().collect();
            let c = uniform(&positions);
            let l = law(&ad, &c).unwrap();
            let total: f64 = l.atoms.iter().map(|a| a.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let src = SequenceSource::new("r", SourceKind::RandomName(ad));
            let oracle: Rational = err_enumerated(&src, 2, i, &c, 20).unwrap();
            prop_assert!((l.err(i as f64 / 4.0) - rational_to_f64(&oracle)).abs() < 1e-12);
        }
    }
}

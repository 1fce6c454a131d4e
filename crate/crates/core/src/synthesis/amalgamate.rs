//! A pure condition above every element of a `≤*`-increasing chain, built
//! diagonally: row `n` is drawn from chain element `n`.

use crate::condition::{check_leq_star, find_leq_witness, find_star_witness, Condition, StarWitness};
use crate::creature::Creature;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Amalgam {
    pub cond: Condition,
    /// `witnesses[i]` certifies `chain[i] ≤* cond`.
    pub witnesses: Vec<StarWitness>,
}

/// Witness for `p ≤ q` viewed as `p ≤* q` with no mistake.
pub fn star_from_leq(p: &Condition, q: &Condition) -> Option<StarWitness> {
    let order = find_leq_witness(p, q)?;
    Some(StarWitness { mistake: 0, trunk: q.trunk().to_vec(), order })
}

/// Position from which `q`'s rows are compositions of `p`'s under `wit`.
fn resume_position(q: &Condition, wit: &StarWitness) -> usize {
    q.row(q.trunk_len() + wit.mistake).mdn()
}

/// First row of `c` starting at or after `pos`.
fn first_row_from(c: &Condition, pos: usize) -> Creature {
    if pos >= c.tail_start() {
        return Creature::point_mass(pos);
    }
    let j = c.rows().partition_point(|r| r.mdn() < pos);
    c.row(j).into_owned()
}

pub fn amalgamate(chain: &[Condition], links: &[StarWitness]) -> Result<Amalgam> {
    if chain.is_empty() {
        return Err(Error::Param("cannot amalgamate an empty chain".into()));
    }
    if links.len() + 1 != chain.len() {
        return Err(Error::Param(format!("{} links for a chain of {}", links.len(), chain.len())));
    }
    for (j, w) in links.iter().enumerate() {
        check_leq_star(&chain[j], &chain[j + 1], w).map_err(|e| Error::Witness(format!("link {j}: {e}")))?;
    }
    // floor[n]: rows of chain[n] starting here are compositions of every earlier element
    let mut floor = vec![0usize; chain.len()];
    for n in 1..chain.len() {
        floor[n] = floor[n - 1].max(resume_position(&chain[n], &links[n - 1]));
    }
    let last = chain.len() - 1;
    let end = chain[last].tail_start();
    let mut rows: Vec<Creature> = Vec::new();
    let mut cursor = chain[0].start();
    let mut n = 0;
    loop {
        let src = n.min(last);
        let from = cursor.max(floor[src]);
        if src == last && from >= end {
            break;
        }
        let c = first_row_from(&chain[src], from);
        if let Some(prev) = rows.pop() {
            rows.push(prev.pad_with_zeroes(c.mdn())?);
        }
        cursor = c.mup();
        rows.push(c);
        n += 1;
    }
    if let Some(prev) = rows.pop() {
        rows.push(prev.pad_with_zeroes(cursor.max(end))?);
    }
    let start = rows.first().map_or(end, Creature::mdn);
    let cond = Condition::with_start(0, start, rows)?;
    let max_mistake = cond.explicit_len() + 1;
    let witnesses = chain
        .iter()
        .enumerate()
        .map(|(i, p)| {
            find_star_witness(p, &cond, max_mistake)
                .ok_or_else(|| Error::Witness(format!("amalgam is not ≥* chain element {i}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Amalgam { cond, witnesses })
}

/// Amalgamates the first `bound` elements of the chain `p_0 = first`,
/// `p_{n+1} = next(p_n)`.
pub fn amalgamate_lazy(
    first: Condition,
    mut next: impl FnMut(&Condition) -> Result<(Condition, StarWitness)>,
    bound: usize,
) -> Result<Amalgam> {
    if bound == 0 {
        return Err(Error::Param("truncation bound must be positive".into()));
    }
    let mut chain = vec![first];
    let mut links = Vec::new();
    while chain.len() < bound {
        let (c, w) = next(chain.last().expect("non-empty"))?;
        chain.push(c);
        links.push(w);
    }
    amalgamate(&chain, &links)
}

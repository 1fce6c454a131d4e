//! Forcing conditions and the orders `≤`, `≤_i`, `≤*` between them.
//!
//! A condition is a trunk length, a finite list of consecutive creatures, and
//! an implicit tail of point masses continuing from the last explicit `mup`.

use std::borrow::Cow;
use std::fmt;

use num_traits::Zero;

use crate::creature::{compose, Creature};
use crate::error::{Error, Result};
use crate::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Condition {
    trunk_len: usize,
    start: usize,
    rows: Vec<Creature>,
}

impl Condition {
    pub fn new(trunk_len: usize, rows: Vec<Creature>) -> Result<Self> {
        let start = rows.first().map_or(0, Creature::mdn);
        Self::with_start(trunk_len, start, rows)
    }

    /// `start` fixes where the point-mass tail begins when `rows` is empty.
    pub fn with_start(trunk_len: usize, start: usize, rows: Vec<Creature>) -> Result<Self> {
        if trunk_len > rows.len() {
            return Err(Error::BadCondition(format!("trunk length {trunk_len} exceeds {} explicit rows", rows.len())));
        }
        if let Some(first) = rows.first() {
            if first.mdn() != start {
                return Err(Error::BadCondition(format!("first row starts at {} not {start}", first.mdn())));
            }
        }
        for (i, w) in rows.windows(2).enumerate() {
            if w[0].mup() != w[1].mdn() {
                return Err(Error::BadCondition(format!(
                    "rows {i} and {} are not consecutive: mup {} vs mdn {}",
                    i + 1,
                    w[0].mup(),
                    w[1].mdn()
                )));
            }
        }
        Ok(Self { trunk_len, start, rows })
    }

    /// Point masses at `start .. start + n`, as explicit rows.
    pub fn point_masses(start: usize, n: usize) -> Self {
        let rows = (start..start + n).map(Creature::point_mass).collect();
        Self { trunk_len: 0, start, rows }
    }

    pub fn trunk_len(&self) -> usize {
        self.trunk_len
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn rows(&self) -> &[Creature] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Creature> {
        self.rows
    }

    pub fn explicit_len(&self) -> usize {
        self.rows.len()
    }

    pub fn trunk(&self) -> &[Creature] {
        &self.rows[..self.trunk_len]
    }

    /// Position where the point-mass tail starts.
    pub fn tail_start(&self) -> usize {
        self.rows.last().map_or(self.start, Creature::mup)
    }

    /// Row `n` of the infinite condition.
    pub fn row(&self, n: usize) -> Cow<'_, Creature> {
        match self.rows.get(n) {
            Some(c) => Cow::Borrowed(c),
            None => Cow::Owned(Creature::point_mass(self.tail_start() + (n - self.rows.len()))),
        }
    }

    /// Rows (explicit, then tail) whose `mup` does not exceed `horizon`.
    pub fn rows_below(&self, horizon: usize) -> Vec<Creature> {
        let mut out: Vec<Creature> = self.rows.iter().take_while(|c| c.mup() <= horizon).cloned().collect();
        if out.len() == self.rows.len() {
            out.extend((self.tail_start()..horizon).map(Creature::point_mass));
        }
        out
    }

    pub fn is_pure(&self) -> bool {
        self.trunk_len == 0
    }

    pub fn pure_part(&self) -> Self {
        Self { trunk_len: 0, ..self.clone() }
    }

    pub fn with_trunk_len(&self, trunk_len: usize) -> Result<Self> {
        Self::with_start(trunk_len, self.start, self.rows.clone())
    }

    /// Index of the row starting exactly at `pos`, if any row does.
    pub fn row_starting_at(&self, pos: usize) -> Option<usize> {
        if pos >= self.tail_start() {
            return Some(self.rows.len() + (pos - self.tail_start()));
        }
        self.rows.binary_search_by_key(&pos, Creature::mdn).ok()
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("condition trunk={}", self.trunk_len);
        if self.rows.is_empty() {
            out.push_str(&format!(" start={}", self.start));
        }
        out.push('\n');
        for (n, c) in self.rows.iter().enumerate() {
            out.push_str(&c.format_row(n));
            out.push('\n');
        }
        out.push_str("tail point-mass\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Version("empty condition file".into()))?;
        let mut words = header.split_whitespace();
        if words.next() != Some("condition") {
            return Err(Error::Version(format!("expected `condition trunk=<n>`, found `{header}`")));
        }
        let mut trunk = None;
        let mut start = None;
        for w in words {
            match w.split_once('=') {
                Some(("trunk", v)) => trunk = v.parse::<usize>().ok(),
                Some(("start", v)) => start = v.parse::<usize>().ok(),
                _ => return Err(Error::Version(format!("unexpected header field `{w}`"))),
            }
        }
        let trunk = trunk.ok_or_else(|| Error::Version("missing trunk=<n>".into()))?;
        let mut rows = Vec::new();
        let mut saw_tail = false;
        for l in lines {
            if l == "tail point-mass" {
                saw_tail = true;
                continue;
            }
            if saw_tail {
                return Err(Error::Syntax { line: 0, msg: format!("content after tail line: `{l}`") });
            }
            let (n, c) = Creature::parse_row(l)?;
            if n != rows.len() {
                return Err(Error::Syntax { line: 0, msg: format!("row index {n} out of sequence") });
            }
            rows.push(c);
        }
        if !saw_tail {
            return Err(Error::Syntax { line: 0, msg: "missing `tail point-mass`".into() });
        }
        match start {
            Some(s) if rows.is_empty() => Self::with_start(trunk, s, rows),
            _ => Self::new(trunk, rows),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Block boundaries and per-row weights certifying `p ≤ q`.
///
/// Explicit row `n^p + i` of `q` is the composition of `p`'s rows
/// `[k_i, k_i + weights[i].len())` where `k_0 = first` and blocks are
/// consecutive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderWitness {
    pub first: usize,
    pub weights: Vec<Vec<Rational>>,
}

impl OrderWitness {
    pub fn identity(p: &Condition) -> Self {
        let n = p.explicit_len().saturating_sub(p.trunk_len());
        Self { first: p.trunk_len(), weights: vec![vec![Rational::from_integer(1.into())]; n] }
    }

    /// Block boundaries `k_{n^p} < k_{n^p+1} < ...` (one more than blocks).
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = vec![self.first];
        for w in &self.weights {
            out.push(out.last().unwrap() + w.len());
        }
        out
    }
}

/// Witness for `p ≤* q`: drop `mistake` post-trunk rows of `q`, put `trunk`
/// in front, and the result must be `≥ p` via `order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarWitness {
    pub mistake: usize,
    pub trunk: Vec<Creature>,
    pub order: OrderWitness,
}

/// Checks `p ≤ q` against a witness by exact recomputation.
pub fn check_leq(p: &Condition, q: &Condition, wit: &OrderWitness) -> std::result::Result<(), String> {
    let np = p.trunk_len();
    if np > q.trunk_len() {
        return Err(format!("trunk length decreases: {} > {}", np, q.trunk_len()));
    }
    for n in 0..np {
        if p.row(n) != q.row(n) {
            return Err(format!("trunk row {n} differs"));
        }
    }
    if wit.first < np {
        return Err(format!("first block starts at {} below trunk length {np}", wit.first));
    }
    let composed_rows = q.explicit_len().saturating_sub(np);
    if wit.weights.len() != composed_rows {
        return Err(format!("witness has {} blocks but q has {composed_rows} rows past p's trunk", wit.weights.len()));
    }
    let mut k = wit.first;
    for (i, w) in wit.weights.iter().enumerate() {
        if w.is_empty() {
            return Err(format!("block {i} is empty"));
        }
        let parts: Vec<Creature> = (k..k + w.len()).map(|j| p.row(j).into_owned()).collect();
        let c = compose(&parts, w).map_err(|e| format!("block {i}: {e}"))?;
        if c != q.rows()[np + i] {
            return Err(format!("row {} of q is not the witnessed composition of p rows [{k}, {})", np + i, k + w.len()));
        }
        k += w.len();
    }
    // past the composed rows both conditions must continue with the same point masses
    for j in k..p.explicit_len() {
        if !p.rows()[j].is_point_mass() {
            return Err(format!("p row {j} is not a point mass but q has only tail there"));
        }
    }
    let p_next = p.row(k).mdn();
    if p_next != q.tail_start() {
        return Err(format!("tails misaligned: p continues at {p_next}, q's tail starts at {}", q.tail_start()));
    }
    Ok(())
}

pub fn leq(p: &Condition, q: &Condition, wit: &OrderWitness) -> bool {
    check_leq(p, q, wit).is_ok()
}

pub fn check_leq_i(p: &Condition, q: &Condition, i: usize, wit: &OrderWitness) -> std::result::Result<(), String> {
    if p.trunk_len() != q.trunk_len() {
        return Err(format!("trunk lengths differ: {} vs {}", p.trunk_len(), q.trunk_len()));
    }
    for n in 0..p.trunk_len() + i {
        if p.row(n) != q.row(n) {
            return Err(format!("row {n} differs"));
        }
    }
    check_leq(p, q, wit)
}

pub fn leq_i(p: &Condition, q: &Condition, i: usize, wit: &OrderWitness) -> bool {
    check_leq_i(p, q, i, wit).is_ok()
}

/// `(w, t_n^q, t_{n+1}^q, ...)`: `q` with its first `mistake` post-trunk rows
/// dropped and `trunk` in front.
pub fn replace_trunk(q: &Condition, mistake: usize, trunk: &[Creature]) -> Result<Condition> {
    let from = q.trunk_len() + mistake;
    let mut rows = trunk.to_vec();
    rows.extend(q.rows().iter().skip(from).cloned());
    let start = if trunk.is_empty() { q.row(from).mdn() } else { trunk[0].mdn() };
    let resumed = q.row(from).mdn();
    let trunk_end = trunk.last().map_or(start, Creature::mup);
    if trunk_end != resumed {
        return Err(Error::BadCondition(format!("replacement trunk ends at {trunk_end}, q resumes at {resumed}")));
    }
    Condition::with_start(trunk.len(), start, rows)
}

pub fn check_leq_star(p: &Condition, q: &Condition, wit: &StarWitness) -> std::result::Result<(), String> {
    let shifted = replace_trunk(q, wit.mistake, &wit.trunk).map_err(|e| e.to_string())?;
    check_leq(p, &shifted, &wit.order)
}

pub fn leq_star(p: &Condition, q: &Condition, wit: &StarWitness) -> bool {
    check_leq_star(p, q, wit).is_ok()
}

/// Reconstructs the unique candidate witness for `p ≤ q`, if one exists.
///
/// Rows of `p` have disjoint consecutive domains, so each row of `q` past the
/// trunk pins down its block, and each weight is a ratio of entries.
pub fn find_leq_witness(p: &Condition, q: &Condition) -> Option<OrderWitness> {
    let np = p.trunk_len();
    if np > q.trunk_len() {
        return None;
    }
    let first_pos = q.row(np).mdn();
    let first = p.row_starting_at(first_pos)?;
    if first < np {
        return None;
    }
    let mut k = first;
    let mut weights = Vec::new();
    for row in &q.rows()[np.min(q.explicit_len())..] {
        if p.row(k).mdn() != row.mdn() {
            return None;
        }
        let mut block = Vec::new();
        loop {
            let part = p.row(k);
            if part.mup() > row.mup() {
                return None;
            }
            let probe = part.support()[0];
            block.push(row.get(probe) / part.get(probe));
            k += 1;
            if part.mup() == row.mup() {
                break;
            }
        }
        weights.push(block);
    }
    let wit = OrderWitness { first, weights };
    check_leq(p, q, &wit).ok().map(|_| wit)
}

/// Searches mistakes `0..=max_mistake`, using `p`'s own prefix as the trunk.
pub fn find_star_witness(p: &Condition, q: &Condition, max_mistake: usize) -> Option<StarWitness> {
    for mistake in 0..=max_mistake {
        let resume = q.row(q.trunk_len() + mistake).mdn();
        let Some(j) = p.row_starting_at(resume) else { continue };
        if j < p.trunk_len() {
            continue;
        }
        let trunk: Vec<Creature> = (0..j).map(|n| p.row(n).into_owned()).collect();
        if !trunk.is_empty() && trunk[0].mdn() != p.start() {
            continue;
        }
        let Ok(shifted) = replace_trunk(q, mistake, &trunk) else { continue };
        if let Some(order) = find_leq_witness(p, &shifted) {
            return Some(StarWitness { mistake, trunk, order });
        }
    }
    None
}

/// `r^{q,n}`: the trunk and first `n` post-trunk rows of `r`, then every row
/// of `q` lying beyond them.
pub fn restrict(r: &Condition, q: &Condition, n: usize, wit: &OrderWitness) -> Result<Condition> {
    check_leq(q, r, wit).map_err(Error::Witness)?;
    let keep = r.trunk_len() + n;
    let mut rows: Vec<Creature> = (0..keep).map(|i| r.row(i).into_owned()).collect();
    let end = rows.last().map_or(q.start(), Creature::mup);
    let resume: Vec<Creature> = q.rows().iter().filter(|c| c.mdn() >= end).cloned().collect();
    match resume.first() {
        Some(c) if c.mdn() != end => {
            return Err(Error::Witness(format!("no row of q starts at {end}; next starts at {}", c.mdn())))
        }
        None if q.tail_start() > end => {
            return Err(Error::Witness(format!("no row of q starts at {end}")));
        }
        _ => {}
    }
    rows.extend(resume);
    let start = rows.first().map_or(end, Creature::mdn);
    Condition::with_start(r.trunk_len(), start, rows)
}

/// Weight vector over a block where every weight is zero except one.
pub fn unit_weights(len: usize, at: usize) -> Vec<Rational> {
    (0..len).map(|j| if j == at { Rational::from_integer(1.into()) } else { Rational::zero() }).collect()
}

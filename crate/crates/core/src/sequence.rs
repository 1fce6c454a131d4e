//! Bounded 0/1 sequences: deterministic streams and random names (Borel
//! adapters over a seeded bitstream), plus the family file format.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;

use crate::bitstream::Bitstream;
use crate::error::{Error, Result};

/// Expression over the random bitstream, evaluated at sequence index `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Adapter {
    /// `bit(j + offset)`
    Bit(u64),
    Not(Box<Adapter>),
    Xor(Vec<Adapter>),
    And(Vec<Adapter>),
    Or(Vec<Adapter>),
    /// Strict majority of `bit(j) .. bit(j + w - 1)`.
    Majority(u64),
}

impl Adapter {
    pub fn eval(&self, j: u64, bit: &impl Fn(u64) -> bool) -> bool {
        match self {
            Adapter::Bit(o) => bit(j + o),
            Adapter::Not(a) => !a.eval(j, bit),
            Adapter::Xor(xs) => xs.iter().fold(false, |acc, a| acc ^ a.eval(j, bit)),
            Adapter::And(xs) => xs.iter().all(|a| a.eval(j, bit)),
            Adapter::Or(xs) => xs.iter().any(|a| a.eval(j, bit)),
            Adapter::Majority(w) => {
                let ones = (0..*w).filter(|o| bit(j + o)).count() as u64;
                2 * ones > *w
            }
        }
    }

    /// Offsets (relative to `j`) of every bitstream position the value reads.
    pub fn offsets(&self) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        self.collect_offsets(&mut out);
        out
    }

    fn collect_offsets(&self, out: &mut BTreeSet<u64>) {
        match self {
            Adapter::Bit(o) => {
                out.insert(*o);
            }
            Adapter::Not(a) => a.collect_offsets(out),
            Adapter::Xor(xs) | Adapter::And(xs) | Adapter::Or(xs) => {
                xs.iter().for_each(|a| a.collect_offsets(out))
            }
            Adapter::Majority(w) => out.extend(0..*w),
        }
    }

    pub fn max_offset(&self) -> u64 {
        self.offsets().iter().next_back().copied().unwrap_or(0)
    }

    /// Parses prefix notation, e.g. `(xor (bit 0) (not (bit 1)))`.
    pub fn parse(text: &str) -> std::result::Result<Adapter, String> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let a = parse_expr(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(format!("trailing input after expression: `{}`", tokens[pos..].join(" ")));
        }
        Ok(a)
    }
}

fn tokenize(text: &str) -> Vec<String> {
    text.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

fn parse_expr(tokens: &[String], pos: &mut usize) -> std::result::Result<Adapter, String> {
    let next = |pos: &mut usize| -> std::result::Result<String, String> {
        let t = tokens.get(*pos).cloned().ok_or("unexpected end of expression")?;
        *pos += 1;
        Ok(t)
    };
    if next(pos)? != "(" {
        return Err("expected `(`".into());
    }
    let op = next(pos)?;
    let number = |pos: &mut usize| -> std::result::Result<u64, String> {
        let t = next(pos)?;
        t.parse::<u64>().map_err(|_| format!("expected a non-negative integer, got `{t}`"))
    };
    let adapter = match op.as_str() {
        "bit" => Adapter::Bit(number(pos)?),
        "maj" => {
            let w = number(pos)?;
            if w == 0 {
                return Err("majority window must be positive".into());
            }
            Adapter::Majority(w)
        }
        "not" | "xor" | "and" | "or" => {
            let mut args = Vec::new();
            while tokens.get(*pos).map(String::as_str) == Some("(") {
                args.push(parse_expr(tokens, pos)?);
            }
            match op.as_str() {
                "not" if args.len() == 1 => Adapter::Not(Box::new(args.pop().unwrap())),
                "not" => return Err("`not` takes exactly one argument".into()),
                _ if args.len() < 2 => return Err(format!("`{op}` takes at least two arguments")),
                "xor" => Adapter::Xor(args),
                "and" => Adapter::And(args),
                _ => Adapter::Or(args),
            }
        }
        other => return Err(format!("unknown primitive `{other}`")),
    };
    if next(pos)? != ")" {
        return Err(format!("expected `)` to close `{op}`"));
    }
    Ok(adapter)
}

impl fmt::Display for Adapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, op: &str, xs: &[Adapter]| {
            write!(f, "({op}")?;
            for x in xs {
                write!(f, " {x}")?;
            }
            write!(f, ")")
        };
        match self {
            Adapter::Bit(o) => write!(f, "(bit {o})"),
            Adapter::Not(a) => write!(f, "(not {a})"),
            Adapter::Xor(xs) => list(f, "xor", xs),
            Adapter::And(xs) => list(f, "and", xs),
            Adapter::Or(xs) => list(f, "or", xs),
            Adapter::Majority(w) => write!(f, "(maj {w})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SourceKind {
    Periodic { prefix: Vec<bool>, period: Vec<bool> },
    LiteralPrefix { bits: Vec<bool>, tail: bool },
    /// Blocks of length 1, 2, 4, ... alternating, the first holding `start`.
    DoublingBlock { start: bool },
    ThueMorse,
    RandomName(Adapter),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSource {
    pub name: String,
    pub kind: SourceKind,
}

impl SequenceSource {
    pub fn new(name: impl Into<String>, kind: SourceKind) -> Self {
        Self { name: name.into(), kind }
    }

    pub fn is_random(&self) -> bool {
        matches!(self.kind, SourceKind::RandomName(_))
    }

    pub fn adapter(&self) -> Option<&Adapter> {
        match &self.kind {
            SourceKind::RandomName(a) => Some(a),
            _ => None,
        }
    }

    /// The `j`-th bit of a deterministic source.
    pub fn eval(&self, j: u64) -> Result<bool> {
        Ok(match &self.kind {
            SourceKind::Periodic { prefix, period } => {
                let j = j as usize;
                if j < prefix.len() {
                    prefix[j]
                } else {
                    period[(j - prefix.len()) % period.len()]
                }
            }
            SourceKind::LiteralPrefix { bits, tail } => bits.get(j as usize).copied().unwrap_or(*tail),
            SourceKind::DoublingBlock { start } => {
                let block = 63 - (j + 1).leading_zeros();
                *start ^ (block % 2 == 1)
            }
            SourceKind::ThueMorse => j.count_ones() % 2 == 1,
            SourceKind::RandomName(_) => return Err(Error::RandomNameMisuse(self.name.clone())),
        })
    }

    pub fn prefix(&self, len: usize) -> Result<Vec<bool>> {
        (0..len as u64).map(|j| self.eval(j)).collect()
    }

    /// Evaluates a random name against an explicit bitstream.
    pub fn eval_on(&self, j: u64, bit: &impl Fn(u64) -> bool) -> Result<bool> {
        match &self.kind {
            SourceKind::RandomName(a) => Ok(a.eval(j, bit)),
            _ => self.eval(j),
        }
    }

    /// The first `horizon` values of the name under the bitstream keyed by `seed`.
    pub fn sample_name(&self, seed: u64, horizon: usize) -> Result<Vec<bool>> {
        if horizon == 0 {
            return Err(Error::Param("horizon must be at least 1".into()));
        }
        let stream = Bitstream::new(seed);
        self.values_on(&stream, horizon)
    }

    /// Values over `[0, len)`: deterministic sources ignore the stream.
    pub fn values_on(&self, stream: &Bitstream, len: usize) -> Result<Vec<bool>> {
        match &self.kind {
            SourceKind::RandomName(a) => {
                let bit = |p: u64| stream.bit(p);
                Ok((0..len as u64).map(|j| a.eval(j, &bit)).collect())
            }
            _ => self.prefix(len),
        }
    }

    /// Exact set of bitstream positions read by values with index in `range`.
    pub fn dependency_window(&self, range: Range<u64>) -> Result<BTreeSet<u64>> {
        let a = self.adapter().ok_or_else(|| Error::NotRandomName(self.name.clone()))?;
        Ok(window_for(a, range))
    }

    pub fn dependency_window_of(&self, indices: impl IntoIterator<Item = u64>) -> Result<BTreeSet<u64>> {
        let a = self.adapter().ok_or_else(|| Error::NotRandomName(self.name.clone()))?;
        let offs = a.offsets();
        Ok(indices.into_iter().flat_map(|j| offs.iter().map(move |o| j + o)).collect())
    }
}

fn window_for(a: &Adapter, range: Range<u64>) -> BTreeSet<u64> {
    let offs = a.offsets();
    range.flat_map(|j| offs.iter().map(move |o| j + o)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFamily {
    pub sources: Vec<SequenceSource>,
}

pub const FAMILY_HEADER: &str = "family v1";

impl SequenceFamily {
    pub fn new(sources: Vec<SequenceSource>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Param("family must not be empty".into()));
        }
        let mut seen = HashSet::new();
        for s in &sources {
            if !seen.insert(s.name.clone()) {
                return Err(Error::DuplicateName { line: 0, name: s.name.clone() });
            }
        }
        Ok(Self { sources })
    }

    pub fn get(&self, name: &str) -> Option<&SequenceSource> {
        self.sources.iter().find(|s| s.name == name)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some((_, h)) if h.split_whitespace().collect::<Vec<_>>() == ["family", "v1"] => {}
            Some((_, h)) => return Err(Error::Version(format!("expected `{FAMILY_HEADER}`, found `{h}`"))),
            None => return Err(Error::Version("empty family file".into())),
        }
        let mut sources = Vec::new();
        let mut seen = HashSet::new();
        for (line, text) in lines {
            let s = parse_seq_line(line, text)?;
            if !seen.insert(s.name.clone()) {
                return Err(Error::DuplicateName { line, name: s.name });
            }
            sources.push(s);
        }
        if sources.is_empty() {
            return Err(Error::Syntax { line: 1, msg: "family has no `seq` lines".into() });
        }
        Ok(Self { sources })
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from(FAMILY_HEADER);
        out.push('\n');
        for s in &self.sources {
            out.push_str(&format_seq_line(s));
            out.push('\n');
        }
        out
    }
}

fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn parse_bits(line: usize, s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Syntax { line, msg: format!("expected a bit string, got `{s}`") }),
        })
        .collect()
}

fn format_seq_line(s: &SequenceSource) -> String {
    let params = match &s.kind {
        SourceKind::Periodic { prefix, period } => {
            format!("periodic {} prefix={} period={}", s.name, bits_to_string(prefix), bits_to_string(period))
        }
        SourceKind::LiteralPrefix { bits, tail } => {
            format!("literal-prefix {} bits={} tail={}", s.name, bits_to_string(bits), u8::from(*tail))
        }
        SourceKind::DoublingBlock { start } => format!("doubling-block {} start={}", s.name, u8::from(*start)),
        SourceKind::ThueMorse => format!("thue-morse {}", s.name),
        SourceKind::RandomName(a) => format!("random-name {} expr={a}", s.name),
    };
    format!("seq {params}")
}

fn parse_seq_line(line: usize, text: &str) -> Result<SequenceSource> {
    let syntax = |msg: String| Error::Syntax { line, msg };
    let mut words = text.split_whitespace();
    if words.next() != Some("seq") {
        return Err(syntax(format!("expected `seq`, found `{text}`")));
    }
    let kind = words.next().ok_or_else(|| syntax("missing kind".into()))?;
    let name = words.next().ok_or_else(|| syntax("missing name".into()))?;
    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.') {
        return Err(syntax(format!("invalid name `{name}`")));
    }
    let rest: Vec<&str> = words.collect();

    if kind == "random-name" {
        let joined = rest.join(" ");
        let expr = joined
            .strip_prefix("expr=")
            .ok_or_else(|| syntax("random-name requires expr=<expression>".into()))?;
        let a = Adapter::parse(expr).map_err(|msg| Error::MalformedAdapter { line, msg })?;
        return Ok(SequenceSource::new(name, SourceKind::RandomName(a)));
    }

    let mut kv = std::collections::BTreeMap::new();
    for w in &rest {
        let (k, v) = w.split_once('=').ok_or_else(|| syntax(format!("expected key=value, got `{w}`")))?;
        if kv.insert(k, v).is_some() {
            return Err(syntax(format!("repeated key `{k}`")));
        }
    }
    let mut take = |key: &str| kv.remove(key).ok_or_else(|| syntax(format!("missing key `{key}`")));
    let one_bit = |v: &str| match v {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(syntax(format!("expected 0 or 1, got `{v}`"))),
    };
    let kind = match kind {
        "periodic" => {
            let prefix = parse_bits(line, take("prefix")?)?;
            let period = parse_bits(line, take("period")?)?;
            if period.is_empty() {
                return Err(syntax("period must be non-empty".into()));
            }
            SourceKind::Periodic { prefix, period }
        }
        "literal-prefix" => SourceKind::LiteralPrefix { bits: parse_bits(line, take("bits")?)?, tail: one_bit(take("tail")?)? },
        "doubling-block" => SourceKind::DoublingBlock { start: one_bit(take("start")?)? },
        "thue-morse" => SourceKind::ThueMorse,
        other => return Err(Error::UnknownKind { line, kind: other.to_string() }),
    };
    if let Some(k) = kv.keys().next() {
        return Err(syntax(format!("unexpected key `{k}`")));
    }
    Ok(SequenceSource::new(name, kind))
}

//! Summation matrices as lists of creature rows, with a text format.

use std::fmt;

use crate::creature::Creature;
use crate::error::{Error, Result};

pub const MATRIX_HEADER: &str = "matrix v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzMatrix {
    rows: Vec<Creature>,
    /// Free-form `provenance <line>` entries, in order.
    provenance: Vec<String>,
}

impl ToeplitzMatrix {
    pub fn new(rows: Vec<Creature>, provenance: Vec<String>) -> Result<Self> {
        for (n, w) in rows.windows(2).enumerate() {
            if w[0].mdn() >= w[1].mdn() {
                return Err(Error::BadCondition(format!("row {} does not start after row {n}", n + 1)));
            }
        }
        if provenance.iter().any(|p| p.contains('\n')) {
            return Err(Error::Param("provenance lines must be single lines".into()));
        }
        Ok(Self { rows, provenance })
    }

    pub fn rows(&self) -> &[Creature] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    /// Values of provenance lines `<key> ...`, without the key.
    pub fn provenance_entries<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.provenance
            .iter()
            .filter_map(move |l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
    }

    /// `(k, N_k)` pairs from `level k=<k> ... first_row=<n>` lines.
    pub fn level_rows(&self) -> Vec<(u32, Option<usize>)> {
        self.provenance_entries("level")
            .filter_map(|l| {
                let field = |key: &str| l.split_whitespace().find_map(|w| w.strip_prefix(key).map(str::to_string));
                let k = field("k=")?.parse().ok()?;
                let n = field("first_row=")?;
                Some((k, n.parse().ok()))
            })
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from(MATRIX_HEADER);
        out.push('\n');
        for p in &self.provenance {
            out.push_str("provenance ");
            out.push_str(p);
            out.push('\n');
        }
        for (n, c) in self.rows.iter().enumerate() {
            out.push_str(&c.format_row(n));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == MATRIX_HEADER => {}
            Some((_, h)) => return Err(Error::Version(format!("expected `{MATRIX_HEADER}`, found `{}`", h.trim()))),
            None => return Err(Error::Version("empty matrix file".into())),
        }
        let mut rows = Vec::new();
        let mut provenance = Vec::new();
        for (no, l) in lines {
            let l = l.trim();
            if let Some(p) = l.strip_prefix("provenance ") {
                if !rows.is_empty() {
                    return Err(Error::Syntax { line: no + 1, msg: "provenance after rows".into() });
                }
                provenance.push(p.to_string());
                continue;
            }
            let (n, c) = Creature::parse_row(l).map_err(|e| relocate(e, no + 1))?;
            if n != rows.len() {
                return Err(Error::Syntax { line: no + 1, msg: format!("row index {n} out of sequence") });
            }
            rows.push(c);
        }
        Self::new(rows, provenance)
    }
}

fn relocate(e: Error, line: usize) -> Error {
    match e {
        Error::Syntax { msg, .. } => Error::Syntax { line, msg },
        other => other,
    }
}

impl fmt::Display for ToeplitzMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

//! Checks on synthesized objects: regularity, convergence traces, the
//! convexity inequality, measure bounds and the Borel–Cantelli report.
//!
//! Statistical checks use a two-sided Hoeffding interval at 99%. Exact checks
//! compare rationals. Every report renders as one line
//! `check=<name> outcome=<o> value=<v> ci=<ci> params=<k=v,...> [detail=<text>]`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bitstream::Bitstream;
use crate::creature::{compose, Creature};
use crate::error::{Error, Result};
use crate::matrix::ToeplitzMatrix;
use crate::scalar::{dyadic, format_rational, rat, rational_to_f64};
use crate::sequence::SequenceSource;
use crate::synthesis::{err, ErrMode, ErrValue};
use crate::Rational;

/// Largest dependency window enumerated exactly by [`mc_measure_bound`].
pub const ENUM_MAX_BITS: usize = 20;

/// Fraction of sampled bitstreams that must settle for a Borel–Cantelli pass.
pub const SETTLED_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Outcome::Pass),
            "fail" => Ok(Outcome::Fail),
            "inconclusive" => Ok(Outcome::Inconclusive),
            _ => Err(Error::Syntax { line: 0, msg: format!("unknown outcome `{s}`") }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub check: String,
    pub outcome: Outcome,
    /// Exact rational, estimate, or `key:value` list; never contains spaces.
    pub value: String,
    /// `±<half-width>/<samples>` for estimates, `exact` otherwise.
    pub ci: String,
    pub params: Vec<(String, String)>,
    /// Counterexample or remark; may contain spaces.
    pub detail: Option<String>,
}

fn token(s: impl Into<String>) -> String {
    s.into().replace([' ', '\t', '\n'], "_")
}

fn param_token(s: impl Into<String>) -> String {
    token(s).replace(',', ";")
}

impl VerificationReport {
    pub fn new(check: &str, outcome: Outcome, value: impl Into<String>, ci: impl Into<String>) -> Self {
        Self { check: token(check), outcome, value: token(value), ci: token(ci), params: Vec::new(), detail: None }
    }

    pub fn param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((param_token(key).replace('=', "_"), param_token(value.to_string())));
        self
    }

    pub fn detail(mut self, text: impl Into<String>) -> Self {
        self.detail = Some(text.into().replace('\n', " "));
        self
    }

    pub fn get_param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(line: &str) -> Result<Self> {
        let bad = |msg: String| Error::Syntax { line: 0, msg };
        let (head, detail) = match line.split_once(" detail=") {
            Some((h, d)) => (h, Some(d.to_string())),
            None => (line, None),
        };
        let mut fields = head.split_whitespace();
        let mut take = |key: &str| -> Result<String> {
            let w = fields.next().ok_or_else(|| bad(format!("missing `{key}=`")))?;
            w.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("expected `{key}=`, found `{w}`")))
        };
        let check = take("check")?;
        let outcome = take("outcome")?.parse()?;
        let value = take("value")?;
        let ci = take("ci")?;
        let params_text = take("params")?;
        if let Some(extra) = fields.next() {
            return Err(bad(format!("unexpected field `{extra}`")));
        }
        let params = params_text
            .split(',')
            .filter(|p| !p.is_empty())
            .map(|p| {
                p.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| bad(format!("malformed parameter `{p}`")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { check, outcome, value, ci, params, detail })
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(
            f,
            "check={} outcome={} value={} ci={} params={}",
            self.check,
            self.outcome,
            self.value,
            self.ci,
            params.join(",")
        )?;
        if let Some(d) = &self.detail {
            write!(f, " detail={d}")?;
        }
        Ok(())
    }
}

pub fn serialize_reports(reports: &[VerificationReport]) -> String {
    reports.iter().map(|r| format!("{r}\n")).collect()
}

pub fn parse_reports(text: &str) -> Result<Vec<VerificationReport>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(no, l)| {
            VerificationReport::parse(l.trim()).map_err(|e| match e {
                Error::Syntax { msg, .. } => Error::Syntax { line: no + 1, msg },
                other => other,
            })
        })
        .collect()
}

/// Two-sided Hoeffding half-width at 99% for a mean of `n` values in an
/// interval of length `range`.
pub fn hoeffding_half_width(n: u64, range: f64) -> f64 {
    range * ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt()
}

fn ci_text(hw: f64, n: u64) -> String {
    format!("±{hw:.6}/{n}")
}

const ADAPTER_NOTE: &str = "measure is over sampled bitstreams read through the adapter language";

/// Regularity over the first `horizon` rows.
pub fn check_regular(matrix: &ToeplitzMatrix, horizon: usize) -> Result<VerificationReport> {
    check_regular_rows(matrix.rows(), horizon)
}

/// As [`check_regular`] for rows not yet known to form a matrix.
pub fn check_regular_rows(rows: &[Creature], horizon: usize) -> Result<VerificationReport> {
    if rows.len() < horizon {
        return Err(Error::Param(format!("matrix has {} rows, need {horizon}", rows.len())));
    }
    let rows = &rows[..horizon];
    let base = |outcome, value: String| {
        VerificationReport::new("regular", outcome, value, "exact").param("rows", horizon).param("bound", 2)
    };
    for (n, c) in rows.iter().enumerate() {
        let abs: Rational = c.entries().values().map(|v| v.abs()).sum();
        if abs >= rat(2, 1) {
            return Ok(base(Outcome::Fail, format!("abs_sum:{}", format_rational(&abs))).detail(format!("row {n} absolute sum reaches the bound")));
        }
        let sum: Rational = c.entries().values().sum();
        if !sum.is_one() {
            return Ok(base(Outcome::Fail, format!("row_sum:{}", format_rational(&sum))).detail(format!("row {n} does not sum to 1")));
        }
    }
    // a column is eventually zero once some row starts beyond it and all
    // later rows do too, which strictly increasing mdn guarantees
    for n in 1..rows.len() {
        if rows[n].mdn() <= rows[n - 1].mdn() {
            let col = rows[n].mdn();
            let touching = rows.iter().filter(|c| c.get(col) != Rational::zero()).count();
            return Ok(base(Outcome::Fail, format!("column:{col}"))
                .detail(format!("mdn does not increase at row {n}; column {col} is touched by {touching} of the first {horizon} rows and never vanishes")));
        }
    }
    let last_col = rows.iter().map(Creature::max_support).max().unwrap_or(0);
    let mut last_touch = vec![0usize; last_col + 1];
    for (n, c) in rows.iter().enumerate() {
        for (&j, v) in c.entries() {
            if !v.is_zero() {
                last_touch[j] = n;
            }
        }
    }
    let latest = last_touch.iter().max().copied().unwrap_or(0);
    Ok(base(Outcome::Pass, format!("row_sum:1,abs_sum:1,columns:{},last_touch:{latest}", last_col + 1)))
}

/// `aver(η, c_n)` for `n < rows` and, for each `k` up to `k_max`, the least
/// `N` with oscillation at most `3/2^k` over `[N, rows)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlimTrace {
    pub values: Vec<Rational>,
    /// `(k, N)`; `None` when no `N ≤ rows/2` works.
    pub settle: Vec<(u32, Option<usize>)>,
}

/// `max - min` of `values[from..]`.
pub fn oscillation_from(values: &[Rational], from: usize) -> Rational {
    let tail = &values[from.min(values.len())..];
    match (tail.iter().max(), tail.iter().min()) {
        (Some(hi), Some(lo)) => hi - lo,
        _ => Rational::zero(),
    }
}

/// Least `N ≤ len/2` with oscillation over `[N, len)` at most `bound`.
pub fn settle_index(values: &[Rational], bound: &Rational) -> Option<usize> {
    let n = values.len();
    let mut hi = vec![Rational::zero(); n + 1];
    let mut lo = vec![Rational::zero(); n + 1];
    let mut first = None;
    for i in (0..n).rev() {
        let v = &values[i];
        let (h, l) = if i + 1 == n { (v.clone(), v.clone()) } else { ((&hi[i + 1]).max(v).clone(), (&lo[i + 1]).min(v).clone()) };
        hi[i] = h;
        lo[i] = l;
        if &hi[i] - &lo[i] <= *bound {
            first = Some(i);
        } else {
            break;
        }
    }
    match first {
        Some(i) if i <= n / 2 => Some(i),
        None if n == 0 => Some(0),
        _ => None,
    }
}

pub fn alim_trace(matrix: &ToeplitzMatrix, source: &SequenceSource, rows: usize, seed: Option<u64>, k_max: u32) -> Result<AlimTrace> {
    if rows > matrix.len() {
        return Err(Error::Param(format!("matrix has {} rows, asked for {rows}", matrix.len())));
    }
    let rows = &matrix.rows()[..rows];
    let need = rows.iter().map(Creature::max_support).max().map_or(0, |m| m + 1);
    let eta = if source.is_random() {
        let seed = seed.ok_or_else(|| Error::Param(format!("random name `{}` needs a seed", source.name)))?;
        source.sample_name(seed, need.max(1))?
    } else {
        source.prefix(need)?
    };
    let values = rows.iter().map(|c| c.aver::<Rational>(&eta)).collect::<Result<Vec<_>>>()?;
    let settle = (0..=k_max).map(|k| (k, settle_index(&values, &(rat(3, 1) * dyadic(1, k))))).collect();
    Ok(AlimTrace { values, settle })
}

/// For each level recorded in the matrix, whether the oscillation of the
/// trace beyond the recorded row is at most `3/2^k`.
pub fn check_convergence(matrix: &ToeplitzMatrix, source: &SequenceSource, seed: Option<u64>) -> Result<VerificationReport> {
    let levels = matrix.level_rows();
    let k_max = levels.iter().map(|(k, _)| *k).max().unwrap_or(0);
    let trace = alim_trace(matrix, source, matrix.len(), seed, k_max)?;
    let mut worst: Option<(u32, usize, Rational)> = None;
    let mut unrecorded = Vec::new();
    for (k, n) in &levels {
        let Some(n) = n else {
            unrecorded.push(*k);
            continue;
        };
        let osc = oscillation_from(&trace.values, *n);
        if osc > rat(3, 1) * dyadic(1, *k) && worst.is_none() {
            worst = Some((*k, *n, osc));
        }
    }
    let settled: Vec<String> = trace.settle.iter().map(|(k, n)| format!("{k}:{}", n.map_or("none".into(), |n| n.to_string()))).collect();
    let mut report = match &worst {
        Some((k, n, osc)) => VerificationReport::new("convergence", Outcome::Fail, settled.join(","), "exact")
            .detail(format!("level {k}: oscillation {} beyond row {n} exceeds 3/2^{k}", format_rational(osc))),
        None if !unrecorded.is_empty() => VerificationReport::new("convergence", Outcome::Inconclusive, settled.join(","), "exact")
            .detail(format!("no recorded row for levels {unrecorded:?}")),
        None => VerificationReport::new("convergence", Outcome::Pass, settled.join(","), "exact"),
    };
    report = report.param("source", &source.name).param("rows", matrix.len());
    if let Some(s) = seed.filter(|_| source.is_random()) {
        report = report.param("seed", s).detail(ADAPTER_NOTE);
    }
    Ok(report)
}

/// `err(Σ d_s c_s) ≤ Σ d_s err(c_s)`.
pub fn check_convexity(
    source: &SequenceSource,
    k: u32,
    i: u64,
    parts: &[Creature],
    weights: &[Rational],
    mode: ErrMode,
) -> Result<VerificationReport> {
    let c = compose(parts, weights)?;
    let params = |r: VerificationReport| {
        r.param("source", &source.name).param("k", k).param("i", i).param("parts", parts.len())
    };
    match mode {
        ErrMode::Estimate { samples, seed } if source.is_random() => {
            if samples == 0 {
                return Err(Error::Param("samples must be at least 1".into()));
            }
            let target = dyadic(i, k);
            // every sample compares exact averages on the same bitstream
            let (lhs, rhs) = (0..samples)
                .into_par_iter()
                .map(|s| {
                    let stream = Bitstream::for_sample(seed, s);
                    let bit = |p: u64| stream.bit(p);
                    let eta = |j: usize| source.eval_on(j as u64, &bit).expect("random name");
                    let e = |c: &Creature| (c.aver_with::<Rational>(eta) - &target).abs();
                    let rhs: Rational = parts.iter().zip(weights).map(|(p, d)| d * e(p)).sum();
                    (e(&c), rhs)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold((Rational::zero(), Rational::zero()), |(a, b), (x, y)| (a + x, b + y));
            let n = Rational::from_integer(BigInt::from(samples));
            let (lhs, rhs) = (lhs / &n, rhs / &n);
            let hw = hoeffding_half_width(samples, 1.0);
            let gap = rational_to_f64(&(&lhs - &rhs));
            let outcome = if lhs <= rhs {
                Outcome::Pass
            } else if gap > 2.0 * hw {
                Outcome::Fail
            } else {
                Outcome::Inconclusive
            };
            let value = format!("lhs:{:.9},rhs:{:.9}", rational_to_f64(&lhs), rational_to_f64(&rhs));
            Ok(params(VerificationReport::new("convexity", outcome, value, ci_text(hw, samples)))
                .param("samples", samples)
                .param("seed", seed)
                .detail(ADAPTER_NOTE))
        }
        _ => {
            let lhs = exact_err(source, k, i, &c, mode)?;
            let mut rhs = Rational::zero();
            for (p, d) in parts.iter().zip(weights) {
                rhs += d * exact_err(source, k, i, p, mode)?;
            }
            let outcome = if lhs <= rhs { Outcome::Pass } else { Outcome::Fail };
            let value = format!("lhs:{},rhs:{}", format_rational(&lhs), format_rational(&rhs));
            let mut r = params(VerificationReport::new("convexity", outcome, value, "exact"));
            if outcome == Outcome::Fail {
                r = r.detail(format!("composition {c} violates the inequality"));
            }
            Ok(r)
        }
    }
}

fn exact_err(source: &SequenceSource, k: u32, i: u64, c: &Creature, mode: ErrMode) -> Result<Rational> {
    match err(source, k, i, c, mode)? {
        ErrValue::Exact(r) | ErrValue::Enumerated(r) => Ok(r),
        ErrValue::Estimated { .. } => Err(Error::Param("exact comparison needs an exact mode".into())),
    }
}

/// Creatures rescaled to integer numerators over one common denominator.
struct Scaled<T> {
    den: T,
    rows: Vec<Vec<(usize, T)>>,
}

fn common_denominator<'a>(rows: impl IntoIterator<Item = &'a Creature>) -> BigInt {
    rows.into_iter()
        .flat_map(|c| c.entries().values())
        .fold(BigInt::one(), |l, v| l.lcm(v.denom()))
}

impl<T: Clone + Signed + From<i64>> Scaled<T> {
    fn aver(&self, row: usize, eta: impl Fn(usize) -> bool) -> T {
        self.rows[row].iter().filter(|(j, _)| eta(*j)).fold(T::zero(), |acc, (_, n)| acc + n.clone())
    }
}

fn scale_i128(rows: &[&Creature]) -> Option<Scaled<i128>> {
    let den = common_denominator(rows.iter().copied());
    // sums stay below den; the threshold test multiplies by at most 2^20
    if den.bits() > 100 {
        return None;
    }
    let d = den.to_i128()?;
    let rows = rows
        .iter()
        .map(|c| c.entries().iter().map(|(&j, v)| (j, (v * &den).to_integer().to_i128().expect("fits"))).collect())
        .collect();
    Some(Scaled { den: d, rows })
}

fn scale_big(rows: &[&Creature]) -> Scaled<BigInt> {
    let den = common_denominator(rows.iter().copied());
    let rows = rows.iter().map(|c| c.entries().iter().map(|(&j, v)| (j, (v * &den).to_integer())).collect()).collect();
    Scaled { den, rows }
}

/// `|a - b| ≥ 3/2^k` on scaled averages: `2^k |a - b| ≥ 3 den`.
fn far<T: Clone + Signed + From<i64> + PartialOrd>(a: T, b: T, den: &T, k: u32) -> bool {
    let pow = (0..k).fold(T::from(1), |acc, _| acc * T::from(2));
    (a - b).abs() * pow >= T::from(3) * den.clone()
}

fn event_count<T: Clone + Signed + From<i64> + PartialOrd + Send + Sync>(
    scaled: &Scaled<T>,
    source: &SequenceSource,
    k: u32,
    samples: u64,
    seed: u64,
) -> u64 {
    (0..samples)
        .into_par_iter()
        .filter(|&s| {
            let stream = Bitstream::for_sample(seed, s);
            let bit = |p: u64| stream.bit(p);
            let eta = |j: usize| source.eval_on(j as u64, &bit).expect("values on a bitstream");
            far(scaled.aver(0, eta), scaled.aver(1, eta), &scaled.den, k)
        })
        .count() as u64
}

/// `Leb{r : |aver(f(r), c1) - aver(f(r), c0)| ≥ 3/2^k}` against `bound`.
///
/// Small dependency windows are enumerated and compared strictly
/// (`measure < bound`); otherwise `samples` bitstreams give an estimate with
/// a 99% Hoeffding interval: pass iff `est + hw ≤ bound`, fail iff
/// `est - hw > bound`.
pub fn mc_measure_bound(
    c0: &Creature,
    c1: &Creature,
    source: &SequenceSource,
    k: u32,
    bound: &Rational,
    samples: u64,
    seed: u64,
) -> Result<VerificationReport> {
    if samples == 0 {
        return Err(Error::Param("samples must be at least 1".into()));
    }
    if k > 20 {
        return Err(Error::Param(format!("level {k} exceeds 20")));
    }
    let pair = [c0, c1];
    let with_params = |r: VerificationReport| {
        r.param("source", &source.name).param("k", k).param("bound", format_rational(bound))
    };
    let window: Option<Vec<u64>> = if source.is_random() {
        let idx = c0.support().into_iter().chain(c1.support()).map(|j| j as u64);
        let w: Vec<u64> = source.dependency_window_of(idx)?.into_iter().collect();
        (w.len() <= ENUM_MAX_BITS).then_some(w)
    } else {
        Some(Vec::new())
    };
    if let Some(window) = window {
        let scaled = scale_big(&pair);
        let total = 1u64 << window.len();
        let hits = (0..total)
            .into_par_iter()
            .filter(|&assignment| {
                let bit = |p: u64| {
                    let idx = window.binary_search(&p).expect("position inside window");
                    assignment >> idx & 1 == 1
                };
                let eta = |j: usize| source.eval_on(j as u64, &bit).expect("values on an assignment");
                far(scaled.aver(0, eta), scaled.aver(1, eta), &scaled.den, k)
            })
            .count() as u64;
        let measure = Rational::new(BigInt::from(hits), BigInt::from(total));
        let outcome = if measure < *bound { Outcome::Pass } else { Outcome::Fail };
        let mut r = with_params(VerificationReport::new("measure", outcome, format_rational(&measure), "exact")).param("bits", window.len());
        if outcome == Outcome::Fail {
            r = r.detail(format!("measure is not below the bound; c0={c0} c1={c1}"));
        } else if source.is_random() {
            r = r.detail(ADAPTER_NOTE);
        }
        return Ok(r);
    }
    let hits = match scale_i128(&pair) {
        Some(s) => event_count(&s, source, k, samples, seed),
        None => event_count(&scale_big(&pair), source, k, samples, seed),
    };
    let est = hits as f64 / samples as f64;
    let hw = hoeffding_half_width(samples, 1.0);
    let b = rational_to_f64(bound);
    let outcome = if est + hw <= b {
        Outcome::Pass
    } else if est - hw > b {
        Outcome::Fail
    } else {
        Outcome::Inconclusive
    };
    let mut r = with_params(VerificationReport::new("measure", outcome, format!("{est:.9}"), ci_text(hw, samples)))
        .param("samples", samples)
        .param("seed", seed)
        .param("hits", hits);
    r = if outcome == Outcome::Fail {
        r.detail(format!("estimate exceeds the bound by more than the interval; c0={c0} c1={c1}"))
    } else {
        r.detail(ADAPTER_NOTE)
    };
    Ok(r)
}

/// `Σ_{ℓ ≥ k0} 1/ℓ!` as `e - Σ_{ℓ<k0} 1/ℓ!`.
pub fn factorial_tail_closed(k0: usize) -> f64 {
    let mut head = 0.0;
    let mut term = 1.0;
    for l in 0..k0 {
        if l > 0 {
            term /= l as f64;
        }
        head += term;
    }
    std::f64::consts::E - head
}

/// `Σ_{ℓ ≥ k0} 1/ℓ!` by exact partial sums until terms drop below `2^-80`.
pub fn factorial_tail_partial(k0: usize) -> f64 {
    let mut term = Rational::one();
    for l in 1..=k0 {
        term /= Rational::from_integer(BigInt::from(l));
    }
    let cutoff = Rational::new(BigInt::one(), BigInt::one() << 80u32);
    let mut sum = Rational::zero();
    let mut l = k0;
    while term >= cutoff {
        sum += &term;
        l += 1;
        term /= Rational::from_integer(BigInt::from(l));
    }
    rational_to_f64(&sum)
}

/// Outcome of one sampled bitstream in [`borel_cantelli_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModulusSample {
    /// Least `K` with consecutive rows closer than `3/2^k` from `K` on;
    /// `None` when it is beyond half the rows.
    pub modulus: Option<usize>,
}

pub fn modulus_indices(matrix: &ToeplitzMatrix, source: &SequenceSource, k: u32, samples: u64, seed: u64, rows: usize) -> Result<Vec<ModulusSample>> {
    if samples == 0 {
        return Err(Error::Param("samples must be at least 1".into()));
    }
    if k > 20 {
        return Err(Error::Param(format!("level {k} exceeds 20")));
    }
    let rows = rows.min(matrix.len());
    let refs: Vec<&Creature> = matrix.rows()[..rows].iter().collect();
    fn run<T: Clone + Signed + From<i64> + PartialOrd + Send + Sync>(
        s: &Scaled<T>,
        source: &SequenceSource,
        k: u32,
        samples: u64,
        seed: u64,
    ) -> Vec<ModulusSample> {
        let n = s.rows.len();
        (0..samples)
            .into_par_iter()
            .map(|smp| {
                let stream = Bitstream::for_sample(seed, smp);
                let bit = |p: u64| stream.bit(p);
                let eta = |j: usize| source.eval_on(j as u64, &bit).expect("values on a bitstream");
                let avers: Vec<T> = (0..n).map(|r| s.aver(r, eta)).collect();
                let last_far = (0..n.saturating_sub(1)).rev().find(|&l| far(avers[l].clone(), avers[l + 1].clone(), &s.den, k));
                let big_k = last_far.map_or(0, |l| l + 1);
                ModulusSample { modulus: (big_k <= n.saturating_sub(1) / 2).then_some(big_k) }
            })
            .collect()
    }
    Ok(match scale_i128(&refs) {
        Some(s) => run(&s, source, k, samples, seed),
        None => run(&scale_big(&refs), source, k, samples, seed),
    })
}

/// Fraction of sampled bitstreams whose consecutive-row differences stay
/// below `3/2^k` from some `K ≤ (rows-1)/2` on, with the factorial tail bound
/// from `K₀ = max(1, k)`.
pub fn borel_cantelli_report(matrix: &ToeplitzMatrix, source: &SequenceSource, k: u32, samples: u64, seed: u64, rows: usize) -> Result<VerificationReport> {
    let ms = modulus_indices(matrix, source, k, samples, seed, rows)?;
    let finite: Vec<usize> = ms.iter().filter_map(|m| m.modulus).collect();
    let fraction = finite.len() as f64 / samples as f64;
    let hw = hoeffding_half_width(samples, 1.0);
    let outcome = if fraction >= SETTLED_FRACTION {
        Outcome::Pass
    } else if fraction + hw < SETTLED_FRACTION {
        Outcome::Fail
    } else {
        Outcome::Inconclusive
    };
    let mut sorted = finite.clone();
    sorted.sort_unstable();
    let q = |p: f64| sorted.get(((sorted.len() as f64 - 1.0) * p).round() as usize).map_or("none".to_string(), |v| v.to_string());
    let k0 = (k as usize).max(1);
    let value = format!(
        "fraction:{fraction:.6},k_median:{},k_p99:{},k_max:{},tail_closed:{:.12e},tail_partial:{:.12e}",
        q(0.5),
        q(0.99),
        sorted.last().map_or("none".to_string(), |v| v.to_string()),
        factorial_tail_closed(k0),
        factorial_tail_partial(k0)
    );
    let mut r = VerificationReport::new("borel-cantelli", outcome, value, ci_text(hw, samples))
        .param("source", &source.name)
        .param("k", k)
        .param("rows", rows.min(matrix.len()))
        .param("samples", samples)
        .param("seed", seed)
        .param("k0", k0);
    r = if outcome == Outcome::Fail {
        let bad = ms.iter().position(|m| m.modulus.is_none()).unwrap_or(0);
        r.detail(format!("sample {bad} has no modulus within the rows; {ADAPTER_NOTE}"))
    } else {
        r.detail(ADAPTER_NOTE)
    };
    Ok(r)
}

//! One refinement pass toward a single grid point, and the per-level loop
//! over all grid points.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::condition::{check_leq_i, find_leq_witness, Condition, OrderWitness};
use crate::creature::{compose, Creature};
use crate::error::{Error, Result};
use crate::extension::{admissible_numerators, to_weights, weight_vectors_from};
use crate::sequence::SequenceSource;
use crate::synthesis::law::Law;
use crate::synthesis::sampler::{mixed_err, PathSampler};
use crate::synthesis::schedule::SynthesisSchedule;

/// How one new row was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    /// Index of the new row.
    pub row: usize,
    /// First stage of the stabilized window.
    pub stage: usize,
    pub stage_value: f64,
    /// Row index in the input where the chosen block starts.
    pub block_start: usize,
    pub block_len: usize,
    pub err: f64,
    pub eps: f64,
}

impl StageRecord {
    /// `stage_value - eps ≤ err ≤ stage_value + eps`.
    pub fn within(&self) -> bool {
        self.err <= self.stage_value + self.eps && self.err >= self.stage_value - self.eps
    }
}

#[derive(Debug, Clone)]
pub struct PassOutcome {
    pub cond: Condition,
    /// Rows ending at or below this position were built by the pass.
    pub guaranteed_until: usize,
    pub records: Vec<StageRecord>,
}

struct Flat {
    start: usize,
    len: usize,
    nums: Vec<u64>,
    err: f64,
}

/// `min` over each window `[lo_s, lo_s + width)` of `vals`, for
/// non-decreasing `lo_s`.
fn window_minima(vals: &[f64], lows: &[usize], width: usize) -> Vec<f64> {
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    let mut out = Vec::with_capacity(lows.len());
    for &lo in lows {
        let hi = (lo + width).min(vals.len());
        while next < hi {
            while dq.back().is_some_and(|&b| vals[b] >= vals[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f < lo) {
            dq.pop_front();
        }
        out.push(dq.front().map_or(f64::INFINITY, |&f| vals[f]));
    }
    out
}

/// Builds `q₁ ≥_{k*} p` for the grid point `i/2^k`.
pub fn build_q1(
    p: &Condition,
    source: &SequenceSource,
    k: u32,
    i: u64,
    k_star: u32,
    schedule: &SynthesisSchedule,
) -> Result<PassOutcome> {
    let sampler = PathSampler::new(source, schedule.horizon(), schedule.samples, schedule.seed)?;
    build_q1_with(p, &sampler, k, i, k_star, schedule, schedule.horizon())
}

/// As [`build_q1`], with candidates restricted to rows ending at or below
/// `reach`: the region earlier passes have already built.
pub fn build_q1_with(
    p: &Condition,
    sampler: &PathSampler,
    k: u32,
    i: u64,
    k_star: u32,
    schedule: &SynthesisSchedule,
    reach: usize,
) -> Result<PassOutcome> {
    schedule.validate()?;
    if k >= 63 || i > 1u64 << k {
        return Err(Error::Param(format!("grid index {i} exceeds 2^{k}")));
    }
    let search = &schedule.search;
    let den = search.weight_den;
    let rows = p.rows_below(search.horizon);
    let keep = p.trunk_len() + k_star as usize;
    if keep > rows.len() {
        return Err(Error::Exhausted(format!("only {} rows end below horizon {}, need {keep}", rows.len(), search.horizon)));
    }
    let x = i as f64 / (1u64 << k) as f64;
    let n = rows.iter().take_while(|c| c.mup() <= reach).count().max(keep);

    let allowed: Vec<Vec<u64>> = rows[keep..n].par_iter().map(|c| admissible_numerators(c, den)).collect();
    let laws: Vec<Law> = if sampler.is_exact() {
        rows[keep..n].par_iter().map(|c| sampler.law(c)).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let avers: Vec<Vec<f64>> = if sampler.is_exact() {
        Vec::new()
    } else {
        rows[keep..n].par_iter().map(|c| sampler.avers_f64(c)).collect()
    };
    let per_start: Vec<Vec<Flat>> = (keep..n)
        .into_par_iter()
        .map(|t| {
            let mut out = Vec::new();
            for len in 1..=search.max_block.min(n - t) {
                for nums in weight_vectors_from(&allowed[t - keep..t - keep + len], den) {
                    let err = if sampler.is_exact() {
                        let parts: Vec<&Law> = laws[t - keep..t - keep + len].iter().collect();
                        sampler.mixed_law_err(&rows[t..t + len], &parts, &nums, den, x)?
                    } else {
                        let parts: Vec<&[f64]> = (t..t + len).map(|j| avers[j - keep].as_slice()).collect();
                        let w: Vec<f64> = nums.iter().map(|&a| a as f64 / den as f64).collect();
                        mixed_err(&parts, &w, x)
                    };
                    out.push(Flat { start: t, len, nums, err });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut lows = Vec::with_capacity(per_start.len());
    let mut flat = Vec::new();
    for cands in per_start {
        lows.push(flat.len());
        flat.extend(cands);
    }
    let errs: Vec<f64> = flat.iter().map(|f| f.err).collect();
    // stage[s - keep] = min err over the first `budget` candidates from row s on
    let stage = window_minima(&errs, &lows, search.budget);

    let mut out: Vec<Creature> = rows[..keep].to_vec();
    let mut records = Vec::new();
    let mut cursor = keep;
    let floor = sampler.resolution(search.budget);
    // last value stabilized over a full window; rows whose windows are cut
    // short by the end of the reachable region are held to it
    let mut reference: Option<f64> = None;
    loop {
        let ell = out.len();
        let eps = (1.0 / ell.max(1) as f64).max(floor);
        let mut s = cursor;
        let mut found = None;
        while s < n && rows[s].mdn() < schedule.stage_limit {
            if s + schedule.window > n {
                found = reference;
                break;
            }
            let w = &stage[s - keep..s + schedule.window - keep];
            let hi = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
            if hi - lo < eps {
                found = Some(w[0]);
                reference = found;
                break;
            }
            s += 1;
        }
        let pick = found.and_then(|value| {
            let lo = lows[s - keep];
            let hi = (lo + search.budget).min(flat.len());
            (lo..hi).find(|&j| flat[j].err <= value + eps).map(|j| (j, value))
        });
        let Some((pick, value)) = pick else {
            // the rest of the reachable region becomes zero padding
            if out.len() > keep && cursor < n && rows[s.min(n - 1)].mdn() < schedule.stage_limit {
                let last = out.pop().expect("a new row exists");
                out.push(last.pad_with_zeroes(rows[n - 1].mup())?);
                cursor = n;
            }
            break;
        };
        let cand = &flat[pick];
        let mut c = compose(&rows[cand.start..cand.start + cand.len], &to_weights(&cand.nums, den))?;
        if cand.start > cursor {
            if out.len() > keep {
                let last = out.pop().expect("a new row exists");
                out.push(last.pad_with_zeroes(rows[cand.start].mdn())?);
            } else {
                c = c.pad_left(rows[cursor].mdn())?;
            }
        }
        records.push(StageRecord {
            row: ell,
            stage: s,
            stage_value: value,
            block_start: cand.start,
            block_len: cand.len,
            err: cand.err,
            eps,
        });
        out.push(c);
        cursor = cand.start + cand.len;
    }
    let guaranteed_until = out.last().map_or(p.start(), Creature::mup);
    let built = out.len();
    out.extend_from_slice(&rows[cursor..]);
    if rows.len() < p.explicit_len() {
        out.extend_from_slice(&p.rows()[rows.len()..]);
    }
    // carried-over point masses at the end coincide with the tail
    while out.len() > built.max(p.trunk_len()) && out.last().is_some_and(Creature::is_point_mass) {
        out.pop();
    }
    let cond = Condition::with_start(p.trunk_len(), p.start(), out)?;
    Ok(PassOutcome { cond, guaranteed_until, records })
}

#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub cond: Condition,
    pub guaranteed_until: usize,
    /// `(i, new rows, guaranteed_until)` per pass.
    pub passes: Vec<(u64, usize, usize)>,
    pub witness: OrderWitness,
}

/// `q^k`: passes for `i = 0, 1, ..., 2^k`, each starting from the previous
/// output, with `p ≤_{k*} q^k` certified at the end.
pub fn refine_levels(p: &Condition, source: &SequenceSource, k: u32, k_star: u32, schedule: &SynthesisSchedule) -> Result<LevelOutcome> {
    let sampler = PathSampler::new(source, schedule.horizon(), schedule.samples, schedule.seed)?;
    refine_levels_with(p, &sampler, k, k_star, schedule, schedule.horizon())
}

pub fn refine_levels_with(
    p: &Condition,
    sampler: &PathSampler,
    k: u32,
    k_star: u32,
    schedule: &SynthesisSchedule,
    reach: usize,
) -> Result<LevelOutcome> {
    let mut cond = p.clone();
    let mut guaranteed_until = reach;
    let mut passes = Vec::new();
    for i in 0..=(1u64 << k) {
        let pass = build_q1_with(&cond, sampler, k, i, k_star, schedule, guaranteed_until)?;
        guaranteed_until = guaranteed_until.min(pass.guaranteed_until);
        passes.push((i, pass.records.len(), pass.guaranteed_until));
        cond = pass.cond;
    }
    let witness = find_leq_witness(p, &cond).ok_or_else(|| Error::Witness("refined condition is not above its input".into()))?;
    check_leq_i(p, &cond, k_star as usize, &witness).map_err(Error::Witness)?;
    Ok(LevelOutcome { cond, guaranteed_until, passes, witness })
}

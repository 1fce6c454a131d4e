//! Per-level pipelines over a family and the diagonal assembly of the final
//! matrix from the per-level row reservoirs.

use crate::condition::{find_star_witness, Condition, StarWitness};
use crate::error::{Error, Result};
use crate::matrix::ToeplitzMatrix;
use crate::sequence::SequenceFamily;
use crate::synthesis::amalgamate::amalgamate;
use crate::synthesis::q1::refine_levels_with;
use crate::synthesis::sampler::PathSampler;
use crate::synthesis::schedule::SynthesisSchedule;
use crate::synthesis::thin::thin_factorial;

/// The thinned condition `q(k)` of one level and its bookkeeping.
#[derive(Debug, Clone)]
pub struct Reservoir {
    pub k: u32,
    pub cond: Condition,
    /// Rows below this index meet the factorial thinning bound.
    pub certified: usize,
    /// Rows from this index on are compositions of the last chain element.
    pub settled: usize,
    /// Rows below this index were built by every pass of the level.
    pub guaranteed: usize,
    pub relabel: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub matrix: ToeplitzMatrix,
    pub reservoirs: Vec<Reservoir>,
    /// `(level, reservoir row)` for each matrix row.
    pub origins: Vec<(u32, usize)>,
    /// `(k, N_k)`: from row `N_k` on, every row comes from a settled row of a
    /// level `≥ k`.
    pub level_rows: Vec<(u32, Option<usize>)>,
}

/// Level serving `ε = 1/(k'+1)`: least `k` with `3/2^k ≤ ε`, clamped.
pub fn level_for_row(kp: usize, k_star: u32, k_max: u32) -> u32 {
    let need = 3 * (kp as u128 + 1);
    let mut k = 0u32;
    while (1u128 << k) < need {
        k += 1;
    }
    k.clamp(k_star, k_max)
}

pub fn synthesize_matrix(family: &SequenceFamily, schedule: &SynthesisSchedule) -> Result<Synthesis> {
    schedule.validate()?;
    let horizon = schedule.horizon();
    let samplers = family
        .sources
        .iter()
        .map(|s| PathSampler::new(s, horizon, schedule.samples, schedule.seed))
        .collect::<Result<Vec<_>>>()?;
    let mut start = Condition::with_start(0, 0, Vec::new())?;
    let mut reach = horizon;
    let mut reservoirs = Vec::new();
    for k in schedule.levels() {
        let mut chain = vec![start.clone()];
        let mut links: Vec<StarWitness> = Vec::new();
        let mut guaranteed_until = reach;
        for sampler in &samplers {
            let out = refine_levels_with(chain.last().expect("non-empty"), sampler, k, schedule.k_star, schedule, guaranteed_until)?;
            guaranteed_until = guaranteed_until.min(out.guaranteed_until);
            links.push(StarWitness { mistake: 0, trunk: out.cond.trunk().to_vec(), order: out.witness });
            chain.push(out.cond);
        }
        let amalgam = amalgamate(&chain, &links)?;
        let thin = thin_factorial(&amalgam.cond, k, guaranteed_until, horizon)?;
        let last = chain.last().expect("non-empty");
        let settled = find_star_witness(last, &thin.cond, thin.cond.explicit_len() + 1)
            .ok_or_else(|| Error::Witness(format!("level {k} reservoir is not ≥* its last chain element")))?
            .mistake;
        let guaranteed = thin.cond.rows().iter().take_while(|c| c.mup() <= guaranteed_until).count();
        reservoirs.push(Reservoir {
            k,
            cond: thin.cond,
            certified: thin.certified,
            settled,
            guaranteed,
            relabel: thin.relabel,
        });
        start = amalgam.cond;
        reach = guaranteed_until;
    }
    assemble(family, schedule, reservoirs)
}

fn assemble(family: &SequenceFamily, schedule: &SynthesisSchedule, reservoirs: Vec<Reservoir>) -> Result<Synthesis> {
    let by_level = |k: u32| &reservoirs[(k - schedule.k_star) as usize];
    let pick = |kp: usize| {
        let r = by_level(level_for_row(kp, schedule.k_star, schedule.k_max));
        (kp < r.guaranteed).then(|| (r.k, r.cond.rows()[kp].clone()))
    };
    let mut rows = Vec::new();
    let mut origins = Vec::new();
    if let Some((k, c)) = pick(0) {
        rows.push(c);
        origins.push((k, 0));
    }
    'rows: while !rows.is_empty() {
        let m = rows.len();
        let prev = rows[m - 1].mdn();
        let mut kp = m + 1;
        loop {
            let Some((k, c)) = pick(kp) else { break 'rows };
            if c.mdn() > prev {
                rows.push(c);
                origins.push((k, kp));
                break;
            }
            kp += 1;
        }
    }
    if rows.is_empty() {
        return Err(Error::Exhausted("no reservoir row is available for the first matrix row".into()));
    }
    let level_rows: Vec<(u32, Option<usize>)> = schedule
        .levels()
        .map(|k| {
            let ok = |(lvl, row): &(u32, usize)| *lvl >= k && *row >= by_level(*lvl).settled;
            let n = origins.iter().rposition(|o| !ok(o)).map_or(0, |j| j + 1);
            (k, (n < origins.len()).then_some(n))
        })
        .collect();
    let mut provenance = vec![
        format!("schedule {schedule}"),
        format!("family {}", family.sources.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(",")),
    ];
    for r in &reservoirs {
        let first = level_rows.iter().find(|(k, _)| *k == r.k).and_then(|(_, n)| *n);
        provenance.push(format!(
            "level k={} certified={} settled={} guaranteed={} first_row={}",
            r.k,
            r.certified,
            r.settled,
            r.guaranteed,
            first.map_or("none".to_string(), |n| n.to_string())
        ));
    }
    provenance.push(format!(
        "origins {}",
        origins.iter().map(|(k, r)| format!("{k}:{r}")).collect::<Vec<_>>().join(" ")
    ));
    let matrix = ToeplitzMatrix::new(rows, provenance)?;
    Ok(Synthesis { matrix, reservoirs, origins, level_rows })
}

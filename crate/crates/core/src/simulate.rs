//! Trajectory generation through hidden MDP instances and count accumulation,
//! including pooled counts under parameter tying.

use crate::imdp::Policy;
use crate::model::{MdpInstance, ParametricMdp};
use crate::rng::SeedStream;
use rand::Rng;
use std::collections::HashMap;
use std::io::Write;

/// Visit and outcome counts accumulated from trajectories.
///
/// `visits[s][a]` is the number of times action `a` was chosen in `s`;
/// `outcomes[s][a][i]` counts arrivals at the i-th successor of the row,
/// aligned with the model's transition lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub visits: Vec<Vec<u64>>,
    pub outcomes: Vec<Vec<Vec<u64>>>,
}

impl CountTable {
    pub fn zeros(pmdp: &ParametricMdp) -> CountTable {
        CountTable {
            visits: pmdp.actions.iter().map(|a| vec![0; a.len()]).collect(),
            outcomes: pmdp
                .transitions
                .iter()
                .map(|rows| rows.iter().map(|r| vec![0; r.len()]).collect())
                .collect(),
        }
    }

    /// Bookkeeping identity: per (s, a) the outcome counts sum to the visits.
    pub fn consistent(&self) -> bool {
        self.visits.iter().zip(&self.outcomes).all(|(vs, os)| {
            vs.iter()
                .zip(os)
                .all(|(v, o)| o.iter().sum::<u64>() == *v)
        })
    }

    pub fn total_triples(&self) -> u64 {
        self.visits.iter().flatten().sum()
    }
}

/// Behavior used to pick actions during collection.
#[derive(Debug, Clone)]
pub enum BehaviorPolicy {
    /// Uniform over the enabled actions of the current state.
    UniformRandom,
    /// A fixed policy.
    Fixed(Policy),
    /// With probability `epsilon` explore uniformly, otherwise follow the policy.
    EpsilonMix(Policy, f64),
}

/// Episode budget and reset behavior.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrajectoryConfig {
    pub trajectories: u64,
    pub max_len: u32,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig { trajectories: 10_000, max_len: 200 }
    }
}

fn sample_index(weights: &[(usize, f64)], rng: &mut SeedStream) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, (_, w)) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn sample_initial(instance: &MdpInstance, rng: &mut SeedStream) -> usize {
    let i = sample_index(&instance.initial, rng);
    instance.initial[i].0
}

/// True when every action of `s` loops back to `s` with probability 1.
fn is_absorbing(instance: &MdpInstance, s: usize) -> bool {
    instance.kernel[s]
        .iter()
        .all(|row| row.len() == 1 && row[0].0 == s)
}

/// Collects transition counts from seeded episodes through `instance`.
///
/// Episodes restart from the initial distribution when a target, avoid or
/// absorbing state is reached, or after `max_len` steps. Identical inputs and
/// seed produce identical tables.
pub fn collect_counts(
    instance: &MdpInstance,
    behavior: &BehaviorPolicy,
    cfg: &TrajectoryConfig,
    rng: &mut SeedStream,
) -> CountTable {
    collect_counts_impl(instance, behavior, cfg, rng, None)
}

/// As [`collect_counts`], also dumping one `s a s'` line per observed triple.
pub fn collect_counts_dump(
    instance: &MdpInstance,
    behavior: &BehaviorPolicy,
    cfg: &TrajectoryConfig,
    rng: &mut SeedStream,
    sink: &mut dyn Write,
) -> std::io::Result<CountTable> {
    let mut err = None;
    let mut cb = |s: usize, a: usize, s2: usize| {
        if err.is_none() {
            if let Err(e) = writeln!(sink, "{} {} {}", s, a, s2) {
                err = Some(e);
            }
        }
    };
    let table = collect_counts_impl(instance, behavior, cfg, rng, Some(&mut cb));
    match err {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

fn collect_counts_impl(
    instance: &MdpInstance,
    behavior: &BehaviorPolicy,
    cfg: &TrajectoryConfig,
    rng: &mut SeedStream,
    mut dump: Option<&mut dyn FnMut(usize, usize, usize)>,
) -> CountTable {
    let n = instance.n_states;
    let mut visits: Vec<Vec<u64>> = instance.kernel.iter().map(|r| vec![0; r.len()]).collect();
    let mut outcomes: Vec<Vec<Vec<u64>>> = instance
        .kernel
        .iter()
        .map(|rows| rows.iter().map(|r| vec![0u64; r.len()]).collect())
        .collect();
    let stop: Vec<bool> = {
        let mut stop = vec![false; n];
        for &t in instance.objective.target() {
            stop[t] = true;
        }
        for &c in instance.objective.avoid() {
            stop[c] = true;
        }
        for (s, flag) in stop.iter_mut().enumerate() {
            *flag = *flag || is_absorbing(instance, s);
        }
        stop
    };

    for _ in 0..cfg.trajectories {
        let mut s = sample_initial(instance, rng);
        for _ in 0..cfg.max_len {
            if stop[s] {
                break;
            }
            let a = match behavior {
                BehaviorPolicy::UniformRandom => rng.gen_range(0..instance.kernel[s].len()),
                BehaviorPolicy::Fixed(pi) => pi.sample_action(s, rng),
                BehaviorPolicy::EpsilonMix(pi, eps) => {
                    if rng.gen::<f64>() < *eps {
                        rng.gen_range(0..instance.kernel[s].len())
                    } else {
                        pi.sample_action(s, rng)
                    }
                }
            };
            let row = &instance.kernel[s][a];
            let i = sample_index(row, rng);
            let s2 = row[i].0;
            visits[s][a] += 1;
            outcomes[s][a][i] += 1;
            if let Some(cb) = dump.as_mut() {
                cb(s, a, s2);
            }
            s = s2;
        }
    }
    CountTable { visits, outcomes }
}

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("tie class {tie:?} mixes structurally different expressions at ({s},{a})->{to}")]
    MixedClass { tie: String, s: usize, a: usize, to: usize },
}

/// Pools counts across tied transitions.
///
/// Every transition in a tie class receives the class-summed outcome count,
/// and its (s, a) visit count is replaced by the class-summed visit count for
/// interval construction. Untied transitions are unchanged. The original
/// table is not modified.
///
/// Pooled rows are no longer row-consistent in the [`CountTable::consistent`]
/// sense; they are a per-transition view for learners.
pub fn pool_tied_counts(
    pmdp: &ParametricMdp,
    counts: &CountTable,
) -> Result<PooledCounts, PoolError> {
    // Re-check class homogeneity; parse_model guards this, but pooled counts
    // may be built from hand-assembled models too.
    let mut class_expr: HashMap<&str, &crate::expr::ParamExpr> = HashMap::new();
    let mut class_sums: HashMap<&str, (u64, u64)> = HashMap::new();
    for (s, rows) in pmdp.transitions.iter().enumerate() {
        for (a, row) in rows.iter().enumerate() {
            for (i, t) in row.iter().enumerate() {
                if let Some(tie) = &t.tie {
                    match class_expr.get(tie.as_str()) {
                        None => {
                            class_expr.insert(tie, &t.expr);
                        }
                        Some(e) if **e == t.expr => {}
                        Some(_) => {
                            return Err(PoolError::MixedClass { tie: tie.clone(), s, a, to: t.to })
                        }
                    }
                    let e = class_sums.entry(tie).or_insert((0, 0));
                    e.0 += counts.outcomes[s][a][i];
                    e.1 += counts.visits[s][a];
                }
            }
        }
    }

    let mut pooled = PooledCounts {
        outcome: counts.outcomes.clone(),
        visit: Vec::with_capacity(pmdp.n_states),
    };
    for (s, rows) in pmdp.transitions.iter().enumerate() {
        let mut vrows = Vec::with_capacity(rows.len());
        for (a, row) in rows.iter().enumerate() {
            let mut vrow = Vec::with_capacity(row.len());
            for (i, t) in row.iter().enumerate() {
                if let Some(tie) = &t.tie {
                    let (k, h) = class_sums[tie.as_str()];
                    pooled.outcome[s][a][i] = k;
                    vrow.push(h);
                } else {
                    vrow.push(counts.visits[s][a]);
                }
            }
            vrows.push(vrow);
        }
        pooled.visit.push(vrows);
    }
    Ok(pooled)
}

/// Per-transition counts after pooling: each transition carries its own
/// effective visit count (the tied class total, or the raw (s,a) visits).
#[derive(Debug, Clone, PartialEq)]
pub struct PooledCounts {
    pub outcome: Vec<Vec<Vec<u64>>>,
    pub visit: Vec<Vec<Vec<u64>>>,
}

impl PooledCounts {
    /// Pools nothing: the per-transition view of a raw table.
    pub fn raw(counts: &CountTable) -> PooledCounts {
        PooledCounts {
            outcome: counts.outcomes.clone(),
            visit: counts
                .visits
                .iter()
                .zip(&counts.outcomes)
                .map(|(vs, os)| {
                    vs.iter()
                        .zip(os)
                        .map(|(v, o)| vec![*v; o.len()])
                        .collect()
                })
                .collect(),
        }
    }
}

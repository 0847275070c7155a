//! Robust dynamic programming over interval MDPs, exact value iteration over
//! concrete MDPs, interval merging, and policies.

use crate::learn::IntervalMdp;
use crate::model::{Direction, EvaluationSpec, MdpInstance, ObjectiveKind, Rewards};
use crate::rng::SeedStream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

/// Sup-norm residual at which value iteration stops.
pub const VI_TOL: f64 = 1e-9;
/// Iteration cap; exceeding it is a diagnostic error, not a silent return.
pub const VI_MAX_ITER: usize = 100_000;

/// A memoryless policy: a distribution over enabled actions per state.
/// Deterministic policies are point distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub choices: Vec<Vec<(usize, f64)>>,
}

impl Policy {
    /// Deterministic policy from an action index per state.
    pub fn deterministic(actions: Vec<usize>) -> Policy {
        Policy { choices: actions.into_iter().map(|a| vec![(a, 1.0)]).collect() }
    }

    pub fn sample_action(&self, s: usize, rng: &mut SeedStream) -> usize {
        let row = &self.choices[s];
        if row.len() == 1 {
            return row[0].0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(a, w) in row {
            acc += w;
            if u < acc {
                return a;
            }
        }
        row.last().unwrap().0
    }

    /// Checks distributions sum to 1 and reference enabled actions.
    pub fn validate(&self, actions: &[Vec<String>]) -> Result<(), ImdpError> {
        if self.choices.len() != actions.len() {
            return Err(ImdpError::PolicyShape {
                have: self.choices.len(),
                want: actions.len(),
            });
        }
        for (s, row) in self.choices.iter().enumerate() {
            let mut sum = 0.0;
            for &(a, w) in row {
                if a >= actions[s].len() {
                    return Err(ImdpError::PolicyAction { s, a });
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(ImdpError::PolicyWeight { s, w });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ImdpError::PolicySum { s, sum });
            }
        }
        Ok(())
    }
}

/// JSON form of a policy file: state index to action name, or to a map of
/// action names to probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyDocEntry {
    Deterministic(String),
    Stochastic(BTreeMap<String, f64>),
}

pub type PolicyDoc = BTreeMap<String, PolicyDocEntry>;

/// Parses a policy document against a model's action names.
pub fn policy_from_doc(doc: &PolicyDoc, actions: &[Vec<String>]) -> Result<Policy, ImdpError> {
    let mut choices: Vec<Vec<(usize, f64)>> = vec![Vec::new(); actions.len()];
    for (k, entry) in doc {
        let s: usize = k.parse().map_err(|_| ImdpError::PolicyState(k.clone()))?;
        if s >= actions.len() {
            return Err(ImdpError::PolicyState(k.clone()));
        }
        let find = |name: &str| -> Result<usize, ImdpError> {
            actions[s]
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| ImdpError::PolicyActionName { s, name: name.to_string() })
        };
        match entry {
            PolicyDocEntry::Deterministic(name) => choices[s] = vec![(find(name)?, 1.0)],
            PolicyDocEntry::Stochastic(map) => {
                let mut row = Vec::new();
                for (name, w) in map {
                    row.push((find(name)?, *w));
                }
                choices[s] = row;
            }
        }
    }
    // States not mentioned default to their first action.
    for row in choices.iter_mut() {
        if row.is_empty() {
            *row = vec![(0, 1.0)];
        }
    }
    let policy = Policy { choices };
    policy.validate(actions)?;
    Ok(policy)
}

pub fn policy_to_doc(policy: &Policy, actions: &[Vec<String>]) -> PolicyDoc {
    let mut doc = PolicyDoc::new();
    for (s, row) in policy.choices.iter().enumerate() {
        if row.len() == 1 {
            doc.insert(s.to_string(), PolicyDocEntry::Deterministic(actions[s][row[0].0].clone()));
        } else {
            doc.insert(
                s.to_string(),
                PolicyDocEntry::Stochastic(
                    row.iter().map(|&(a, w)| (actions[s][a].clone(), w)).collect(),
                ),
            );
        }
    }
    doc
}

/// Result of a (robust) value iteration.
#[derive(Debug, Clone)]
pub struct RobustResult {
    pub values: Vec<f64>,
    /// Expectation of the value under the initial distribution.
    pub value: f64,
    pub policy: Option<Policy>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ImdpError {
    #[error("support mismatch between interval MDPs at ({s},{a})")]
    SupportMismatch { s: usize, a: usize },
    #[error("value iteration did not converge after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("expected-reward objective is improper: state {0} cannot reach the target through the support")]
    ImproperCannotReach(usize),
    #[error("expected-reward objective is improper: states {0:?} can cycle without reaching the target")]
    ImproperCycle(Vec<usize>),
    #[error("infeasible interval row at ({s},{a})")]
    InfeasibleRow { s: usize, a: usize },
    #[error("policy has {have} states, model has {want}")]
    PolicyShape { have: usize, want: usize },
    #[error("policy at state {s} references action index {a} out of range")]
    PolicyAction { s: usize, a: usize },
    #[error("policy at state {s} names unknown action {name:?}")]
    PolicyActionName { s: usize, name: String },
    #[error("policy file references invalid state {0:?}")]
    PolicyState(String),
    #[error("policy weight {w} at state {s} outside [0,1]")]
    PolicyWeight { s: usize, w: f64 },
    #[error("policy row at state {s} sums to {sum}")]
    PolicySum { s: usize, sum: f64 },
}

// ---------------------------------------------------------------------------
// Merge
// ---------------------------------------------------------------------------

/// Pointwise interval hull of two interval MDPs over the same support:
/// `[a,b] | [c,d] = [min(a,c), max(b,d)]`. The result includes every MDP
/// included in either argument.
pub fn merge(a: &IntervalMdp, b: &IntervalMdp) -> Result<IntervalMdp, ImdpError> {
    if a.n_states != b.n_states || a.rows.len() != b.rows.len() {
        return Err(ImdpError::SupportMismatch { s: 0, a: 0 });
    }
    let mut out = a.clone();
    for (s, (ra, rb)) in out.rows.iter_mut().zip(&b.rows).enumerate() {
        if ra.len() != rb.len() {
            return Err(ImdpError::SupportMismatch { s, a: 0 });
        }
        for (ai, (rowa, rowb)) in ra.iter_mut().zip(rb).enumerate() {
            if rowa.len() != rowb.len() {
                return Err(ImdpError::SupportMismatch { s, a: ai });
            }
            for (ta, tb) in rowa.iter_mut().zip(rowb) {
                if ta.0 != tb.0 {
                    return Err(ImdpError::SupportMismatch { s, a: ai });
                }
                ta.1 = ta.1.min(tb.1);
                ta.2 = ta.2.max(tb.2);
            }
        }
    }
    Ok(out)
}

/// Merges a non-empty sequence of interval MDPs.
pub fn merge_all(imdps: &[IntervalMdp]) -> Result<IntervalMdp, ImdpError> {
    let mut it = imdps.iter();
    let mut acc = it.next().expect("merge_all needs at least one IMDP").clone();
    for m in it {
        acc = merge(&acc, m)?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Inner problem: worst-case distribution within intervals
// ---------------------------------------------------------------------------

/// Returns the distribution inside the per-successor intervals that minimizes
/// (or maximizes) the expectation of `values`.
///
/// Successors are ordered by value (ties by position), every successor starts
/// at its lower bound and the remaining mass is pushed onto the most
/// favourable successors up to their upper bounds. The result sums to 1
/// exactly up to float rounding and stays within every interval.
pub fn worst_case_distribution(
    values: &[f64],
    intervals: &[(f64, f64)],
    adversary: Direction,
) -> Vec<f64> {
    let n = values.len();
    debug_assert_eq!(n, intervals.len());
    let mut order: Vec<usize> = (0..n).collect();
    match adversary {
        Direction::Min => order.sort_by(|&i, &j| {
            values[i].partial_cmp(&values[j]).unwrap().then(i.cmp(&j))
        }),
        Direction::Max => order.sort_by(|&i, &j| {
            values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j))
        }),
    }
    let mut out: Vec<f64> = intervals.iter().map(|&(lo, _)| lo).collect();
    let mut budget: f64 = 1.0 - out.iter().sum::<f64>();
    for &i in &order {
        if budget <= 0.0 {
            break;
        }
        let room = intervals[i].1 - intervals[i].0;
        let add = room.min(budget);
        out[i] += add;
        budget -= add;
    }
    out
}

/// Expected value of the worst-case distribution without materializing it.
fn worst_case_expectation(
    row: &[(usize, f64, f64)],
    values: &[f64],
    offsets: Option<&[f64]>,
    adversary: Direction,
) -> f64 {
    let val = |i: usize| {
        let base = values[row[i].0];
        match offsets {
            Some(off) => base + off[i],
            None => base,
        }
    };
    let n = row.len();
    let mut order: Vec<usize> = (0..n).collect();
    match adversary {
        Direction::Min => {
            order.sort_by(|&i, &j| val(i).partial_cmp(&val(j)).unwrap().then(i.cmp(&j)))
        }
        Direction::Max => {
            order.sort_by(|&i, &j| val(j).partial_cmp(&val(i)).unwrap().then(i.cmp(&j)))
        }
    }
    let mut mass: Vec<f64> = row.iter().map(|t| t.1).collect();
    let mut budget: f64 = 1.0 - mass.iter().sum::<f64>();
    for &i in &order {
        if budget <= 0.0 {
            break;
        }
        let room = row[i].2 - row[i].1;
        let add = room.min(budget);
        mass[i] += add;
        budget -= add;
    }
    mass.iter().enumerate().map(|(i, m)| m * val(i)).sum()
}

// ---------------------------------------------------------------------------
// Objective scaffolding shared by robust and exact value iteration
// ---------------------------------------------------------------------------

struct ObjectiveLayout {
    /// Per-state fixed value (targets of reach objectives), or None if free.
    frozen: Vec<Option<f64>>,
    /// Whether rewards enter the backup.
    rewards: bool,
}

fn layout(spec: &EvaluationSpec, n: usize) -> ObjectiveLayout {
    let mut frozen = vec![None; n];
    match &spec.kind {
        ObjectiveKind::Reach { target } => {
            for &t in target {
                frozen[t] = Some(1.0);
            }
            ObjectiveLayout { frozen, rewards: false }
        }
        ObjectiveKind::ReachAvoid { target, avoid } => {
            for &t in target {
                frozen[t] = Some(1.0);
            }
            for &c in avoid {
                frozen[c] = Some(0.0);
            }
            ObjectiveLayout { frozen, rewards: false }
        }
        ObjectiveKind::ExpReward { target } => {
            for &t in target {
                frozen[t] = Some(0.0);
            }
            ObjectiveLayout { frozen, rewards: true }
        }
    }
}

fn transition_reward_table(
    rewards: &Rewards,
    rows: usize,
) -> Option<HashMap<(usize, usize, usize), f64>> {
    let _ = rows;
    if rewards.transitions.is_empty() {
        None
    } else {
        Some(
            rewards
                .transitions
                .iter()
                .map(|t| ((t.s, t.a, t.to), t.r))
                .collect(),
        )
    }
}

/// Properness of an expected-reward objective on a fixed support graph:
/// every state reachable from the initial distribution must be able to reach
/// the target, and (for maximization, where sinking forever would be
/// profitable) no reachable cycle may avoid the target. The support is
/// identical for all included MDPs because interval lower bounds are positive.
fn check_properness(
    support: &[Vec<Vec<usize>>],
    initial: &[(usize, f64)],
    spec: &EvaluationSpec,
) -> Result<(), ImdpError> {
    let n = support.len();
    let target: HashSet<usize> = spec.target().iter().copied().collect();

    // Forward reachability from the initial distribution.
    let mut relevant = vec![false; n];
    let mut queue: VecDeque<usize> = initial.iter().map(|&(s, _)| s).collect();
    for &(s, _) in initial {
        relevant[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        if target.contains(&s) {
            continue;
        }
        for row in &support[s] {
            for &t in row {
                if !relevant[t] {
                    relevant[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }

    // Backward reachability to the target.
    let mut can_reach = vec![false; n];
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, rows) in support.iter().enumerate() {
        for row in rows {
            for &t in row {
                rev[t].push(s);
            }
        }
    }
    let mut queue: VecDeque<usize> = target.iter().copied().collect();
    for &t in &target {
        can_reach[t] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &p in &rev[s] {
            if !can_reach[p] {
                can_reach[p] = true;
                queue.push_back(p);
            }
        }
    }
    for s in 0..n {
        if relevant[s] && !can_reach[s] {
            return Err(ImdpError::ImproperCannotReach(s));
        }
    }

    if spec.direction == Direction::Max {
        // Reject cycles among relevant non-target states; accumulating
        // reward forever must be impossible under every policy. Kahn's
        // algorithm on the restricted subgraph: leftover nodes lie on cycles.
        let in_sub = |s: usize| relevant[s] && !target.contains(&s);
        let mut out_deg = vec![0usize; n];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, rows) in support.iter().enumerate() {
            if !in_sub(s) {
                continue;
            }
            for row in rows {
                for &t in row {
                    if in_sub(t) {
                        out_deg[s] += 1;
                        preds[t].push(s);
                    }
                }
            }
        }
        let mut queue: VecDeque<usize> =
            (0..n).filter(|&s| in_sub(s) && out_deg[s] == 0).collect();
        let mut removed = vec![false; n];
        while let Some(s) = queue.pop_front() {
            removed[s] = true;
            for &p in &preds[s] {
                out_deg[p] -= 1;
                if out_deg[p] == 0 && !removed[p] {
                    queue.push_back(p);
                }
            }
        }
        let cycle: Vec<usize> = (0..n).filter(|&s| in_sub(s) && !removed[s]).collect();
        if !cycle.is_empty() {
            return Err(ImdpError::ImproperCycle(cycle));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Robust value iteration
// ---------------------------------------------------------------------------

/// Robust value iteration over an interval MDP.
///
/// The outer optimization follows `spec.direction` over actions (or the fixed
/// `policy` when `optimize` is false); the inner adversary always takes the
/// direction unfavourable to the agent. With `optimize` the returned policy
/// is deterministic, breaking ties towards the lowest action index.
pub fn robust_value_iteration(
    imdp: &IntervalMdp,
    spec: &EvaluationSpec,
    optimize: bool,
    policy: Option<&Policy>,
) -> Result<RobustResult, ImdpError> {
    if !optimize {
        let pi = policy.expect("policy required when optimize = false");
        pi.validate(&imdp.actions)?;
    }
    for (s, srows) in imdp.rows.iter().enumerate() {
        for (a, row) in srows.iter().enumerate() {
            let lo: f64 = row.iter().map(|t| t.1).sum();
            let hi: f64 = row.iter().map(|t| t.2).sum();
            if lo > 1.0 + 1e-9 || hi < 1.0 - 1e-9 {
                return Err(ImdpError::InfeasibleRow { s, a });
            }
        }
    }
    let lay = layout(spec, imdp.n_states);
    if lay.rewards {
        let support: Vec<Vec<Vec<usize>>> = imdp
            .rows
            .iter()
            .map(|srows| {
                srows
                    .iter()
                    .map(|row| row.iter().map(|t| t.0).collect())
                    .collect()
            })
            .collect();
        check_properness(&support, &imdp.initial, spec)?;
    }
    let adversary = spec.direction.flip();
    let trans_rewards = transition_reward_table(&imdp.rewards, imdp.n_states);
    let state_reward =
        |s: usize| -> f64 { imdp.rewards.states.get(&s).copied().unwrap_or(0.0) };

    let backup_action = |s: usize, a: usize, values: &[f64]| -> f64 {
        let row = &imdp.rows[s][a];
        let offsets: Option<Vec<f64>> = if lay.rewards {
            trans_rewards.as_ref().map(|tr| {
                row.iter()
                    .map(|t| tr.get(&(s, a, t.0)).copied().unwrap_or(0.0))
                    .collect()
            })
        } else {
            None
        };
        let intervals: Vec<(usize, f64, f64)> = row.clone();
        let exp = worst_case_expectation(&intervals, values, offsets.as_deref(), adversary);
        if lay.rewards {
            state_reward(s) + exp
        } else {
            exp
        }
    };

    let mut values: Vec<f64> = lay
        .frozen
        .iter()
        .map(|f| f.unwrap_or(0.0))
        .collect();
    let mut next = values.clone();
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    while residual > VI_TOL {
        iters += 1;
        if iters > VI_MAX_ITER {
            return Err(ImdpError::NoConvergence { iters: iters - 1, residual });
        }
        residual = 0.0;
        for s in 0..imdp.n_states {
            if let Some(f) = lay.frozen[s] {
                next[s] = f;
                continue;
            }
            let v = if optimize {
                let mut best = backup_action(s, 0, &values);
                for a in 1..imdp.rows[s].len() {
                    let q = backup_action(s, a, &values);
                    best = match spec.direction {
                        Direction::Max => best.max(q),
                        Direction::Min => best.min(q),
                    };
                }
                best
            } else {
                let pi = policy.unwrap();
                pi.choices[s]
                    .iter()
                    .map(|&(a, w)| w * backup_action(s, a, &values))
                    .sum()
            };
            residual = residual.max((v - values[s]).abs());
            next[s] = v;
        }
        std::mem::swap(&mut values, &mut next);
    }

    let extracted = if optimize {
        let mut actions = Vec::with_capacity(imdp.n_states);
        for s in 0..imdp.n_states {
            if lay.frozen[s].is_some() {
                actions.push(0);
                continue;
            }
            let mut best_a = 0;
            let mut best_q = backup_action(s, 0, &values);
            for a in 1..imdp.rows[s].len() {
                let q = backup_action(s, a, &values);
                let better = match spec.direction {
                    Direction::Max => q > best_q,
                    Direction::Min => q < best_q,
                };
                if better {
                    best_q = q;
                    best_a = a;
                }
            }
            actions.push(best_a);
        }
        Some(Policy::deterministic(actions))
    } else {
        None
    };

    let value = imdp
        .initial
        .iter()
        .map(|&(s, w)| w * values[s])
        .sum();
    Ok(RobustResult { values, value, policy: extracted, iterations: iters, residual })
}

// ---------------------------------------------------------------------------
// Exact value iteration on concrete MDPs (ground-truth oracle)
// ---------------------------------------------------------------------------

/// Standard value iteration on a concrete MDP; optimizes when no policy is
/// given. This is an independent code path from the robust iteration and is
/// used as the ground-truth oracle on hidden instances.
pub fn exact_policy_value(
    instance: &MdpInstance,
    spec: &EvaluationSpec,
    policy: Option<&Policy>,
) -> Result<RobustResult, ImdpError> {
    if let Some(pi) = policy {
        pi.validate(&instance.actions)?;
    }
    let lay = layout(spec, instance.n_states);
    if lay.rewards {
        let support: Vec<Vec<Vec<usize>>> = instance
            .kernel
            .iter()
            .map(|srows| {
                srows
                    .iter()
                    .map(|row| row.iter().filter(|t| t.1 > 0.0).map(|t| t.0).collect())
                    .collect()
            })
            .collect();
        check_properness(&support, &instance.initial, spec)?;
    }
    let trans_rewards = transition_reward_table(&instance.rewards, instance.n_states);
    let q_value = |s: usize, a: usize, values: &[f64]| -> f64 {
        let mut acc = 0.0;
        for &(t, p) in &instance.kernel[s][a] {
            let r = trans_rewards
                .as_ref()
                .and_then(|tr| tr.get(&(s, a, t)).copied())
                .unwrap_or(0.0);
            acc += p
                * (values[t]
                    + if lay.rewards { r } else { 0.0 });
        }
        if lay.rewards {
            acc + instance.state_reward(s)
        } else {
            acc
        }
    };

    let mut values: Vec<f64> = lay.frozen.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut next = values.clone();
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    while residual > VI_TOL {
        iters += 1;
        if iters > VI_MAX_ITER {
            return Err(ImdpError::NoConvergence { iters: iters - 1, residual });
        }
        residual = 0.0;
        for s in 0..instance.n_states {
            if let Some(f) = lay.frozen[s] {
                next[s] = f;
                continue;
            }
            let v = match policy {
                Some(pi) => pi.choices[s]
                    .iter()
                    .map(|&(a, w)| w * q_value(s, a, &values))
                    .sum(),
                None => {
                    let mut best = q_value(s, 0, &values);
                    for a in 1..instance.kernel[s].len() {
                        let q = q_value(s, a, &values);
                        best = match spec.direction {
                            Direction::Max => best.max(q),
                            Direction::Min => best.min(q),
                        };
                    }
                    best
                }
            };
            residual = residual.max((v - values[s]).abs());
            next[s] = v;
        }
        std::mem::swap(&mut values, &mut next);
    }
    let value = instance
        .initial
        .iter()
        .map(|&(s, w)| w * values[s])
        .sum();
    Ok(RobustResult { values, value, policy: None, iterations: iters, residual })
}

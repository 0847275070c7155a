//! Built-in benchmark environment generators.
//!
//! Every generator emits a model document, so each builtin doubles as a
//! schema example (`bench export`). Dynamics conventions that the original
//! sources leave open are fixed here and documented per generator; the
//! default knobs reproduce the reference state/transition counts exactly.

use crate::model::{
    from_doc, EvaluationSpec, ModelDoc, ObjectiveKind, ParamDist, ParametricMdp, Rewards,
    TransitionDoc, TransitionReward,
};
use std::collections::BTreeMap;

/// Which benchmark to build, with its size knob where applicable.
#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: String,
    /// Primary size knob: chain length, betting rounds, aircraft corridor
    /// stages, semiauto grid width, UAV grid side. `None` means the default.
    pub size: Option<usize>,
    /// Replaces the default distribution of individual parameters.
    pub overrides: BTreeMap<String, ParamDist>,
}

impl BenchmarkSpec {
    pub fn named(name: &str) -> BenchmarkSpec {
        BenchmarkSpec { name: name.to_string(), size: None, overrides: BTreeMap::new() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("unknown benchmark {0:?} (expected chain|betting|aircraft|semiauto|uav)")]
    Unknown(String),
    #[error("benchmark knob out of range: {0}")]
    BadKnob(String),
    #[error("generated document failed validation: {0}")]
    Invalid(#[from] crate::model::ModelError),
}

/// Builds the model document for a benchmark.
pub fn build_doc(spec: &BenchmarkSpec) -> Result<ModelDoc, BenchError> {
    let mut doc = match spec.name.as_str() {
        "chain" => chain_doc(spec.size.unwrap_or(6))?,
        "betting" => betting_doc(spec.size.unwrap_or(8))?,
        "aircraft" => aircraft_doc(spec.size.unwrap_or(12))?,
        "semiauto" => semiauto_doc(spec.size.unwrap_or(10))?,
        "uav" => uav_doc(spec.size.unwrap_or(16))?,
        other => return Err(BenchError::Unknown(other.to_string())),
    };
    for (name, dist) in &spec.overrides {
        if let Some(slot) = doc.parameters.get_mut(name) {
            *slot = *dist;
        }
    }
    Ok(doc)
}

/// Builds and validates a benchmark model.
pub fn build_benchmark(spec: &BenchmarkSpec) -> Result<ParametricMdp, BenchError> {
    Ok(from_doc(&build_doc(spec)?)?)
}

// ---------------------------------------------------------------------------
// Shared assembly helper
// ---------------------------------------------------------------------------

struct Builder {
    actions: BTreeMap<String, Vec<String>>,
    transitions: Vec<TransitionDoc>,
}

impl Builder {
    fn new() -> Builder {
        Builder { actions: BTreeMap::new(), transitions: Vec::new() }
    }

    fn action(&mut self, s: usize, name: &str) {
        self.actions
            .entry(s.to_string())
            .or_default()
            .push(name.to_string());
    }

    /// Adds a transition; non-constant expressions are tied by their
    /// canonical expression string, which pools counts across transitions
    /// with identical parameterisation.
    fn edge(&mut self, s: usize, a: &str, to: usize, expr: String) {
        let tie = if crate::expr::ParamExpr::parse(&expr)
            .map(|e| e.is_constant())
            .unwrap_or(true)
        {
            None
        } else {
            Some(expr.clone())
        };
        self.transitions.push(TransitionDoc { s, a: a.to_string(), to, expr, tie });
    }
}

fn fmt(v: f64) -> String {
    format!("{}", v)
}

// ---------------------------------------------------------------------------
// Chain: a 6-cell ladder plus terminal, expected steps minimised
// ---------------------------------------------------------------------------

/// A chain of `len` cells plus the final state. Every state offers three
/// gears: `fwd` advances with probability p, `rev` with 1-p, `mid` with a
/// fixed half; failing to advance drops the walker back to the start.
/// Objective: expected number of steps to the last state, minimised.
/// Defaults (len 6): 7 states, 42 transitions.
fn chain_doc(len: usize) -> Result<ModelDoc, BenchError> {
    if len == 0 {
        return Err(BenchError::BadKnob("chain length must be positive".into()));
    }
    let n = len + 1;
    let last = len;
    let mut b = Builder::new();
    for s in 0..n {
        let next = (s + 1).min(last);
        for (a, fwd_expr, back_expr) in [
            ("fwd", "p".to_string(), "1 - p".to_string()),
            ("rev", "1 - p".to_string(), "p".to_string()),
            ("mid", "0.5".to_string(), "0.5".to_string()),
        ] {
            b.action(s, a);
            b.edge(s, a, next, fwd_expr);
            b.edge(s, a, 0, back_expr);
        }
    }
    let mut rewards = Rewards::default();
    for s in 0..last {
        rewards.states.insert(s, 1.0);
    }
    Ok(ModelDoc {
        states: n,
        initial: BTreeMap::from([("0".to_string(), 1.0)]),
        actions: b.actions,
        parameters: BTreeMap::from([("p".to_string(), ParamDist::Beta { a: 5.0, b: 5.0 })]),
        transitions: b.transitions,
        rewards: Some(rewards),
        objective: EvaluationSpec {
            kind: ObjectiveKind::ExpReward { target: vec![last] },
            direction: crate::model::Direction::Min,
        },
    })
}

// ---------------------------------------------------------------------------
// Betting game: 8 rounds of stake selection, expected coins maximised
// ---------------------------------------------------------------------------

/// The player starts with 10 coins and plays `rounds` bets, staking 0, 1, 2,
/// 5 or 10 coins (never more than held). A win pays the stake, a loss takes
/// it. After the last round the bankroll is cashed out into a per-amount
/// terminal state whose entry transition carries the coins as reward.
/// Defaults (8 rounds): 480 states, 2730 transitions.
fn betting_doc(rounds: usize) -> Result<ModelDoc, BenchError> {
    if rounds == 0 {
        return Err(BenchError::BadKnob("betting rounds must be positive".into()));
    }
    const BETS: [u32; 5] = [0, 1, 2, 5, 10];
    const START: u32 = 10;

    // Reachable (round, money) pairs, then terminal (rounds+1, money).
    let mut reach: Vec<std::collections::BTreeSet<u32>> =
        vec![std::collections::BTreeSet::new(); rounds + 1];
    reach[0].insert(START);
    for t in 0..rounds {
        let moneys: Vec<u32> = reach[t].iter().copied().collect();
        for m in moneys {
            for bet in BETS {
                if bet > m {
                    continue;
                }
                reach[t + 1].insert(m + bet);
                reach[t + 1].insert(m - bet);
            }
        }
    }

    let mut index: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for (t, set) in reach.iter().enumerate() {
        for &m in set {
            let id = index.len();
            index.insert((t, m), id);
        }
    }
    // Cashed-out states, one per final bankroll.
    let finals: Vec<u32> = reach[rounds].iter().copied().collect();
    for &m in &finals {
        let id = index.len();
        index.insert((rounds + 1, m), id);
    }

    let mut b = Builder::new();
    let mut rewards = Rewards::default();
    for (&(t, m), &s) in &index {
        if t < rounds {
            for bet in BETS {
                if bet > m {
                    continue;
                }
                let a = format!("bet{bet}");
                b.action(s, &a);
                if bet == 0 {
                    b.edge(s, &a, index[&(t + 1, m)], "1".to_string());
                } else {
                    b.edge(s, &a, index[&(t + 1, m + bet)], "p".to_string());
                    b.edge(s, &a, index[&(t + 1, m - bet)], "1 - p".to_string());
                }
            }
        } else if t == rounds {
            let done = index[&(rounds + 1, m)];
            b.action(s, "collect");
            b.edge(s, "collect", done, "1".to_string());
            rewards.transitions.push(TransitionReward { s, a: 0, to: done, r: m as f64 });
        } else {
            b.action(s, "done");
            b.edge(s, "done", s, "1".to_string());
        }
    }
    let target: Vec<usize> =
        finals.iter().map(|&m| index[&(rounds + 1, m)]).collect();
    Ok(ModelDoc {
        states: index.len(),
        initial: BTreeMap::from([(index[&(0, START)].to_string(), 1.0)]),
        actions: b.actions,
        parameters: BTreeMap::from([("p".to_string(), ParamDist::Beta { a: 20.0, b: 2.0 })]),
        transitions: b.transitions,
        rewards: Some(rewards),
        objective: EvaluationSpec {
            kind: ObjectiveKind::ExpReward { target },
            direction: crate::model::Direction::Max,
        },
    })
}

// ---------------------------------------------------------------------------
// Aircraft collision avoidance: a 12-stage head-on corridor encounter
// ---------------------------------------------------------------------------

/// Two aircraft fly towards each other through a corridor whose interior is
/// the 10x5 conflict grid; the end columns are the entry and exit aprons.
/// Per stage both advance one column; the agent picks straight/climb/descend
/// (manoeuvres succeed with probability p, otherwise it flies straight), the
/// intruder picks uniformly at random and succeeds with probability q.
/// Stage 2 crosses a turbulence band where flying straight drifts one row
/// up or down with probability (1-p)/2 each. The aircraft pass each other
/// between stages 5 and 6; trading cells there is fatal half the time.
/// A start state dispatches uniformly over the 25 entry row pairs.
/// Defaults (12 stages, 5 rows): 303 states, 3468 transitions.
fn aircraft_doc(stages: usize) -> Result<ModelDoc, BenchError> {
    if stages < 4 {
        return Err(BenchError::BadKnob("aircraft corridor needs at least 4 stages".into()));
    }
    const ROWS: usize = 5;
    let turb_stage = 2usize;
    let cross_stage = stages / 2 - 1;
    let third = 1.0f64 / 3.0;

    // Index layout: START, then (t, ya, yb) lexicographic, then GOAL, CRASH.
    let start = 0usize;
    let cell = |t: usize, ya: usize, yb: usize| 1 + (t * ROWS + ya) * ROWS + yb;
    let goal = 1 + stages * ROWS * ROWS;
    let crash = goal + 1;
    let n_states = crash + 1;

    let mut b = Builder::new();
    b.action(start, "enter");
    for ya in 0..ROWS {
        for yb in 0..ROWS {
            b.edge(start, "enter", cell(0, ya, yb), fmt(1.0 / (ROWS * ROWS) as f64));
        }
    }

    let clamp = |y: i64| -> usize { y.clamp(0, ROWS as i64 - 1) as usize };
    // Agent row outcomes per action as (row, expression) lists.
    let agent_rows = |ya: usize, act: &str, turbulent: bool| -> Vec<(usize, String)> {
        let yai = ya as i64;
        match act {
            "straight" => {
                if turbulent {
                    let lo = clamp(yai - 1);
                    let hi = clamp(yai + 1);
                    let mut out: Vec<(usize, String)> = Vec::new();
                    let mut push = |row: usize, e: &str| {
                        if let Some(slot) = out.iter_mut().find(|(r, _)| *r == row) {
                            slot.1 = format!("{} + {}", slot.1, e);
                        } else {
                            out.push((row, e.to_string()));
                        }
                    };
                    push(ya, "p");
                    push(lo, "(1 - p) * 0.5");
                    push(hi, "(1 - p) * 0.5");
                    out
                } else {
                    vec![(ya, "1".to_string())]
                }
            }
            "climb" => {
                let up = clamp(yai + 1);
                if up == ya {
                    vec![(ya, "1".to_string())]
                } else {
                    vec![(up, "p".to_string()), (ya, "1 - p".to_string())]
                }
            }
            "descend" => {
                let dn = clamp(yai - 1);
                if dn == ya {
                    vec![(ya, "1".to_string())]
                } else {
                    vec![(dn, "p".to_string()), (ya, "1 - p".to_string())]
                }
            }
            _ => unreachable!(),
        }
    };
    // Intruder row outcomes: uniform intent, success probability q.
    let intruder_rows = |yb: usize| -> Vec<(usize, String)> {
        let ybi = yb as i64;
        let up = clamp(ybi + 1);
        let dn = clamp(ybi - 1);
        let q3 = format!("q * {}", fmt(third));
        if up != yb && dn != yb {
            vec![
                (up, q3.clone()),
                (yb, format!("1 - {q3} - {q3}")),
                (dn, q3),
            ]
        } else if up == yb {
            // Top row: the climb intent stalls.
            vec![(yb, format!("1 - {q3}")), (dn, q3)]
        } else {
            vec![(up, q3.clone()), (yb, format!("1 - {q3}"))]
        }
    };

    for t in 0..stages {
        for ya in 0..ROWS {
            for yb in 0..ROWS {
                let s = cell(t, ya, yb);
                if t == stages - 1 {
                    b.action(s, "land");
                    b.edge(s, "land", goal, "1".to_string());
                    continue;
                }
                for act in ["straight", "climb", "descend"] {
                    b.action(s, act);
                    for (ya2, ea) in agent_rows(ya, act, t == turb_stage) {
                        for (yb2, eb) in intruder_rows(yb) {
                            let joint = format!("({}) * ({})", ea, eb);
                            let swap = t == cross_stage && ya2 == yb && yb2 == ya;
                            if swap {
                                b.edge(s, act, crash, format!("({joint}) * 0.5"));
                                b.edge(
                                    s,
                                    act,
                                    cell(t + 1, ya2, yb2),
                                    format!("({joint}) * 0.5"),
                                );
                            } else {
                                b.edge(s, act, cell(t + 1, ya2, yb2), joint);
                            }
                        }
                    }
                }
            }
        }
    }
    b.action(goal, "hold");
    b.edge(goal, "hold", goal, "1".to_string());
    b.action(crash, "hold");
    b.edge(crash, "hold", crash, "1".to_string());

    Ok(ModelDoc {
        states: n_states,
        initial: BTreeMap::from([(start.to_string(), 1.0)]),
        actions: b.actions,
        parameters: BTreeMap::from([
            ("p".to_string(), ParamDist::Beta { a: 10.0, b: 2.0 }),
            ("q".to_string(), ParamDist::Beta { a: 2.0, b: 10.0 }),
        ]),
        transitions: b.transitions,
        rewards: None,
        objective: EvaluationSpec {
            kind: ObjectiveKind::ReachAvoid { target: vec![goal], avoid: vec![crash] },
            direction: crate::model::Direction::Max,
        },
    })
}

// ---------------------------------------------------------------------------
// Semi-autonomous vehicle: grid exploration under a communication budget
// ---------------------------------------------------------------------------

/// An explorer crosses a `width` x 5 grid (east/north/south moves, never
/// back west) towards a wedge-shaped docking zone, while keeping contact
/// with the controller at the south-west corner. At most two moves are
/// allowed without a successful transmission; a communication attempt picks
/// channel 1 or 2 and on failure one fallback retry on channel 1 remains
/// before the radio is down until the explorer relocates. Channel loss
/// probabilities scale with Manhattan distance from the controller.
/// Defaults (width 10): 411 states, 1503 transitions.
fn semiauto_doc(width: usize) -> Result<ModelDoc, BenchError> {
    if width < 4 {
        return Err(BenchError::BadKnob("semiauto grid width must be at least 4".into()));
    }
    const H: usize = 5;
    const KMAX: usize = 2;
    const TMAX: usize = 2;
    let w = width;
    let goal_cells: Vec<(usize, usize)> =
        vec![(w - 3, 1), (w - 3, 2), (w - 3, 3), (w - 2, 2), (w - 2, 3), (w - 1, 3)];
    let is_goal = |x: usize, y: usize| goal_cells.contains(&(x, y));
    let dmax = (w - 1 + H - 1) as f64;

    // Channel delivery factors; losses stay inside [0.05, 0.95] over the
    // parameter supports p in [.75,.95], q in [.55,.85].
    let c1 = |x: usize, y: usize| -> f64 { ((x + y) as f64 / dmax).max(0.07) };
    let c2 = |x: usize, y: usize| -> f64 { 0.35 + 0.5 * (x + y) as f64 / dmax };

    // Index layout: START, then (x, y, k, t) for non-goal cells (all nine
    // k/t combinations) and goal cells (move arrivals only), then GOAL, FAIL.
    let mut index: BTreeMap<(usize, usize, usize, usize), usize> = BTreeMap::new();
    let mut next_id = 1usize;
    for x in 0..w {
        for y in 0..H {
            if is_goal(x, y) {
                for k in 1..=KMAX {
                    index.insert((x, y, k, 0), next_id);
                    next_id += 1;
                }
            } else {
                for k in 0..=KMAX {
                    for t in 0..=TMAX {
                        index.insert((x, y, k, t), next_id);
                        next_id += 1;
                    }
                }
            }
        }
    }
    let start = 0usize;
    let goal = next_id;
    let fail = next_id + 1;
    let n_states = next_id + 2;

    let mut b = Builder::new();
    b.action(start, "deploy");
    for y in 0..H {
        b.edge(start, "deploy", index[&(0, y, 0, 0)], fmt(1.0 / H as f64));
    }

    for (&(x, y, k, t), &s) in &index {
        if is_goal(x, y) {
            b.action(s, "dock");
            b.edge(s, "dock", goal, "1".to_string());
            continue;
        }
        let mut acted = false;
        if k < KMAX {
            for (name, dx, dy) in
                [("east", 1i64, 0i64), ("north", 0, 1), ("south", 0, -1)]
            {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx < 0 || nx >= w as i64 || ny < 0 || ny >= H as i64 {
                    continue;
                }
                acted = true;
                b.action(s, name);
                b.edge(s, name, index[&(nx as usize, ny as usize, k + 1, 0)], "1".to_string());
            }
        }
        if t < TMAX {
            let ok = index[&(x, y, 0, 0)];
            if t == 0 {
                for (name, base, factor) in
                    [("ch1", "p", c1(x, y)), ("ch2", "q", c2(x, y))]
                {
                    acted = true;
                    b.action(s, name);
                    let loss = format!("{base} * {}", fmt(factor));
                    b.edge(s, name, ok, format!("1 - {loss}"));
                    b.edge(s, name, index[&(x, y, k, 1)], loss);
                }
            } else {
                acted = true;
                b.action(s, "retry");
                let loss = format!("p * {}", fmt(c1(x, y)));
                b.edge(s, "retry", ok, format!("1 - {loss}"));
                b.edge(s, "retry", index[&(x, y, k, 2)], loss);
            }
        }
        if !acted {
            b.action(s, "abort");
            b.edge(s, "abort", fail, "1".to_string());
        }
    }
    b.action(goal, "hold");
    b.edge(goal, "hold", goal, "1".to_string());
    b.action(fail, "hold");
    b.edge(fail, "hold", fail, "1".to_string());

    Ok(ModelDoc {
        states: n_states,
        initial: BTreeMap::from([(start.to_string(), 1.0)]),
        actions: b.actions,
        parameters: BTreeMap::from([
            ("p".to_string(), ParamDist::Uniform { a: 0.75, b: 0.95 }),
            ("q".to_string(), ParamDist::Uniform { a: 0.55, b: 0.85 }),
        ]),
        transitions: b.transitions,
        rewards: None,
        objective: EvaluationSpec {
            kind: ObjectiveKind::Reach { target: vec![goal] },
            direction: crate::model::Direction::Max,
        },
    })
}

// ---------------------------------------------------------------------------
// UAV: 3D transit through a pylon field with per-column drift
// ---------------------------------------------------------------------------

/// A drone crosses an n^3 grid from the entry face x = 0 to the exit plane
/// x = n-1 (the goal), never flying backwards: actions are forward and the
/// four lateral/vertical moves. Each transit column x has its own drift
/// parameter: a move is diverted one cell in one of the four directions
/// perpendicular to it with probability p_x (uniform over the four),
/// clamping at the walls. Obstacles are a lattice of tower blocks plus two
/// pylons at the entry-face corners; hitting one ends the flight.
/// Defaults (n 16): 4096 states, 86912 transitions, 15 parameters.
fn uav_doc(n: usize) -> Result<ModelDoc, BenchError> {
    if n < 4 {
        return Err(BenchError::BadKnob("uav grid side must be at least 4".into()));
    }
    let idx = |x: usize, y: usize, z: usize| (x * n + y) * n + z;
    let clamp = |v: i64| -> usize { v.clamp(0, n as i64 - 1) as usize };

    // Obstacle layout: tower lattice over the interior, last tower short,
    // plus two 2-cell pylons on the entry面 corners. At n = 16 this is
    // 6x4 towers (23 full, one of height 3) and removes exactly the edge
    // mass needed for the reference counts.
    let tower_x: Vec<usize> = (1..n - 3).skip(1).step_by(2).collect();
    let tower_y: Vec<usize> = (0..).skip(3).step_by(3).take_while(|&y| y < n - 3).collect();
    let mut obstacles: Vec<(usize, usize, usize)> = Vec::new();
    let positions: Vec<(usize, usize)> = tower_x
        .iter()
        .flat_map(|&x| tower_y.iter().map(move |&y| (x, y)))
        .collect();
    for (i, &(x, y)) in positions.iter().enumerate() {
        let h = if i + 1 == positions.len() { 3.min(n) } else { n };
        for z in 0..h {
            obstacles.push((x, y, z));
        }
    }
    obstacles.push((0, 0, 0));
    obstacles.push((0, 0, 1));
    obstacles.push((0, n - 1, 0));
    obstacles.push((0, n - 1, 1));
    let obstacle_set: std::collections::BTreeSet<(usize, usize, usize)> =
        obstacles.iter().copied().collect();

    let moves: [(&str, (i64, i64, i64)); 5] = [
        ("forward", (1, 0, 0)),
        ("left", (0, -1, 0)),
        ("right", (0, 1, 0)),
        ("down", (0, 0, -1)),
        ("up", (0, 0, 1)),
    ];
    let laterals = |d: (i64, i64, i64)| -> [(i64, i64, i64); 4] {
        if d.0 != 0 {
            [(0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
        } else if d.1 != 0 {
            [(1, 0, 0), (-1, 0, 0), (0, 0, 1), (0, 0, -1)]
        } else {
            [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
        }
    };

    let mut b = Builder::new();
    let mut goal_states = Vec::new();
    let mut avoid_states = Vec::new();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let s = idx(x, y, z);
                let is_goal = x == n - 1;
                let is_obstacle = obstacle_set.contains(&(x, y, z));
                if is_goal || is_obstacle {
                    if is_goal {
                        goal_states.push(s);
                    } else {
                        avoid_states.push(s);
                    }
                    b.action(s, "hold");
                    b.edge(s, "hold", s, "1".to_string());
                    continue;
                }
                let drift = format!("p{x}");
                for (name, d) in moves {
                    b.action(s, name);
                    // Successor -> expression terms, clamp-merged.
                    let mut terms: Vec<(usize, Vec<String>)> = Vec::new();
                    let mut push = |cell: usize, term: String| {
                        if let Some(slot) = terms.iter_mut().find(|(c, _)| *c == cell) {
                            slot.1.push(term);
                        } else {
                            terms.push((cell, vec![term]));
                        }
                    };
                    let intended = idx(
                        clamp(x as i64 + d.0),
                        clamp(y as i64 + d.1),
                        clamp(z as i64 + d.2),
                    );
                    push(intended, format!("1 - {drift}"));
                    for l in laterals(d) {
                        let cell = idx(
                            clamp(x as i64 + l.0),
                            clamp(y as i64 + l.1),
                            clamp(z as i64 + l.2),
                        );
                        push(cell, format!("{drift} * 0.25"));
                    }
                    for (cell, parts) in terms {
                        b.edge(s, name, cell, parts.join(" + "));
                    }
                }
            }
        }
    }

    let mut parameters = BTreeMap::new();
    for x in 0..n - 1 {
        parameters.insert(format!("p{x}"), ParamDist::Beta { a: 2.0, b: 10.0 });
    }
    let entry = idx(0, n / 2, n / 2);
    Ok(ModelDoc {
        states: n * n * n,
        initial: BTreeMap::from([(entry.to_string(), 1.0)]),
        actions: b.actions,
        parameters,
        transitions: b.transitions,
        rewards: None,
        objective: EvaluationSpec {
            kind: ObjectiveKind::ReachAvoid { target: goal_states, avoid: avoid_states },
            direction: crate::model::Direction::Max,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(name: &str) -> (usize, usize) {
        let m = build_benchmark(&BenchmarkSpec::named(name)).unwrap();
        (m.n_states, m.n_transitions())
    }

    #[test]
    fn chain_dimensions() {
        assert_eq!(dims("chain"), (7, 42));
    }

    #[test]
    fn betting_dimensions() {
        assert_eq!(dims("betting"), (480, 2730));
    }

    #[test]
    fn aircraft_dimensions() {
        assert_eq!(dims("aircraft"), (303, 3468));
    }

    #[test]
    fn semiauto_dimensions() {
        assert_eq!(dims("semiauto"), (411, 1503));
    }

    #[test]
    fn uav_dimensions() {
        assert_eq!(dims("uav"), (4096, 86912));
        let m = build_benchmark(&BenchmarkSpec::named("uav")).unwrap();
        assert_eq!(m.params.params.len(), 15);
    }

    #[test]
    fn unknown_benchmark_rejected() {
        assert!(matches!(
            build_benchmark(&BenchmarkSpec::named("nope")),
            Err(BenchError::Unknown(_))
        ));
    }

    #[test]
    fn chain_instantiates_to_described_probabilities() {
        use crate::model::instantiate;
        let m = build_benchmark(&BenchmarkSpec::named("chain")).unwrap();
        let mut theta = crate::model::Valuation::new();
        theta.insert("p".into(), 0.6);
        let inst = instantiate(&m, &theta).unwrap();
        // fwd from state 0: forward 0.6, reset 0.4.
        let fwd = m.actions[0].iter().position(|a| a == "fwd").unwrap();
        let row = &inst.kernel[0][fwd];
        let forward = row.iter().find(|&&(to, _)| to == 1).unwrap().1;
        let reset = row.iter().find(|&&(to, _)| to == 0).unwrap().1;
        assert!((forward - 0.6).abs() < 1e-15);
        assert!((reset - 0.4).abs() < 1e-15);
    }

    #[test]
    fn betting_win_branches() {
        use crate::model::instantiate;
        let m = build_benchmark(&BenchmarkSpec::named("betting")).unwrap();
        let mut theta = crate::model::Valuation::new();
        theta.insert("p".into(), 0.9);
        let inst = instantiate(&m, &theta).unwrap();
        // Every bet action with a stake has a 0.9 branch and a 0.1 branch.
        for (s, acts) in m.actions.iter().enumerate() {
            for (a, name) in acts.iter().enumerate() {
                if name.starts_with("bet") && name != "bet0" {
                    let probs: Vec<f64> = inst.kernel[s][a].iter().map(|t| t.1).collect();
                    assert_eq!(probs.len(), 2);
                    assert!(probs.iter().any(|&p| (p - 0.9).abs() < 1e-12));
                    assert!(probs.iter().any(|&p| (p - 0.1).abs() < 1e-12));
                }
            }
        }
    }

    #[test]
    fn all_builtins_are_graph_preserving() {
        use crate::model::{default_probes, validate_graph_preservation};
        use crate::rng::SeedStream;
        for name in ["chain", "betting", "aircraft", "semiauto"] {
            let m = build_benchmark(&BenchmarkSpec::named(name)).unwrap();
            let mut rng = SeedStream::derive(7, 6, 0);
            let probes = default_probes(&m.params, 64, &mut rng);
            let report = validate_graph_preservation(&m, &probes);
            assert!(report.is_empty(), "{name}: {:?}", report.first());
        }
    }

    #[test]
    fn builtins_instantiate_at_random_valuations() {
        use crate::model::{instantiate, sample_valuation};
        use crate::rng::SeedStream;
        for name in ["chain", "betting", "aircraft", "semiauto", "uav"] {
            let m = build_benchmark(&BenchmarkSpec::named(name)).unwrap();
            for i in 0..5 {
                let theta =
                    sample_valuation(&m.params, &mut SeedStream::derive(11, 5, i));
                instantiate(&m, &theta).unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
    }

    #[test]
    fn export_round_trips_through_parser() {
        for name in ["chain", "betting", "aircraft", "semiauto"] {
            let doc = build_doc(&BenchmarkSpec::named(name)).unwrap();
            let text = serde_json::to_string(&doc).unwrap();
            let m = crate::model::parse_model(&text).unwrap();
            let m2 = build_benchmark(&BenchmarkSpec::named(name)).unwrap();
            assert_eq!(m, m2, "{name} export/parse mismatch");
        }
    }
}

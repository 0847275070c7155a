//! Parametric MDP representation: the model document schema, validation,
//! parameter sampling and instantiation into concrete MDPs.

use crate::expr::ParamExpr;
use crate::rng::SeedStream;
use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// Tolerance for probability row sums. Rows further from 1 are a hard error;
/// nothing is ever silently renormalized.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Parameter distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum ParamDist {
    /// Beta(alpha, beta) on the open interval (0, 1).
    Beta { a: f64, b: f64 },
    /// Uniform on [a, b].
    Uniform { a: f64, b: f64 },
}

impl ParamDist {
    /// Support interval of the distribution.
    pub fn support(&self) -> (f64, f64) {
        match self {
            ParamDist::Beta { .. } => (0.0, 1.0),
            ParamDist::Uniform { a, b } => (*a, *b),
        }
    }
}

/// Named parameters with their distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub params: BTreeMap<String, ParamDist>,
}

/// A full assignment of parameter values.
pub type Valuation = BTreeMap<String, f64>;

/// Evaluation objective kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Probability of eventually reaching `target`.
    Reach { target: Vec<usize> },
    /// Probability of reaching `target` while avoiding `avoid`.
    ReachAvoid { target: Vec<usize>, avoid: Vec<usize> },
    /// Expected accumulated reward until reaching `target`.
    ExpReward { target: Vec<usize> },
}

/// Optimization direction for the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Max,
    Min,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Max => Direction::Min,
            Direction::Min => Direction::Max,
        }
    }
    /// True when `a` is worse than `b` from the agent's point of view.
    pub fn worse(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Max => a < b,
            Direction::Min => a > b,
        }
    }
}

/// What to compute and in which direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSpec {
    #[serde(flatten)]
    pub kind: ObjectiveKind,
    pub direction: Direction,
}

impl EvaluationSpec {
    pub fn target(&self) -> &[usize] {
        match &self.kind {
            ObjectiveKind::Reach { target }
            | ObjectiveKind::ReachAvoid { target, .. }
            | ObjectiveKind::ExpReward { target } => target,
        }
    }
    pub fn avoid(&self) -> &[usize] {
        match &self.kind {
            ObjectiveKind::ReachAvoid { avoid, .. } => avoid,
            _ => &[],
        }
    }
}

/// One parametric transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub to: usize,
    pub expr: ParamExpr,
    /// Tying class label; transitions sharing a label are the same Bernoulli
    /// experiment and may pool their counts.
    pub tie: Option<String>,
}

/// Rewards, sparse over states and transitions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rewards {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub states: BTreeMap<usize, f64>,
    /// Keyed by (state, action index, successor).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transitions: Vec<TransitionReward>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReward {
    pub s: usize,
    pub a: usize,
    pub to: usize,
    pub r: f64,
}

/// A validated parametric MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricMdp {
    pub n_states: usize,
    /// The initial distribution, sparse.
    pub initial: Vec<(usize, f64)>,
    /// Action names per state; indices into this list identify actions.
    pub actions: Vec<Vec<String>>,
    /// Transitions per (state, action index).
    pub transitions: Vec<Vec<Vec<Transition>>>,
    pub params: ParameterSpace,
    pub rewards: Rewards,
    pub objective: EvaluationSpec,
}

/// A concrete MDP induced by one valuation. The kernel shares the parametric
/// support by construction.
#[derive(Debug, Clone)]
pub struct MdpInstance {
    pub n_states: usize,
    pub initial: Vec<(usize, f64)>,
    pub actions: Vec<Vec<String>>,
    /// Probability rows per (state, action index), aligned with the
    /// parametric transition lists.
    pub kernel: Vec<Vec<Vec<(usize, f64)>>>,
    pub rewards: Rewards,
    pub objective: EvaluationSpec,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("transition ({s},{a}): {source}")]
    Expr {
        s: usize,
        a: usize,
        #[source]
        source: crate::expr::ExprError,
    },
    #[error("model document is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("state {0} out of range (states = {1})")]
    StateRange(usize, usize),
    #[error("transition ({s},{a}) references undeclared parameter {name:?}")]
    UndeclaredParameter { s: usize, a: usize, name: String },
    #[error("duplicate successor {to} in transition list of ({s},{a})")]
    DuplicateSuccessor { s: usize, a: usize, to: usize },
    #[error("state {0} has an empty successor list for action {1}")]
    EmptyRow(usize, usize),
    #[error("state {0} has no actions")]
    NoActions(usize),
    #[error("transition references unknown action {action:?} of state {s}")]
    UnknownAction { s: usize, action: String },
    #[error("initial distribution sums to {0}, expected 1 within 1e-9")]
    InitialSum(f64),
    #[error("initial distribution entry for state {0} is {1}, outside [0, 1]")]
    InitialEntry(usize, f64),
    #[error("distribution for parameter {name:?} is invalid: {why}")]
    BadDistribution { name: String, why: String },
    #[error("objective target set is empty")]
    EmptyTarget,
    #[error("objective target and avoid sets intersect at state {0}")]
    TargetAvoidOverlap(usize),
    #[error("tie class {tie:?} mixes structurally different expressions ({s},{a})->{to}")]
    TieMismatch { tie: String, s: usize, a: usize, to: usize },
    #[error("valuation is missing parameter {0:?}")]
    MissingParameter(String),
    #[error("valuation value {value} for {name:?} is outside the support [{lo}, {hi}]")]
    ValueOutsideSupport { name: String, value: f64, lo: f64, hi: f64 },
    #[error("instantiation: row ({s},{a}) sums to {sum}, deviates from 1 by more than 1e-9")]
    RowSum { s: usize, a: usize, sum: f64 },
    #[error("instantiation: transition ({s},{a})->{to} evaluates to {value}, outside [0, 1]")]
    ProbabilityRange { s: usize, a: usize, to: usize, value: f64 },
}

// ---------------------------------------------------------------------------
// Model document (the JSON schema)
// ---------------------------------------------------------------------------

/// Serde image of the model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub states: usize,
    pub initial: BTreeMap<String, f64>,
    pub actions: BTreeMap<String, Vec<String>>,
    pub parameters: BTreeMap<String, ParamDist>,
    pub transitions: Vec<TransitionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Rewards>,
    pub objective: EvaluationSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionDoc {
    pub s: usize,
    pub a: String,
    pub to: usize,
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie: Option<String>,
}

/// Parses and validates a model document.
pub fn parse_model(text: &str) -> Result<ParametricMdp, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    from_doc(&doc)
}

/// Builds a validated model from an already-deserialized document.
pub fn from_doc(doc: &ModelDoc) -> Result<ParametricMdp, ModelError> {
    let n = doc.states;

    for (name, dist) in &doc.parameters {
        match dist {
            ParamDist::Beta { a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(ModelError::BadDistribution {
                        name: name.clone(),
                        why: format!("beta requires a, b > 0, got ({a}, {b})"),
                    });
                }
            }
            ParamDist::Uniform { a, b } => {
                if !(a < b) {
                    return Err(ModelError::BadDistribution {
                        name: name.clone(),
                        why: format!("uniform requires a < b, got ({a}, {b})"),
                    });
                }
            }
        }
    }

    let mut initial = Vec::new();
    let mut isum = 0.0;
    for (k, &v) in &doc.initial {
        let s: usize = k
            .parse()
            .map_err(|_| ModelError::StateRange(usize::MAX, n))?;
        if s >= n {
            return Err(ModelError::StateRange(s, n));
        }
        if !(0.0..=1.0).contains(&v) {
            return Err(ModelError::InitialEntry(s, v));
        }
        isum += v;
        initial.push((s, v));
    }
    if (isum - 1.0).abs() > ROW_SUM_TOL {
        return Err(ModelError::InitialSum(isum));
    }

    let mut actions: Vec<Vec<String>> = vec![Vec::new(); n];
    for (k, list) in &doc.actions {
        let s: usize = k
            .parse()
            .map_err(|_| ModelError::StateRange(usize::MAX, n))?;
        if s >= n {
            return Err(ModelError::StateRange(s, n));
        }
        actions[s] = list.clone();
    }
    for (s, acts) in actions.iter().enumerate() {
        if acts.is_empty() {
            return Err(ModelError::NoActions(s));
        }
    }

    let mut transitions: Vec<Vec<Vec<Transition>>> =
        actions.iter().map(|a| vec![Vec::new(); a.len()]).collect();
    for t in &doc.transitions {
        if t.s >= n || t.to >= n {
            return Err(ModelError::StateRange(t.s.max(t.to), n));
        }
        let a = actions[t.s]
            .iter()
            .position(|x| *x == t.a)
            .ok_or_else(|| ModelError::UnknownAction { s: t.s, action: t.a.clone() })?;
        let expr = ParamExpr::parse(&t.expr).map_err(|e| ModelError::Expr { s: t.s, a, source: e })?;
        for name in expr.params() {
            if !doc.parameters.contains_key(&name) {
                return Err(ModelError::UndeclaredParameter { s: t.s, a, name });
            }
        }
        let row = &mut transitions[t.s][a];
        if row.iter().any(|x| x.to == t.to) {
            return Err(ModelError::DuplicateSuccessor { s: t.s, a, to: t.to });
        }
        row.push(Transition { to: t.to, expr, tie: t.tie.clone() });
    }
    for (s, rows) in transitions.iter().enumerate() {
        for (a, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(ModelError::EmptyRow(s, a));
            }
        }
    }

    // Tie classes must contain structurally identical expressions.
    let mut tie_expr: HashMap<&str, &ParamExpr> = HashMap::new();
    for (s, rows) in transitions.iter().enumerate() {
        for (a, row) in rows.iter().enumerate() {
            for t in row {
                if let Some(tie) = &t.tie {
                    match tie_expr.get(tie.as_str()) {
                        None => {
                            tie_expr.insert(tie, &t.expr);
                        }
                        Some(e) if **e == t.expr => {}
                        Some(_) => {
                            return Err(ModelError::TieMismatch {
                                tie: tie.clone(),
                                s,
                                a,
                                to: t.to,
                            })
                        }
                    }
                }
            }
        }
    }

    let objective = doc.objective.clone();
    if objective.target().is_empty() {
        return Err(ModelError::EmptyTarget);
    }
    for s in objective.target().iter().chain(objective.avoid()) {
        if *s >= n {
            return Err(ModelError::StateRange(*s, n));
        }
    }
    let avoid: HashSet<usize> = objective.avoid().iter().copied().collect();
    for s in objective.target() {
        if avoid.contains(s) {
            return Err(ModelError::TargetAvoidOverlap(*s));
        }
    }

    Ok(ParametricMdp {
        n_states: n,
        initial,
        actions,
        transitions,
        params: ParameterSpace { params: doc.parameters.clone() },
        rewards: doc.rewards.clone().unwrap_or_default(),
        objective,
    })
}

/// Serializes a model back into its document form. `parse_model(serialize(m))`
/// is structurally equal to `m`.
pub fn serialize_model(m: &ParametricMdp) -> ModelDoc {
    let mut transitions = Vec::new();
    for (s, rows) in m.transitions.iter().enumerate() {
        for (a, row) in rows.iter().enumerate() {
            for t in row {
                transitions.push(TransitionDoc {
                    s,
                    a: m.actions[s][a].clone(),
                    to: t.to,
                    expr: t.expr.to_string(),
                    tie: t.tie.clone(),
                });
            }
        }
    }
    ModelDoc {
        states: m.n_states,
        initial: m.initial.iter().map(|(s, p)| (s.to_string(), *p)).collect(),
        actions: m
            .actions
            .iter()
            .enumerate()
            .map(|(s, a)| (s.to_string(), a.clone()))
            .collect(),
        parameters: m.params.params.clone(),
        transitions,
        rewards: if m.rewards == Rewards::default() { None } else { Some(m.rewards.clone()) },
        objective: m.objective.clone(),
    }
}

impl ParametricMdp {
    /// Total number of declared transitions.
    pub fn n_transitions(&self) -> usize {
        self.transitions
            .iter()
            .map(|rows| rows.iter().map(|r| r.len()).sum::<usize>())
            .sum()
    }

    /// Iterates over (state, action index) pairs.
    pub fn state_actions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.actions
            .iter()
            .enumerate()
            .flat_map(|(s, acts)| (0..acts.len()).map(move |a| (s, a)))
    }
}

// ---------------------------------------------------------------------------
// Sampling and instantiation
// ---------------------------------------------------------------------------

/// Draws one valuation, each parameter independently from its distribution.
/// Beta draws landing exactly on 0 or 1 (possible after rounding) are
/// rejected and redrawn so values stay strictly inside the open support.
pub fn sample_valuation(space: &ParameterSpace, rng: &mut SeedStream) -> Valuation {
    let mut v = Valuation::new();
    for (name, dist) in &space.params {
        let value = match dist {
            ParamDist::Beta { a, b } => {
                let d = rand_distr::Beta::new(*a, *b).expect("validated at parse time");
                loop {
                    let x: f64 = d.sample(rng);
                    if x > 0.0 && x < 1.0 {
                        break x;
                    }
                }
            }
            ParamDist::Uniform { a, b } => rng.gen_range(*a..=*b),
        };
        v.insert(name.clone(), value);
    }
    v
}

/// Checks a valuation against the declared parameters and their supports.
pub fn check_valuation(space: &ParameterSpace, theta: &Valuation) -> Result<(), ModelError> {
    for (name, dist) in &space.params {
        let value = *theta
            .get(name)
            .ok_or_else(|| ModelError::MissingParameter(name.clone()))?;
        let (lo, hi) = dist.support();
        if !(value >= lo && value <= hi) {
            return Err(ModelError::ValueOutsideSupport { name: name.clone(), value, lo, hi });
        }
    }
    Ok(())
}

/// Instantiates the concrete MDP induced by a valuation. Every row is checked
/// to sum to 1 within `ROW_SUM_TOL`; deviations are an error, never repaired.
pub fn instantiate(pmdp: &ParametricMdp, theta: &Valuation) -> Result<MdpInstance, ModelError> {
    check_valuation(&pmdp.params, theta)?;
    let lookup = |name: &str| theta[name];
    let mut kernel = Vec::with_capacity(pmdp.n_states);
    for (s, rows) in pmdp.transitions.iter().enumerate() {
        let mut krows = Vec::with_capacity(rows.len());
        for (a, row) in rows.iter().enumerate() {
            let mut krow = Vec::with_capacity(row.len());
            let mut sum = 0.0;
            for t in row {
                let p = t.expr.eval(&lookup);
                if !(0.0..=1.0).contains(&p) {
                    return Err(ModelError::ProbabilityRange { s, a, to: t.to, value: p });
                }
                sum += p;
                krow.push((t.to, p));
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(ModelError::RowSum { s, a, sum });
            }
            krows.push(krow);
        }
        kernel.push(krows);
    }
    Ok(MdpInstance {
        n_states: pmdp.n_states,
        initial: pmdp.initial.clone(),
        actions: pmdp.actions.clone(),
        kernel,
        rewards: pmdp.rewards.clone(),
        objective: pmdp.objective.clone(),
    })
}

/// One entry of the graph-preservation report.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphViolation {
    pub s: usize,
    pub a: usize,
    pub to: usize,
    pub why: String,
}

/// Probes the model at the given valuations and reports transitions whose
/// evaluated probability leaves [0, 1] at some probe, or is zero at one probe
/// and positive at another (a support change across the parameter box).
pub fn validate_graph_preservation(
    pmdp: &ParametricMdp,
    probes: &[Valuation],
) -> Vec<GraphViolation> {
    let mut out = Vec::new();
    for (s, rows) in pmdp.transitions.iter().enumerate() {
        for (a, row) in rows.iter().enumerate() {
            for t in row {
                let mut saw_zero = false;
                let mut saw_positive = false;
                let mut range_bad: Option<f64> = None;
                for theta in probes {
                    let p = t.expr.eval(&|name| theta[name]);
                    if !(0.0..=1.0).contains(&p) {
                        range_bad = Some(p);
                        break;
                    }
                    if p == 0.0 {
                        saw_zero = true;
                    } else {
                        saw_positive = true;
                    }
                }
                if let Some(p) = range_bad {
                    out.push(GraphViolation {
                        s,
                        a,
                        to: t.to,
                        why: format!("probability {p} exits [0, 1]"),
                    });
                } else if saw_zero && saw_positive {
                    out.push(GraphViolation {
                        s,
                        a,
                        to: t.to,
                        why: "support changes across probes (zero at one, positive at another)"
                            .into(),
                    });
                }
            }
        }
    }
    out
}

/// Default probe set: the corners of the support box plus random interior
/// points drawn from the parameter distributions.
pub fn default_probes(space: &ParameterSpace, interior: usize, rng: &mut SeedStream) -> Vec<Valuation> {
    let names: Vec<&String> = space.params.keys().collect();
    let mut probes = Vec::new();
    // Corner enumeration is exponential in the parameter count; cap it and
    // rely on random probes for high-dimensional spaces.
    if names.len() <= 10 {
        let corners = 1usize << names.len();
        for mask in 0..corners {
            let mut v = Valuation::new();
            for (i, name) in names.iter().enumerate() {
                let (lo, hi) = space.params[*name].support();
                // Nudge open Beta supports inward.
                let (lo, hi) = match space.params[*name] {
                    ParamDist::Beta { .. } => (lo + 1e-9, hi - 1e-9),
                    _ => (lo, hi),
                };
                v.insert((*name).clone(), if mask >> i & 1 == 1 { hi } else { lo });
            }
            probes.push(v);
        }
    }
    for _ in 0..interior {
        probes.push(sample_valuation(space, rng));
    }
    probes
}

impl MdpInstance {
    /// Reward attached to a state, 0 when absent.
    pub fn state_reward(&self, s: usize) -> f64 {
        self.rewards.states.get(&s).copied().unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    pub(crate) fn minimal_doc() -> String {
        serde_json::json!({
            "states": 2,
            "initial": {"0": 1.0},
            "actions": {"0": ["go"], "1": ["stay"]},
            "parameters": {"p": {"dist": "beta", "a": 5.0, "b": 5.0}},
            "transitions": [
                {"s": 0, "a": "go", "to": 1, "expr": "p"},
                {"s": 0, "a": "go", "to": 0, "expr": "1 - p"},
                {"s": 1, "a": "stay", "to": 1, "expr": "1"}
            ],
            "objective": {"kind": "reach", "target": [1], "direction": "max"}
        })
        .to_string()
    }

    #[test]
    fn parses_minimal_model() {
        let m = parse_model(&minimal_doc()).unwrap();
        assert_eq!(m.n_states, 2);
        assert_eq!(m.params.params.len(), 1);
        assert_eq!(m.n_transitions(), 3);
    }

    #[test]
    fn rejects_undeclared_parameter() {
        let doc = minimal_doc().replace("\"expr\":\"p\"", "\"expr\":\"q\"");
        match parse_model(&doc) {
            Err(ModelError::UndeclaredParameter { name, .. }) => assert_eq!(name, "q"),
            other => panic!("expected undeclared-parameter error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_successor() {
        let doc = serde_json::json!({
            "states": 2,
            "initial": {"0": 1.0},
            "actions": {"0": ["go"], "1": ["stay"]},
            "parameters": {"p": {"dist": "beta", "a": 5.0, "b": 5.0}},
            "transitions": [
                {"s": 0, "a": "go", "to": 1, "expr": "p"},
                {"s": 0, "a": "go", "to": 1, "expr": "1 - p"},
                {"s": 1, "a": "stay", "to": 1, "expr": "1"}
            ],
            "objective": {"kind": "reach", "target": [1], "direction": "max"}
        })
        .to_string();
        assert!(matches!(parse_model(&doc), Err(ModelError::DuplicateSuccessor { .. })));
    }

    #[test]
    fn rejects_bad_initial_distribution() {
        let doc = minimal_doc().replace("\"initial\":{\"0\":1.0}", "\"initial\":{\"0\":0.5}");
        assert!(matches!(parse_model(&doc), Err(ModelError::InitialSum(_))));
    }

    #[test]
    fn instantiate_evaluates_expressions() {
        let m = parse_model(&minimal_doc()).unwrap();
        let mut theta = Valuation::new();
        theta.insert("p".into(), 0.6);
        let inst = instantiate(&m, &theta).unwrap();
        assert!((inst.kernel[0][0][0].1 - 0.6).abs() < 1e-15);
        assert!((inst.kernel[0][0][1].1 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn instantiate_rejects_negative_probability() {
        // Row p + (1 - 2p): at p = 0.6 the second entry is negative.
        let doc = serde_json::json!({
            "states": 2,
            "initial": {"0": 1.0},
            "actions": {"0": ["go"], "1": ["stay"]},
            "parameters": {"p": {"dist": "uniform", "a": 0.0, "b": 1.0}},
            "transitions": [
                {"s": 0, "a": "go", "to": 1, "expr": "p * 2"},
                {"s": 0, "a": "go", "to": 0, "expr": "1 - p - p"},
                {"s": 1, "a": "stay", "to": 1, "expr": "1"}
            ],
            "objective": {"kind": "reach", "target": [1], "direction": "max"}
        });
        // "p * 2" has an out-of-range literal; write it as p + p instead.
        let doc = doc.to_string().replace("p * 2", "p + p");
        let m = parse_model(&doc).unwrap();
        let mut theta = Valuation::new();
        theta.insert("p".into(), 0.6);
        assert!(matches!(
            instantiate(&m, &theta),
            Err(ModelError::ProbabilityRange { .. }) | Err(ModelError::RowSum { .. })
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let m = parse_model(&minimal_doc()).unwrap();
        let v1 = sample_valuation(&m.params, &mut SeedStream::derive(7, 0, 0));
        let v2 = sample_valuation(&m.params, &mut SeedStream::derive(7, 0, 0));
        assert_eq!(v1, v2);
        let p = v1["p"];
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn uniform_sampling_in_support() {
        let mut params = BTreeMap::new();
        params.insert("u".to_string(), ParamDist::Uniform { a: 0.75, b: 0.95 });
        let space = ParameterSpace { params };
        for i in 0..50 {
            let v = sample_valuation(&space, &mut SeedStream::derive(1, 0, i));
            assert!(v["u"] >= 0.75 && v["u"] <= 0.95);
        }
    }

    #[test]
    fn graph_preservation_flags_sign_change() {
        let doc = serde_json::json!({
            "states": 2,
            "initial": {"0": 1.0},
            "actions": {"0": ["go"], "1": ["stay"]},
            "parameters": {"p": {"dist": "uniform", "a": 0.0, "b": 1.0}},
            "transitions": [
                {"s": 0, "a": "go", "to": 1, "expr": "p - 0.5"},
                {"s": 0, "a": "go", "to": 0, "expr": "1 - p + 0.5"},
                {"s": 1, "a": "stay", "to": 1, "expr": "1"}
            ],
            "objective": {"kind": "reach", "target": [1], "direction": "max"}
        })
        .to_string();
        let m = parse_model(&doc).unwrap();
        let mk = |x: f64| {
            let mut v = Valuation::new();
            v.insert("p".into(), x);
            v
        };
        let report = validate_graph_preservation(&m, &[mk(0.4), mk(0.6)]);
        assert!(report.iter().any(|v| v.s == 0 && v.to == 1));
        // A plain parameter inside (0,1) is clean.
        let m2 = parse_model(&minimal_doc()).unwrap();
        assert!(validate_graph_preservation(&m2, &[mk(0.2)]).is_empty());
    }

    #[test]
    fn round_trip_serialization() {
        let m = parse_model(&minimal_doc()).unwrap();
        let doc = serialize_model(&m);
        let m2 = from_doc(&doc).unwrap();
        assert_eq!(m, m2);
    }
}

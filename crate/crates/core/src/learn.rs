//! Interval MDP learners: PAC Wilson-score-with-continuity-correction
//! intervals, linearly updating intervals (LUI), maximum-a-posteriori point
//! estimates and UCRL2-style widths.

use crate::model::{EvaluationSpec, ParametricMdp, Rewards};
use crate::simulate::PooledCounts;
use serde::{Deserialize, Serialize};

/// Default graph-preserving floor for interval lower bounds.
pub const DEFAULT_MU: f64 = 1e-6;

/// Which learner produced an interval MDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    Pac,
    Lui,
    Map,
    Ucrl2,
}

/// Record of how an interval MDP was constructed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub method: LearnerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub n_unknown: usize,
    pub mu: f64,
}

/// An interval over one transition probability.
pub type Interval = (f64, f64);

/// An MDP with interval-valued transition probabilities, sharing the support
/// of the parametric model it was learned from.
#[derive(Debug, Clone)]
pub struct IntervalMdp {
    pub n_states: usize,
    pub initial: Vec<(usize, f64)>,
    pub actions: Vec<Vec<String>>,
    /// Per (state, action index): (successor, lo, hi), aligned with the
    /// parametric transition lists.
    pub rows: Vec<Vec<Vec<(usize, f64, f64)>>>,
    pub rewards: Rewards,
    pub objective: EvaluationSpec,
    pub provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("row ({s},{a}) infeasible: sum of lower bounds {lo_sum} / upper bounds {hi_sum} cannot bracket 1")]
    RowInfeasible { s: usize, a: usize, lo_sum: f64, hi_sum: f64 },
    #[error("gamma must lie in (0,1), got {0}")]
    BadGamma(f64),
    #[error("mu must be positive, got {0}")]
    BadMu(f64),
}

/// PAC learning configuration: `gamma` is the overall inclusion
/// miss-probability for one environment, split uniformly over the unknown
/// transitions; `mu` is the graph-preserving floor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PacConfig {
    pub gamma: f64,
    pub mu: f64,
}

impl Default for PacConfig {
    fn default() -> Self {
        PacConfig { gamma: 1e-4, mu: DEFAULT_MU }
    }
}

// ---------------------------------------------------------------------------
// Normal quantile
// ---------------------------------------------------------------------------

/// Inverse standard normal CDF by Wichura's AS 241 (PPND16) rational
/// approximations; absolute error well below 1e-10 over (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0,1), got {p}");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = poly(
            &[
                3.387_132_872_796_366_608e0,
                1.331_416_678_917_843_774_5e2,
                1.971_590_950_306_551_442_7e3,
                1.373_169_376_550_946_112_5e4,
                4.592_195_393_154_987_145_7e4,
                6.726_577_092_700_870_085_3e4,
                3.343_057_558_358_812_810_5e4,
                2.509_080_928_730_122_672_7e3,
            ],
            r,
        );
        let den = poly(
            &[
                1.0,
                4.231_333_070_160_091_125_2e1,
                6.871_870_074_920_579_083e2,
                5.394_196_021_424_751_107_7e3,
                2.121_379_430_158_659_586_7e4,
                3.930_789_580_009_271_061e4,
                2.872_908_573_572_194_267_4e4,
                5.226_495_278_852_854_561e3,
            ],
            r,
        );
        return q * num / den;
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        let num = poly(
            &[
                1.423_437_110_749_683_577_3e0,
                4.630_337_846_156_545_295_9e0,
                5.769_497_221_460_691_405_5e0,
                3.647_848_324_763_204_605e0,
                1.270_458_252_452_368_382_6e0,
                2.417_807_251_774_506_117_7e-1,
                2.272_384_498_926_918_458_3e-2,
                7.745_450_142_783_414_076_4e-4,
            ],
            r,
        );
        let den = poly(
            &[
                1.0,
                2.053_191_626_637_758_821_9e0,
                1.676_384_830_183_803_849_4e0,
                6.897_673_349_851_000_045_5e-1,
                1.481_039_764_274_800_745_9e-1,
                1.519_866_656_361_645_719_7e-2,
                5.475_938_084_995_344_946e-4,
                1.050_750_071_644_416_843_2e-9,
            ],
            r,
        );
        num / den
    } else {
        let r = r - 5.0;
        let num = poly(
            &[
                6.657_904_643_501_103_777_2e0,
                5.463_784_911_164_114_369_9e0,
                1.784_826_539_917_291_335_8e0,
                2.965_605_718_285_048_912_3e-1,
                2.653_218_952_657_612_309_3e-2,
                1.242_660_947_388_078_438_6e-3,
                2.711_555_568_743_487_578_2e-5,
                2.010_334_399_292_288_132_6e-7,
            ],
            r,
        );
        let den = poly(
            &[
                1.0,
                5.998_322_065_558_879_376_9e-1,
                1.369_298_809_227_358_053_1e-1,
                1.487_536_129_085_061_485_3e-2,
                7.868_691_311_456_132_591e-4,
                1.846_318_317_510_054_681_8e-5,
                1.421_511_758_316_445_888_7e-7,
                2.044_263_103_389_939_785_6e-15,
            ],
            r,
        );
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

// ---------------------------------------------------------------------------
// Wilson score interval with continuity correction
// ---------------------------------------------------------------------------

/// Point estimate `k / h`; callers must handle `h = 0` separately.
pub fn point_estimate(k: u64, h: u64) -> Option<f64> {
    if h == 0 {
        None
    } else {
        Some(k as f64 / h as f64)
    }
}

/// Wilson score interval with continuity correction for `h` Bernoulli trials
/// with point estimate `p_tilde`, per-transition miss probability `gamma_p`,
/// floored at `mu` and capped at 1. Radicands are clamped at zero before the
/// square root; they can round slightly negative for extreme `p_tilde`.
pub fn wilson_cc_interval(h: u64, p_tilde: f64, gamma_p: f64, mu: f64) -> Interval {
    debug_assert!(h >= 1);
    let hf = h as f64;
    let z = normal_quantile(1.0 - gamma_p / 2.0);
    let z2 = z * z;
    let common = 2.0 * hf * p_tilde + z2;
    let denom = 2.0 * (hf + z2);
    let rad_lo =
        (z2 - 1.0 / hf + 4.0 * hf * p_tilde * (1.0 - p_tilde) + (4.0 * p_tilde - 2.0)).max(0.0);
    let rad_hi =
        (z2 - 1.0 / hf + 4.0 * hf * p_tilde * (1.0 - p_tilde) - (4.0 * p_tilde - 2.0)).max(0.0);
    let lower = (common - z * rad_lo.sqrt() - 1.0) / denom;
    let upper = (common + z * rad_hi.sqrt() + 1.0) / denom;
    (lower.max(mu), upper.min(1.0))
}

// ---------------------------------------------------------------------------
// PAC IMDP learning
// ---------------------------------------------------------------------------

/// Number of unknown transition units: constant-expression transitions are
/// model knowledge and do not count; a tying class counts once; untied
/// parametric transitions count individually.
pub fn count_unknown_units(pmdp: &ParametricMdp) -> usize {
    let mut classes = std::collections::HashSet::new();
    let mut untied = 0usize;
    for rows in &pmdp.transitions {
        for row in rows {
            for t in row {
                if t.expr.is_constant() {
                    continue;
                }
                match &t.tie {
                    Some(tie) => {
                        classes.insert(tie.clone());
                    }
                    None => untied += 1,
                }
            }
        }
    }
    classes.len() + untied
}

fn finish_rows(
    pmdp: &ParametricMdp,
    rows: Vec<Vec<Vec<(usize, f64, f64)>>>,
    provenance: Provenance,
) -> Result<IntervalMdp, LearnError> {
    for (s, srows) in rows.iter().enumerate() {
        for (a, row) in srows.iter().enumerate() {
            let lo_sum: f64 = row.iter().map(|t| t.1).sum();
            let hi_sum: f64 = row.iter().map(|t| t.2).sum();
            if lo_sum > 1.0 + 1e-12 || hi_sum < 1.0 - 1e-12 {
                return Err(LearnError::RowInfeasible { s, a, lo_sum, hi_sum });
            }
        }
    }
    Ok(IntervalMdp {
        n_states: pmdp.n_states,
        initial: pmdp.initial.clone(),
        actions: pmdp.actions.clone(),
        rows,
        rewards: pmdp.rewards.clone(),
        objective: pmdp.objective.clone(),
        provenance,
    })
}

/// Learns a PAC interval MDP: each unknown transition gets a Wilson-CC
/// interval at per-transition confidence `gamma / n_unknown`; transitions
/// with constant expressions become singleton intervals and spend no
/// confidence; unvisited rows fall back to `[mu, 1]`.
pub fn learn_pac_imdp(
    pmdp: &ParametricMdp,
    counts: &PooledCounts,
    cfg: &PacConfig,
) -> Result<IntervalMdp, LearnError> {
    if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
        return Err(LearnError::BadGamma(cfg.gamma));
    }
    if !(cfg.mu > 0.0) {
        return Err(LearnError::BadMu(cfg.mu));
    }
    let n_u = count_unknown_units(pmdp);
    let gamma_p = if n_u > 0 { cfg.gamma / n_u as f64 } else { cfg.gamma };
    let mut rows = Vec::with_capacity(pmdp.n_states);
    for (s, srows) in pmdp.transitions.iter().enumerate() {
        let mut out_rows = Vec::with_capacity(srows.len());
        for (a, row) in srows.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (i, t) in row.iter().enumerate() {
                if t.expr.is_constant() {
                    let v = t.expr.eval(&|_| f64::NAN);
                    out.push((t.to, v, v));
                    continue;
                }
                let h = counts.visit[s][a][i];
                let k = counts.outcome[s][a][i];
                let (lo, hi) = match point_estimate(k, h) {
                    None => (cfg.mu, 1.0),
                    Some(p_tilde) => wilson_cc_interval(h, p_tilde, gamma_p, cfg.mu),
                };
                out.push((t.to, lo, hi));
            }
            out_rows.push(out);
        }
        rows.push(out_rows);
    }
    finish_rows(
        pmdp,
        rows,
        Provenance { method: LearnerKind::Pac, gamma: Some(cfg.gamma), n_unknown: n_u, mu: cfg.mu },
    )
}

// ---------------------------------------------------------------------------
// LUI
// ---------------------------------------------------------------------------

/// Prior interval and strength for one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuiState {
    pub lo: f64,
    pub hi: f64,
    pub strength: f64,
}

impl LuiState {
    pub fn new(lo: f64, hi: f64, strength: f64) -> LuiState {
        debug_assert!(0.0 <= lo && lo <= hi && hi <= 1.0 && strength >= 0.0);
        LuiState { lo, hi, strength }
    }
}

/// One linear conjugate update: posterior bounds `(n*b + k) / (n + N)` and
/// strength `n + N`. With `n + N = 0` the prior is returned unchanged.
pub fn lui_update(state: LuiState, k: u64, n_visits: u64) -> LuiState {
    let n = state.strength;
    let total = n + n_visits as f64;
    if total == 0.0 {
        return state;
    }
    let kf = k as f64;
    LuiState {
        lo: (n * state.lo + kf) / total,
        hi: (n * state.hi + kf) / total,
        strength: total,
    }
}

/// Learns an interval MDP with LUI updates starting from the `[mu, 1]` prior
/// at strength 0 on every unknown transition.
pub fn learn_lui_imdp(
    pmdp: &ParametricMdp,
    counts: &PooledCounts,
    mu: f64,
) -> Result<IntervalMdp, LearnError> {
    if !(mu > 0.0) {
        return Err(LearnError::BadMu(mu));
    }
    let mut rows = Vec::with_capacity(pmdp.n_states);
    for (s, srows) in pmdp.transitions.iter().enumerate() {
        let mut out_rows = Vec::with_capacity(srows.len());
        for (a, row) in srows.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (i, t) in row.iter().enumerate() {
                if t.expr.is_constant() {
                    let v = t.expr.eval(&|_| f64::NAN);
                    out.push((t.to, v, v));
                    continue;
                }
                let post = lui_update(
                    LuiState::new(mu, 1.0, 0.0),
                    counts.outcome[s][a][i],
                    counts.visit[s][a][i],
                );
                // Strength 0 priors collapse to the point estimate; keep the
                // graph-preserving floor.
                out.push((t.to, post.lo.max(mu), post.hi.min(1.0).max(mu)));
            }
            out_rows.push(out);
        }
        rows.push(out_rows);
    }
    // LUI point-collapsed rows can be infeasible only through floor effects;
    // widen rows that lost feasibility to keep the invariant.
    let rows = repair_rows(rows);
    finish_rows(
        pmdp,
        rows,
        Provenance {
            method: LearnerKind::Lui,
            gamma: None,
            n_unknown: count_unknown_units(pmdp),
            mu,
        },
    )
}

// ---------------------------------------------------------------------------
// MAP
// ---------------------------------------------------------------------------

/// Dirichlet prior over the successors of one (s, a) row.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    pub alpha: Vec<f64>,
}

impl DirichletPrior {
    pub fn uniform(m: usize) -> DirichletPrior {
        DirichletPrior { alpha: vec![1.0; m] }
    }
}

/// Mode of the posterior Dirichlet: `(alpha_i + k_i - 1) / (sum alpha + N - m)`.
/// With a uniform all-ones prior and no observations the mode is undefined;
/// the uniform vector is returned instead.
pub fn map_mode(prior: &DirichletPrior, counts: &[u64]) -> Vec<f64> {
    let m = prior.alpha.len();
    assert_eq!(m, counts.len());
    let n: u64 = counts.iter().sum();
    let alpha_sum: f64 = prior.alpha.iter().sum();
    let denom = alpha_sum + n as f64 - m as f64;
    if denom <= 0.0 {
        return vec![1.0 / m as f64; m];
    }
    prior
        .alpha
        .iter()
        .zip(counts)
        .map(|(a, k)| (a + *k as f64 - 1.0) / denom)
        .collect()
}

/// Learns an interval MDP of MAP point estimates with uniform Dirichlet
/// priors, emitted as singleton intervals floored at `mu`. When flooring
/// lifts zero entries, the largest entry's lower bound gives back the added
/// mass so rows stay feasible.
pub fn learn_map_imdp(
    pmdp: &ParametricMdp,
    counts: &PooledCounts,
    mu: f64,
) -> Result<IntervalMdp, LearnError> {
    if !(mu > 0.0) {
        return Err(LearnError::BadMu(mu));
    }
    let mut rows = Vec::with_capacity(pmdp.n_states);
    for (s, srows) in pmdp.transitions.iter().enumerate() {
        let mut out_rows = Vec::with_capacity(srows.len());
        for (a, row) in srows.iter().enumerate() {
            let all_known = row.iter().all(|t| t.expr.is_constant());
            if all_known {
                out_rows.push(
                    row.iter()
                        .map(|t| {
                            let v = t.expr.eval(&|_| f64::NAN);
                            (t.to, v, v)
                        })
                        .collect(),
                );
                continue;
            }
            let ks: Vec<u64> = (0..row.len()).map(|i| counts.outcome[s][a][i]).collect();
            let mode = map_mode(&DirichletPrior::uniform(row.len()), &ks);
            let mut out: Vec<(usize, f64, f64)> = row
                .iter()
                .zip(&mode)
                .map(|(t, &v)| (t.to, v.max(mu), v.max(mu)))
                .collect();
            let lifted: f64 =
                out.iter().zip(&mode).map(|(o, &v)| o.1 - v).sum();
            if lifted > 0.0 {
                // Give the lift back on the largest entry's lower bound.
                if let Some(best) = (0..out.len())
                    .max_by(|&i, &j| out[i].1.partial_cmp(&out[j].1).unwrap())
                {
                    out[best].1 = (out[best].1 - lifted).max(mu);
                }
            }
            out_rows.push(out);
        }
        rows.push(out_rows);
    }
    finish_rows(
        pmdp,
        rows,
        Provenance {
            method: LearnerKind::Map,
            gamma: None,
            n_unknown: count_unknown_units(pmdp),
            mu,
        },
    )
}

// ---------------------------------------------------------------------------
// UCRL2
// ---------------------------------------------------------------------------

/// Model dimensions entering the UCRL2 width.
#[derive(Debug, Clone, Copy)]
pub struct UcrlDims {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_transitions: usize,
}

impl UcrlDims {
    pub fn of(pmdp: &ParametricMdp) -> UcrlDims {
        let mut names = std::collections::HashSet::new();
        for acts in &pmdp.actions {
            for a in acts {
                names.insert(a.clone());
            }
        }
        UcrlDims {
            n_states: pmdp.n_states,
            n_actions: names.len(),
            n_transitions: pmdp.n_transitions(),
        }
    }
}

/// UCRL2 interval half-width
/// `sqrt(14 |S| log(2 |A| |T| / gamma) / H)`.
pub fn ucrl2_width(h: u64, dims: UcrlDims, gamma: f64) -> f64 {
    assert!(h >= 1);
    assert!(gamma > 0.0 && gamma < 1.0);
    let s = dims.n_states as f64;
    let arg = 2.0 * dims.n_actions as f64 * dims.n_transitions as f64 / gamma;
    (14.0 * s * arg.ln() / h as f64).sqrt()
}

/// Learns an interval MDP with UCRL2 widths around frequentist estimates;
/// widths of 1 or more, and unvisited rows, saturate to `[mu, 1]`.
pub fn learn_ucrl2_imdp(
    pmdp: &ParametricMdp,
    counts: &PooledCounts,
    gamma: f64,
    mu: f64,
) -> Result<IntervalMdp, LearnError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(LearnError::BadGamma(gamma));
    }
    if !(mu > 0.0) {
        return Err(LearnError::BadMu(mu));
    }
    let dims = UcrlDims::of(pmdp);
    let mut rows = Vec::with_capacity(pmdp.n_states);
    for (s, srows) in pmdp.transitions.iter().enumerate() {
        let mut out_rows = Vec::with_capacity(srows.len());
        for (a, row) in srows.iter().enumerate() {
            let mut out = Vec::with_capacity(row.len());
            for (i, t) in row.iter().enumerate() {
                if t.expr.is_constant() {
                    let v = t.expr.eval(&|_| f64::NAN);
                    out.push((t.to, v, v));
                    continue;
                }
                let h = counts.visit[s][a][i];
                let k = counts.outcome[s][a][i];
                let (lo, hi) = match point_estimate(k, h) {
                    None => (mu, 1.0),
                    Some(p_tilde) => {
                        let delta = ucrl2_width(h, dims, gamma);
                        if delta >= 1.0 {
                            (mu, 1.0)
                        } else {
                            ((p_tilde - delta).max(mu), (p_tilde + delta).min(1.0))
                        }
                    }
                };
                out.push((t.to, lo, hi));
            }
            out_rows.push(out);
        }
        rows.push(out_rows);
    }
    finish_rows(
        pmdp,
        rows,
        Provenance {
            method: LearnerKind::Ucrl2,
            gamma: Some(gamma),
            n_unknown: count_unknown_units(pmdp),
            mu,
        },
    )
}

/// Widens point-interval rows whose floors broke the `sum(lo) <= 1 <= sum(hi)`
/// bracket: excess lower mass is taken from the largest lower bound, missing
/// upper mass is added to the largest upper bound.
fn repair_rows(mut rows: Vec<Vec<Vec<(usize, f64, f64)>>>) -> Vec<Vec<Vec<(usize, f64, f64)>>> {
    for srows in rows.iter_mut() {
        for row in srows.iter_mut() {
            let lo_sum: f64 = row.iter().map(|t| t.1).sum();
            if lo_sum > 1.0 {
                if let Some(best) =
                    (0..row.len()).max_by(|&i, &j| row[i].1.partial_cmp(&row[j].1).unwrap())
                {
                    row[best].1 = (row[best].1 - (lo_sum - 1.0)).max(0.0);
                }
            }
            let hi_sum: f64 = row.iter().map(|t| t.2).sum();
            if hi_sum < 1.0 {
                if let Some(best) =
                    (0..row.len()).max_by(|&i, &j| row[i].2.partial_cmp(&row[j].2).unwrap())
                {
                    row[best].2 = (row[best].2 + (1.0 - hi_sum)).min(1.0);
                }
            }
        }
    }
    rows
}

impl IntervalMdp {
    /// Row-feasibility invariant over all (s, a).
    pub fn rows_feasible(&self) -> bool {
        self.rows.iter().all(|srows| {
            srows.iter().all(|row| {
                let lo: f64 = row.iter().map(|t| t.1).sum();
                let hi: f64 = row.iter().map(|t| t.2).sum();
                lo <= 1.0 + 1e-9 && hi >= 1.0 - 1e-9
            })
        })
    }

    /// True when the concrete kernel lies inside every interval.
    pub fn includes(&self, instance: &crate::model::MdpInstance) -> bool {
        self.rows.iter().zip(&instance.kernel).all(|(srows, krows)| {
            srows.iter().zip(krows).all(|(row, krow)| {
                row.iter()
                    .zip(krow)
                    .all(|(&(_, lo, hi), &(_, p))| p >= lo - 1e-12 && p <= hi + 1e-12)
            })
        })
    }
}

// JSON export: transitions as {s, a, to, lo, hi} plus the provenance block.
#[derive(Debug, Serialize, Deserialize)]
pub struct IntervalMdpDoc {
    pub states: usize,
    pub transitions: Vec<IntervalTransitionDoc>,
    pub provenance: Provenance,
    pub objective: EvaluationSpec,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IntervalTransitionDoc {
    pub s: usize,
    pub a: String,
    pub to: usize,
    pub lo: f64,
    pub hi: f64,
}

pub fn export_interval_mdp(imdp: &IntervalMdp) -> IntervalMdpDoc {
    let mut transitions = Vec::new();
    for (s, srows) in imdp.rows.iter().enumerate() {
        for (a, row) in srows.iter().enumerate() {
            for &(to, lo, hi) in row {
                transitions.push(IntervalTransitionDoc {
                    s,
                    a: imdp.actions[s][a].clone(),
                    to,
                    lo,
                    hi,
                });
            }
        }
    }
    IntervalMdpDoc {
        states: imdp.n_states,
        transitions,
        provenance: imdp.provenance.clone(),
        objective: imdp.objective.clone(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ImportError {
    #[error("interval document does not cover transition ({s},{a})->{to} of the model support")]
    MissingTransition { s: usize, a: usize, to: usize },
    #[error("interval document references ({s},{a:?})->{to} outside the model support")]
    UnknownTransition { s: usize, a: String, to: usize },
    #[error("interval [{lo}, {hi}] at ({s},{a:?})->{to} is not a valid probability interval")]
    BadInterval { s: usize, a: String, to: usize, lo: f64, hi: f64 },
}

/// Rebuilds an interval MDP from its exported document against the model
/// that fixes states, actions, support and objective.
pub fn interval_mdp_from_doc(
    doc: &IntervalMdpDoc,
    pmdp: &ParametricMdp,
) -> Result<IntervalMdp, ImportError> {
    let mut rows: Vec<Vec<Vec<(usize, f64, f64)>>> = pmdp
        .transitions
        .iter()
        .map(|srows| srows.iter().map(|row| row.iter().map(|t| (t.to, -1.0, -1.0)).collect()).collect())
        .collect();
    for t in &doc.transitions {
        let a = pmdp
            .actions
            .get(t.s)
            .and_then(|acts| acts.iter().position(|x| *x == t.a))
            .ok_or_else(|| ImportError::UnknownTransition { s: t.s, a: t.a.clone(), to: t.to })?;
        let slot = rows[t.s][a]
            .iter_mut()
            .find(|(to, _, _)| *to == t.to)
            .ok_or_else(|| ImportError::UnknownTransition { s: t.s, a: t.a.clone(), to: t.to })?;
        if !(0.0 <= t.lo && t.lo <= t.hi && t.hi <= 1.0) {
            return Err(ImportError::BadInterval {
                s: t.s,
                a: t.a.clone(),
                to: t.to,
                lo: t.lo,
                hi: t.hi,
            });
        }
        slot.1 = t.lo;
        slot.2 = t.hi;
    }
    for (s, srows) in rows.iter().enumerate() {
        for (a, row) in srows.iter().enumerate() {
            for &(to, lo, _) in row {
                if lo < 0.0 {
                    return Err(ImportError::MissingTransition { s, a, to });
                }
            }
        }
    }
    Ok(IntervalMdp {
        n_states: pmdp.n_states,
        initial: pmdp.initial.clone(),
        actions: pmdp.actions.clone(),
        rows,
        rewards: pmdp.rewards.clone(),
        objective: doc.objective.clone(),
        provenance: doc.provenance.clone(),
    })
}

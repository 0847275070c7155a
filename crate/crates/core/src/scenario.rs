//! PAC risk bounds from per-sample performance bounds: binomial tails in
//! log space, bisection on the scenario equation, enumeration over the
//! validity count K, order statistics and the combined certificate.

use crate::model::Direction;
use serde::{Deserialize, Serialize};

/// Bisection tolerance on epsilon.
const BISECT_TOL: f64 = 1e-15;
const BISECT_MAX_ITER: usize = 200;
/// Above this N the binomial CDF switches from the explicit log-space sum to
/// the regularized-incomplete-beta identity.
const SUM_CUTOFF: usize = 100_000;

/// One per-sample performance bound from a learned interval MDP (or any
/// other method producing a bound of formally quantified confidence).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerformanceSample {
    pub value: f64,
}

/// The certificate: guarantee, risk and the bookkeeping behind them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskBound {
    /// Performance guarantee – the k-th order statistic of the sample bounds.
    pub guarantee: Option<f64>,
    pub epsilon: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Number of discarded worst-case samples.
    pub discarded: usize,
    /// The validity count the bound was solved at.
    pub chosen_k_upper: usize,
    /// Confidence share consumed by the scenario side at the chosen K.
    pub beta: f64,
    pub n_samples: usize,
    /// Set when another K than the minimal-epsilon one was forced.
    pub fixed_k: bool,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("beta must lie in (0,1), got {0}")]
    BadBeta(f64),
    #[error("discard count d={d} must be below the sample count N={n}")]
    BadDiscard { d: usize, n: usize },
    #[error("order statistic index k={k} must be below the sample count N={n}")]
    BadOrderIndex { k: usize, n: usize },
    #[error("no sample values given")]
    Empty,
    #[error("gamma={gamma} and eta={eta} admit no feasible K for N={n}, k={k}: certification infeasible")]
    Infeasible { n: usize, k: usize, gamma: f64, eta: f64 },
    #[error("parameter {name} = {value} outside {range}")]
    BadParameter { name: &'static str, value: f64, range: &'static str },
    #[error("fixed K={fixed} is not feasible (K must be <= N-k and have positive confidence share)")]
    FixedKInfeasible { fixed: usize },
}

// ---------------------------------------------------------------------------
// Order statistics
// ---------------------------------------------------------------------------

/// The k-th order statistic in the risk direction: with `Max` objectives the
/// k-th smallest sample (k = 0 is the minimum), with `Min` objectives the
/// k-th largest (risk is exceeding the guarantee). Exactly k samples are
/// strictly worse in the risk direction, counting ties by sorted position.
pub fn order_statistic(
    values: &[f64],
    k: usize,
    direction: Direction,
) -> Result<f64, ScenarioError> {
    let n = values.len();
    if n == 0 {
        return Err(ScenarioError::Empty);
    }
    if k >= n {
        return Err(ScenarioError::BadOrderIndex { k, n });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(match direction {
        Direction::Max => sorted[k],
        Direction::Min => sorted[n - 1 - k],
    })
}

// ---------------------------------------------------------------------------
// Binomial CDF in log space
// ---------------------------------------------------------------------------

/// Cumulative log-factorials `ln(0!), ln(1!), ..., ln(n!)` by compensated
/// summation; adequate far beyond the 1e5 sample sizes the solver targets.
struct LnFactorials(Vec<f64>);

impl LnFactorials {
    fn up_to(n: usize) -> LnFactorials {
        let mut v = Vec::with_capacity(n + 1);
        v.push(0.0);
        let mut sum = 0.0;
        let mut comp = 0.0;
        for i in 1..=n {
            // Kahan step.
            let y = (i as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            v.push(sum);
        }
        LnFactorials(v)
    }
    fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// `P[X <= d]` for `X ~ Binomial(n, p)`, evaluated in log space with a
/// log-sum-exp over the term ladder.
pub fn binomial_cdf(d: usize, n: usize, p: f64) -> f64 {
    assert!(d <= n);
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if d == n { 1.0 } else { 0.0 };
    }
    if n <= SUM_CUTOFF {
        binomial_cdf_sum(d, n, p)
    } else {
        binomial_cdf_betainc(d, n, p)
    }
}

fn binomial_cdf_sum(d: usize, n: usize, p: f64) -> f64 {
    binomial_cdf_sum_with(&LnFactorials::up_to(n), d, n, p)
}

fn binomial_cdf_sum_with(lf: &LnFactorials, d: usize, n: usize, p: f64) -> f64 {
    let lp = p.ln();
    let lq = (-p).ln_1p();
    let mut max_term = f64::NEG_INFINITY;
    let mut terms = Vec::with_capacity(d + 1);
    for i in 0..=d {
        let t = lf.ln_choose(n, i) + i as f64 * lp + (n - i) as f64 * lq;
        max_term = max_term.max(t);
        terms.push(t);
    }
    if max_term == f64::NEG_INFINITY {
        return 0.0;
    }
    // Compensated accumulation of exp(t - max).
    let mut sum = 0.0;
    let mut comp = 0.0;
    for t in terms {
        let y = (t - max_term).exp() - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    (max_term + sum.ln()).exp().min(1.0)
}

/// Identity `P[X <= d] = I_{1-p}(n-d, d+1)` through the regularized
/// incomplete beta function; used for very large n where the explicit sum
/// is wasteful.
fn binomial_cdf_betainc(d: usize, n: usize, p: f64) -> f64 {
    if d == n {
        return 1.0;
    }
    betainc((n - d) as f64, (d + 1) as f64, 1.0 - p)
}

/// Regularized incomplete beta `I_x(a, b)` by the continued fraction of the
/// incomplete beta integral (modified Lentz algorithm).
pub fn betainc(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    // Symmetry for faster continued-fraction convergence.
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - betainc(b, a, 1.0 - x);
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let cf = betainc_cf(a, b, x);
    (ln_front.exp() / a) * cf
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Lanczos approximation of ln Gamma, g = 7, n = 9 coefficients.
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn betainc_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Upper binomial tail `P[Y >= j]` for `Y ~ Binomial(n, p)`; exact 1 for
/// `j <= 0`, log-space complement sum otherwise. For small `p` and large `j`
/// this is a tiny quantity computed without cancellation.
pub fn binomial_upper_tail(j: i64, n: usize, p: f64) -> f64 {
    if j <= 0 {
        return 1.0;
    }
    let j = j as usize;
    if j > n {
        return 0.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    // P[Y >= j] = P[n - Y <= n - j] with n - Y ~ Binomial(n, 1-p); evaluate
    // whichever ladder is shorter.
    if n - j < j {
        binomial_cdf(n - j, n, 1.0 - p)
    } else {
        1.0 - binomial_cdf(j - 1, n, p)
    }
}

// ---------------------------------------------------------------------------
// Scenario equation solving
// ---------------------------------------------------------------------------

/// Solves `sum_{i=0}^{d} C(N,i) eps^i (1-eps)^{N-i} = beta` for the unique
/// `eps` in (0,1). The CDF is monotonically decreasing in `eps`; `d = 0` has
/// the closed form `1 - beta^(1/N)`, the rest is bisection.
pub fn solve_epsilon_for_beta(n: usize, d: usize, beta: f64) -> Result<f64, ScenarioError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(ScenarioError::BadBeta(beta));
    }
    if d >= n {
        return Err(ScenarioError::BadDiscard { d, n });
    }
    if d == 0 {
        // (1 - eps)^N = beta.
        return Ok(-(beta.ln() / n as f64).exp_m1());
    }
    let lf = (n <= SUM_CUTOFF).then(|| LnFactorials::up_to(n));
    let cdf = |eps: f64| match &lf {
        Some(lf) => binomial_cdf_sum_with(lf, d, n, eps),
        None => binomial_cdf_betainc(d, n, eps),
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    for _ in 0..BISECT_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) > beta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < BISECT_TOL {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The confidence share available to the scenario side at validity count K:
/// `beta(K) = eta - P[Y >= N-k-K+1]` with `Y ~ Binomial(N-k, gamma)`.
/// Positive beta means K is feasible.
fn beta_at(n: usize, k: usize, gamma: f64, eta: f64, k_upper: usize) -> f64 {
    let m = n - k;
    let j = (m as i64) - (k_upper as i64) + 1;
    eta - binomial_upper_tail(j, m, gamma)
}

/// Computes the risk bound for `N` samples at IMDP confidence `gamma`,
/// overall confidence `1 - eta`, discarding the `k` worst samples.
///
/// All feasible validity counts `K <= N - k` are enumerated and the minimal
/// epsilon is returned, together with the K that attained it. `fixed_k`
/// forces a particular K instead.
pub fn risk_bound(
    n: usize,
    gamma: f64,
    eta: f64,
    k: usize,
    fixed_k: Option<usize>,
) -> Result<RiskBound, ScenarioError> {
    if n == 0 || k >= n {
        return Err(ScenarioError::BadDiscard { d: k, n });
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(ScenarioError::BadParameter { name: "gamma", value: gamma, range: "[0,1)" });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(ScenarioError::BadParameter { name: "eta", value: eta, range: "(0,1)" });
    }

    let solve_at = |k_upper: usize| -> Option<(f64, f64)> {
        if k_upper > n - k {
            return None;
        }
        let beta = beta_at(n, k, gamma, eta, k_upper);
        if beta <= 0.0 || beta >= 1.0 {
            return None;
        }
        let d = n - k_upper;
        if d >= n {
            return None;
        }
        solve_epsilon_for_beta(n, d, beta).ok().map(|eps| (eps, beta))
    };

    if let Some(fk) = fixed_k {
        let (eps, beta) = solve_at(fk).ok_or(ScenarioError::FixedKInfeasible { fixed: fk })?;
        return Ok(RiskBound {
            guarantee: None,
            epsilon: eps,
            eta,
            gamma,
            discarded: k,
            chosen_k_upper: fk,
            beta,
            n_samples: n,
            fixed_k: true,
        });
    }

    // K runs from N - k downward. Dropping K trades a larger confidence
    // share beta (the binomial tail shrinks) against more discarded
    // constraints d = N - K. Once the tail is negligible, beta is pinned at
    // eta and epsilon grows monotonically as K drops further, so the
    // enumeration can stop at the first increase past that point.
    let mut best: Option<(f64, usize, f64)> = None;
    for k_upper in (1..=(n - k)).rev() {
        if let Some((eps, beta)) = solve_at(k_upper) {
            let improved = match best {
                Some((e, _, _)) => eps < e,
                None => true,
            };
            if improved {
                best = Some((eps, k_upper, beta));
            } else if beta >= eta * (1.0 - 1e-9) {
                break;
            }
        }
    }
    match best {
        Some((eps, k_upper, beta)) => Ok(RiskBound {
            guarantee: None,
            epsilon: eps,
            eta,
            gamma,
            discarded: k,
            chosen_k_upper: k_upper,
            beta,
            n_samples: n,
            fixed_k: false,
        }),
        None => Err(ScenarioError::Infeasible { n, k, gamma, eta }),
    }
}

/// Certifies a set of per-sample performance bounds sharing one `gamma`:
/// the guarantee is the k-th order statistic in the risk direction and the
/// risk bound comes from [`risk_bound`].
pub fn certify(
    samples: &[PerformanceSample],
    gamma: f64,
    eta: f64,
    k: usize,
    direction: Direction,
    fixed_k: Option<usize>,
) -> Result<RiskBound, ScenarioError> {
    if samples.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
    let guarantee = order_statistic(&values, k, direction)?;
    let mut bound = risk_bound(values.len(), gamma, eta, k, fixed_k)?;
    bound.guarantee = Some(guarantee);
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        let v = [3.0, 1.0, 2.0];
        assert_eq!(order_statistic(&v, 0, Direction::Max).unwrap(), 1.0);
        assert_eq!(order_statistic(&v, 1, Direction::Max).unwrap(), 2.0);
        assert_eq!(order_statistic(&v, 0, Direction::Min).unwrap(), 3.0);
        assert_eq!(order_statistic(&v, 2, Direction::Max).unwrap(), 3.0);
        assert!(order_statistic(&v, 3, Direction::Max).is_err());
    }

    #[test]
    fn closed_form_when_nothing_discarded() {
        // N=300, d=0, beta=0.01: eps = 1 - 0.01^(1/300).
        let eps = solve_epsilon_for_beta(300, 0, 0.01).unwrap();
        let want = 1.0 - 0.01f64.powf(1.0 / 300.0);
        assert!((eps - want).abs() < 1e-15);
        assert!((eps - 0.015233).abs() < 1e-6);
        // N=1, d=0, beta=0.5: eps = 0.5.
        let eps = solve_epsilon_for_beta(1, 0, 0.5).unwrap();
        assert!((eps - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bisection_satisfies_equation() {
        let eps = solve_epsilon_for_beta(300, 1, 0.00957).unwrap();
        let v = binomial_cdf(1, 300, eps);
        assert!((v - 0.00957).abs() < 1e-9, "cdf({eps}) = {v}");
    }

    #[test]
    fn rejects_bad_beta() {
        assert_eq!(solve_epsilon_for_beta(10, 0, 0.0), Err(ScenarioError::BadBeta(0.0)));
        assert_eq!(solve_epsilon_for_beta(10, 0, 1.0), Err(ScenarioError::BadBeta(1.0)));
    }

    #[test]
    fn binomial_cdf_sane() {
        // Symmetric p = 1/2, n = 10: P[X <= 5] space.
        let v = binomial_cdf(5, 10, 0.5);
        assert!((v - 0.623046875).abs() < 1e-12);
        let v = binomial_cdf(10, 10, 0.5);
        assert!((v - 1.0).abs() < 1e-12);
        // Large-N stability.
        let v = binomial_cdf(10, 10_000, 1e-3);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn betainc_identity_matches_sum() {
        for (d, n, p) in [(3usize, 1000usize, 0.01f64), (50, 1000, 0.04), (999, 1000, 0.9)] {
            let s = binomial_cdf_sum(d, n, p);
            let b = binomial_cdf_betainc(d, n, p);
            assert!(
                (s - b).abs() < 1e-10 * s.max(1e-300),
                "sum {s} vs betainc {b} at d={d} n={n} p={p}"
            );
        }
    }

    #[test]
    fn paper_scale_risk_bounds() {
        // N=300, gamma=1e-4, eta=1e-2: epsilon near the reported 0.027 and
        // never above it plus tolerance.
        let b = risk_bound(300, 1e-4, 1e-2, 0, None).unwrap();
        assert!(b.epsilon <= 0.027 + 0.005, "epsilon {} too large", b.epsilon);
        assert!(b.epsilon > 0.012, "epsilon {} implausibly small", b.epsilon);
        let b5 = risk_bound(300, 1e-4, 1e-2, 5, None).unwrap();
        let b10 = risk_bound(300, 1e-4, 1e-2, 10, None).unwrap();
        assert!(b5.epsilon <= 0.052 + 0.005 && b5.epsilon > b.epsilon);
        assert!(b10.epsilon <= 0.075 + 0.005 && b10.epsilon > b5.epsilon);
    }

    #[test]
    fn gamma_zero_reduces_to_classical_scenario_bound() {
        for n in [1usize, 10, 300, 10_000] {
            let b = risk_bound(n, 0.0, 0.01, 0, None).unwrap();
            let want = 1.0 - 0.01f64.powf(1.0 / n as f64);
            assert!(
                (b.epsilon - want).abs() < 1e-12,
                "n={n}: {} vs {}",
                b.epsilon,
                want
            );
            assert_eq!(b.chosen_k_upper, n);
        }
    }

    #[test]
    fn certify_composes() {
        let samples: Vec<PerformanceSample> =
            [0.5, 0.6, 0.7].iter().map(|&value| PerformanceSample { value }).collect();
        let b = certify(&samples, 1e-4, 0.05, 0, Direction::Max, None).unwrap();
        assert_eq!(b.guarantee, Some(0.5));
        let direct = risk_bound(3, 1e-4, 0.05, 0, None).unwrap();
        assert_eq!(b.epsilon, direct.epsilon);
        // k = N-1 uses the best sample and a strictly larger epsilon.
        let b2 = certify(&samples, 1e-4, 0.05, 2, Direction::Max, None).unwrap();
        assert_eq!(b2.guarantee, Some(0.7));
        assert!(b2.epsilon > b.epsilon);
    }

    #[test]
    fn infeasible_when_gamma_dominates() {
        // Even the weakest requirement (a single valid bound, K = 1) fails
        // when gamma^N >= eta: 0.95^50 > 0.01.
        let r = risk_bound(50, 0.95, 0.01, 0, None);
        assert!(matches!(r, Err(ScenarioError::Infeasible { .. })));
    }

    #[test]
    fn fixed_k_is_respected() {
        let free = risk_bound(300, 1e-4, 1e-2, 0, None).unwrap();
        let forced = risk_bound(300, 1e-4, 1e-2, 0, Some(free.chosen_k_upper - 1)).unwrap();
        assert!(forced.fixed_k);
        assert!(forced.epsilon >= free.epsilon);
    }
}

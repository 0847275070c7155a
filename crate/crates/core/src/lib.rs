//! Learning and certification of robust policies for uncertain parametric
//! MDPs: interval-MDP approximations are learned from trajectories through
//! unknown sampled environments, robust policies are synthesised by robust
//! dynamic programming, and PAC performance/risk guarantees follow from a
//! scenario-optimisation argument over the verification samples.

pub mod benchmarks;
pub mod expr;
pub mod harness;
pub mod imdp;
pub mod learn;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod simulate;

pub use expr::ParamExpr;
pub use imdp::{exact_policy_value, merge, robust_value_iteration, Policy, RobustResult};
pub use learn::{
    learn_lui_imdp, learn_map_imdp, learn_pac_imdp, learn_ucrl2_imdp, IntervalMdp, PacConfig,
};
pub use model::{
    instantiate, parse_model, sample_valuation, MdpInstance, ParametricMdp, Valuation,
};
pub use scenario::{certify, risk_bound, RiskBound};
pub use simulate::{collect_counts, pool_tied_counts, CountTable};

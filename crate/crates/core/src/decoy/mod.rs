//! Decoy-state estimation of pseudo-photon yields and error yields by
//! two-stage linear programming.

mod estimate;
mod gains;
pub mod lp;
mod synth;

pub use estimate::{
    error_bounds, estimate_pair, estimate_yields, stage1, stage1_bounds, stage2_bounds, two_stage,
    Interval, PairBounds, Quantity, YieldBounds,
};
pub use gains::{
    epsilon_slack, prob_k_given_mu_pair, q11_fraction, DecoyConfig, GainRecord, GainTable,
};
pub use lp::{lp_solve, LpProblem, LpSolution, Relation, Sense};
pub use synth::SyntheticInstance;

//! Two-stage yield estimation.
//!
//! Stage one fixes Bob's summed intensity and bounds Alice's marginal
//! yields `Y_{k_a}^{mu, mu_b}` from one Alice-intensity row per available
//! setting. Stage two bounds the joint yield `Y_{k_a,k_b}^{mu,mu}` from the
//! stage-one brackets across Bob columns. Rows at an intensity other than the
//! target carry the deviation slack `eps`.

use std::collections::BTreeMap;

use serde::Serialize;

use super::gains::{same_intensity, DecoyConfig, GainTable};
use super::lp::{lp_solve, LpProblem, Relation, Sense};
use crate::error::{Error, Result, StageExt};
use crate::series::pseudo_photon_prob;

/// Closed interval within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    /// Clamps to `[0, 1]`; a rounding-level inversion collapses to its
    /// midpoint.
    pub fn new(lo: f64, hi: f64) -> Self {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        if lo > hi {
            let mid = 0.5 * (lo + hi);
            Self { lo: mid, hi: mid }
        } else {
            Self { lo, hi }
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Which gain column drives the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Yields from `Q`.
    Yield,
    /// Error yields `Y e` from `QE`.
    ErrorYield,
}

impl Quantity {
    fn pick(self, rec: &super::gains::GainRecord) -> f64 {
        match self {
            Quantity::Yield => rec.q,
            Quantity::ErrorYield => rec.qe,
        }
    }
}

fn probs(mu: f64, dc: &DecoyConfig) -> Result<Vec<f64>> {
    (0..dc.cfg.phases())
        .map(|k| pseudo_photon_prob(mu, k, &dc.cfg))
        .collect()
}

fn min_max(mut lp: LpProblem, target: usize) -> Result<Interval> {
    let n = lp.objective.len();
    lp.objective = vec![0.0; n];
    lp.objective[target] = 1.0;
    lp.sense = Sense::Minimize;
    let lo = lp_solve(&lp)?.value;
    lp.sense = Sense::Maximize;
    let hi = lp_solve(&lp)?.value;
    Ok(Interval::new(lo, hi))
}

fn check_index(k: usize, dc: &DecoyConfig) -> Result<()> {
    if k >= dc.cfg.phases() {
        return Err(Error::domain(format!(
            "pseudo-photon index {k} out of range for D={}",
            dc.cfg.phases()
        )));
    }
    Ok(())
}

/// Stage one for either gain column.
pub fn stage1(
    gains: &GainTable,
    dc: &DecoyConfig,
    quantity: Quantity,
    k_a: usize,
    mu_b_col: f64,
    eps: f64,
) -> Result<Interval> {
    check_index(k_a, dc)?;
    let d = dc.cfg.phases();
    let mut lp = LpProblem::unit_box(Sense::Minimize, vec![0.0; d]);
    let exact = gains.require(dc.mu, mu_b_col)?;
    lp.push(probs(dc.mu, dc)?, Relation::Eq(quantity.pick(exact)));
    for mu_a in gains.alice_rows(mu_b_col) {
        if same_intensity(mu_a, dc.mu) {
            continue;
        }
        let v = quantity.pick(gains.require(mu_a, mu_b_col)?);
        lp.push(probs(mu_a, dc)?, Relation::Range(v - eps, v + eps));
    }
    min_max(lp, k_a)
}

/// Bracket on `Y_{k_a}^{mu, mu_b}` from the `Q` column.
pub fn stage1_bounds(
    gains: &GainTable,
    dc: &DecoyConfig,
    k_a: usize,
    mu_b_col: f64,
    eps: f64,
) -> Result<Interval> {
    stage1(gains, dc, Quantity::Yield, k_a, mu_b_col, eps)
}

/// Bracket on `Y_{k_a,k_b}^{mu,mu}` from stage-one brackets, given as
/// `(mu_b, bracket)` per Bob column. The column at `mu` enters as the
/// bracket itself, every other column widened by `eps`.
pub fn stage2_bounds(
    stage1: &[(f64, Interval)],
    dc: &DecoyConfig,
    k_b: usize,
    eps: f64,
) -> Result<Interval> {
    check_index(k_b, dc)?;
    let d = dc.cfg.phases();
    if !stage1.iter().any(|(mu_b, _)| same_intensity(*mu_b, dc.mu)) {
        return Err(Error::MissingGain { mu_a: dc.mu, mu_b: dc.mu });
    }
    let mut lp = LpProblem::unit_box(Sense::Minimize, vec![0.0; d]);
    for &(mu_b, b) in stage1 {
        let slack = if same_intensity(mu_b, dc.mu) { 0.0 } else { eps };
        lp.push(probs(mu_b, dc)?, Relation::Range(b.lo - slack, b.hi + slack));
    }
    min_max(lp, k_b)
}

/// Both stages for one gain column.
pub fn two_stage(
    gains: &GainTable,
    dc: &DecoyConfig,
    quantity: Quantity,
    k_a: usize,
    k_b: usize,
    eps: f64,
) -> Result<Interval> {
    let columns = gains.bob_columns(dc.mu);
    let mut brackets = Vec::with_capacity(columns.len());
    for mu_b in columns {
        let b = stage1(gains, dc, quantity, k_a, mu_b, eps).stage("decoy stage 1")?;
        brackets.push((mu_b, b));
    }
    stage2_bounds(&brackets, dc, k_b, eps).stage("decoy stage 2")
}

/// Bracket on the error yield `Y_{k_a,k_b}^{mu,mu} e_{k_a,k_b}^{mu,mu}` from
/// the `QE` column.
pub fn error_bounds(
    gains: &GainTable,
    dc: &DecoyConfig,
    k_a: usize,
    k_b: usize,
    eps: f64,
) -> Result<Interval> {
    two_stage(gains, dc, Quantity::ErrorYield, k_a, k_b, eps)
}

/// Yield and error-yield brackets of one pseudo-photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairBounds {
    pub y: Interval,
    pub ey: Interval,
}

impl PairBounds {
    /// Upper bound on the error rate, `eY_hi / Y_lo` capped at 1/2; `None`
    /// when the yield may vanish.
    pub fn error_rate_hi(&self) -> Option<f64> {
        (self.y.lo > 0.0).then(|| (self.ey.hi / self.y.lo).min(0.5))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct YieldBounds {
    pub pairs: BTreeMap<(usize, usize), PairBounds>,
}

impl YieldBounds {
    pub fn get(&self, k_a: usize, k_b: usize) -> Option<&PairBounds> {
        self.pairs.get(&(k_a, k_b))
    }
}

pub fn estimate_pair(
    gains: &GainTable,
    dc: &DecoyConfig,
    k_a: usize,
    k_b: usize,
    eps: f64,
) -> Result<PairBounds> {
    let y = two_stage(gains, dc, Quantity::Yield, k_a, k_b, eps)?;
    let ey = error_bounds(gains, dc, k_a, k_b, eps)?;
    // Y e <= Y holds for the truth, so it may tighten the error bracket.
    let ey = Interval::new(ey.lo, ey.hi.min(y.hi));
    Ok(PairBounds { y, ey })
}

/// Brackets for every requested `(k_a, k_b)`.
pub fn estimate_yields(
    gains: &GainTable,
    dc: &DecoyConfig,
    targets: &[(usize, usize)],
    eps: f64,
) -> Result<YieldBounds> {
    let mut out = YieldBounds::default();
    for &(k_a, k_b) in targets {
        out.pairs.insert((k_a, k_b), estimate_pair(gains, dc, k_a, k_b, eps)?);
    }
    Ok(out)
}

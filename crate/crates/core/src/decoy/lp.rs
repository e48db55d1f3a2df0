//! Dense bounded-variable two-phase simplex for the small boxed LPs of the
//! decoy estimation.
//!
//! Every row becomes an equality by way of a slack (range rows get a boxed
//! slack), every row gets its own artificial, and phase one drives the
//! artificials to zero. Nonbasic variables rest at either bound. Entering and
//! leaving variables follow Bland's smallest-index rule, so the method cannot
//! cycle and the result is bit-reproducible.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Row relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    Eq(f64),
    Le(f64),
    Ge(f64),
    /// `lo <= a.x <= hi`
    Range(f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    /// Box `[lo, hi]` per variable; both ends finite.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl LpProblem {
    /// Problem over `n` variables boxed in `[0, 1]`.
    pub fn unit_box(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            rows: Vec::new(),
            bounds: vec![(0.0, 1.0); n],
        }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, relation: Relation) {
        self.rows.push(Row { coeffs, relation });
    }

    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::domain("bounds length differs from objective length"));
        }
        for &(lo, hi) in &self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::domain(format!("invalid variable box [{lo}, {hi}]")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite objective coefficient"));
        }
        for row in &self.rows {
            if row.coeffs.len() != n || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::domain("row has wrong length or non-finite entries"));
            }
            let finite = match row.relation {
                Relation::Eq(b) | Relation::Le(b) | Relation::Ge(b) => b.is_finite(),
                Relation::Range(lo, hi) => lo.is_finite() && hi.is_finite(),
            };
            if !finite {
                return Err(Error::domain("non-finite row bound"));
            }
            if let Relation::Range(lo, hi) = row.relation {
                // Tolerate rounding-level inversions, which collapse to a point.
                if lo > hi + FEAS_TOL {
                    return Err(Error::Infeasible { residual: lo - hi });
                }
            }
        }
        Ok(())
    }
}

struct Tableau {
    /// `B^{-1} A`, row-major, `m x cols`.
    t: Vec<f64>,
    cols: usize,
    /// Basic variable of each row.
    basis: Vec<usize>,
    /// Current value of every variable.
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    is_basic: Vec<bool>,
}

enum Step {
    Optimal,
    Unbounded,
    Moved,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn reduced_cost(&self, c: &[f64], j: usize) -> f64 {
        let mut d = c[j];
        for (i, &b) in self.basis.iter().enumerate() {
            d -= c[b] * self.at(i, j);
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.at(r, j);
        for v in &mut self.t[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * cols..(r + 1) * cols].to_vec();
        for i in 0..self.basis.len() {
            if i == r {
                continue;
            }
            let f = self.at(i, j);
            if f == 0.0 {
                continue;
            }
            for (v, &pv) in self.t[i * cols..(i + 1) * cols].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.t[i * cols + j] = 0.0;
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    /// One Bland iteration minimizing `c . x`.
    fn step(&mut self, c: &[f64]) -> Step {
        let m = self.basis.len();
        let mut entering = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.hi[j] - self.lo[j] <= 0.0 {
                continue;
            }
            let d = self.reduced_cost(c, j);
            let at_lower = self.x[j] <= self.lo[j];
            if (at_lower && d < -COST_TOL) || (!at_lower && d > COST_TOL) {
                entering = Some((j, if at_lower { 1.0 } else { -1.0 }));
                break;
            }
        }
        let Some((j, dir)) = entering else {
            return Step::Optimal;
        };

        // Ratio test; `None` leaving row means the entering variable flips bound.
        let mut best_t = self.hi[j] - self.lo[j];
        let mut leave: Option<(usize, bool)> = None;
        for i in 0..m {
            let alpha = dir * self.at(i, j);
            let b = self.basis[i];
            let (limit, to_upper) = if alpha > PIVOT_TOL {
                ((self.x[b] - self.lo[b]).max(0.0) / alpha, false)
            } else if alpha < -PIVOT_TOL {
                ((self.hi[b] - self.x[b]).max(0.0) / -alpha, true)
            } else {
                continue;
            };
            // Ties keep a pending bound flip, else take the smallest basic index.
            let tie = limit == best_t && leave.is_some_and(|(r, _)| b < self.basis[r]);
            if limit < best_t || tie {
                best_t = limit;
                leave = Some((i, to_upper));
            }
        }
        if !best_t.is_finite() {
            return Step::Unbounded;
        }

        let t = best_t;
        for i in 0..m {
            let b = self.basis[i];
            self.x[b] -= dir * t * self.at(i, j);
        }
        self.x[j] += dir * t;
        match leave {
            None => {
                // bound flip
                self.x[j] = if dir > 0.0 { self.hi[j] } else { self.lo[j] };
            }
            Some((r, to_upper)) => {
                let b = self.basis[r];
                self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
                self.pivot(r, j);
            }
        }
        Step::Moved
    }

    fn run(&mut self, c: &[f64]) -> Result<()> {
        for _ in 0..MAX_ITER {
            match self.step(c) {
                Step::Optimal => return Ok(()),
                Step::Unbounded => return Err(Error::Unbounded),
                Step::Moved => {}
            }
        }
        Err(Error::domain("simplex iteration limit reached"))
    }
}

/// Solves `p` to optimality.
///
/// Returns [`Error::Infeasible`] with the phase-one residual when the rows
/// cannot be met inside the variable box.
pub fn lp_solve(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let (scaled, col_scale) = equilibrate(p);
    let y = solve_scaled(&scaled)?;
    let x: Vec<f64> = y
        .iter()
        .zip(&col_scale)
        .zip(&p.bounds)
        .map(|((v, s), b)| (v / s).clamp(b.0, b.1))
        .collect();
    let value = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { value, x })
}

/// Nearest power of two, so scaling is exact.
fn pow2_scale(v: f64) -> f64 {
    if v > 0.0 && v.is_finite() {
        2f64.powi(-v.log2().round() as i32)
    } else {
        1.0
    }
}

/// Scales columns, then rows, to unit max-abs coefficient. Returns the
/// scaled problem in `y = s x` and the column factors `s`.
fn equilibrate(p: &LpProblem) -> (LpProblem, Vec<f64>) {
    let n = p.objective.len();
    let col_scale: Vec<f64> = (0..n)
        .map(|j| {
            let big = p.rows.iter().fold(0.0f64, |a, r| a.max(r.coeffs[j].abs()));
            1.0 / pow2_scale(big)
        })
        .collect();
    let mut q = p.clone();
    for (j, s) in col_scale.iter().enumerate() {
        q.objective[j] /= s;
        q.bounds[j] = (p.bounds[j].0 * s, p.bounds[j].1 * s);
    }
    for row in &mut q.rows {
        for (a, s) in row.coeffs.iter_mut().zip(&col_scale) {
            *a /= s;
        }
        let r = pow2_scale(row.coeffs.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        for a in &mut row.coeffs {
            *a *= r;
        }
        row.relation = match row.relation {
            Relation::Eq(b) => Relation::Eq(b * r),
            Relation::Le(b) => Relation::Le(b * r),
            Relation::Ge(b) => Relation::Ge(b * r),
            Relation::Range(l, h) => Relation::Range(l * r, h * r),
        };
    }
    (q, col_scale)
}

/// Structural values at the optimum of an already validated problem.
fn solve_scaled(p: &LpProblem) -> Result<Vec<f64>> {
    let n = p.objective.len();
    let m = p.rows.len();

    // Column layout: structural | one slack per inequality row | artificials.
    let mut lo: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();
    let mut hi: Vec<f64> = p.bounds.iter().map(|b| b.1).collect();
    let mut slack_of = vec![None; m];
    let mut rhs = vec![0.0; m];
    let mut slack_sign = vec![0.0; m];
    for (i, row) in p.rows.iter().enumerate() {
        let (b, sign, box_hi) = match row.relation {
            Relation::Eq(b) => (b, 0.0, 0.0),
            Relation::Le(b) => (b, 1.0, f64::INFINITY),
            Relation::Ge(b) => (b, -1.0, f64::INFINITY),
            Relation::Range(l, h) => (l, -1.0, (h - l).max(0.0)),
        };
        rhs[i] = b;
        if sign != 0.0 {
            slack_of[i] = Some(lo.len());
            slack_sign[i] = sign;
            lo.push(0.0);
            hi.push(box_hi);
        }
    }
    let art0 = lo.len();
    let cols = art0 + m;
    lo.extend(std::iter::repeat_n(0.0, m));
    hi.extend(std::iter::repeat_n(f64::INFINITY, m));

    // Start every non-artificial at its lower bound; artificials absorb the
    // residual with a sign that keeps them non-negative.
    let mut x = lo.clone();
    let mut t = vec![0.0; m * cols];
    for (i, row) in p.rows.iter().enumerate() {
        let mut lhs = 0.0;
        for (k, &a) in row.coeffs.iter().enumerate() {
            lhs += a * x[k];
        }
        let resid = rhs[i] - lhs;
        let s = if resid < 0.0 { -1.0 } else { 1.0 };
        for (k, &a) in row.coeffs.iter().enumerate() {
            t[i * cols + k] = s * a;
        }
        if let Some(sc) = slack_of[i] {
            t[i * cols + sc] = s * slack_sign[i];
        }
        t[i * cols + art0 + i] = 1.0;
        x[art0 + i] = resid.abs();
    }
    let mut tab = Tableau {
        t,
        cols,
        basis: (art0..cols).collect(),
        x,
        lo: lo.clone(),
        hi: hi.clone(),
        is_basic: (0..cols).map(|j| j >= art0).collect(),
    };

    let mut phase1 = vec![0.0; cols];
    for c in &mut phase1[art0..] {
        *c = 1.0;
    }
    tab.run(&phase1)?;
    let residual: f64 = tab.x[art0..].iter().sum();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if residual > FEAS_TOL * scale {
        return Err(Error::Infeasible { residual });
    }

    // Phase two: pin artificials at zero.
    for j in art0..cols {
        tab.lo[j] = 0.0;
        tab.hi[j] = 0.0;
        if !tab.is_basic[j] {
            tab.x[j] = 0.0;
        }
    }
    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut phase2 = vec![0.0; cols];
    for (c, &o) in phase2.iter_mut().zip(&p.objective) {
        *c = sign * o;
    }
    tab.run(&phase2)?;

    Ok(tab.x[..n].to_vec())
}

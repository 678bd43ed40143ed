//! Dense tableau simplex for the small linear programs that arise inside the
//! branch-and-bound.
//!
//! Problems are stated as `maximize c·x` over linear constraints and finite
//! lower bounds. Variables are shifted to their lower bounds, finite upper
//! bounds become explicit rows and fixed variables are substituted out.
//! Feasibility is established by a phase-one problem on artificial variables;
//! no big-M penalty is involved. Pivoting uses the largest reduced cost and
//! falls back to Bland's rule once a run of degenerate pivots is observed.

use thiserror::Error;

/// Constraint and bound feasibility tolerance.
pub const FEAS_EPS: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Self {
            coeffs,
            relation,
            rhs,
        }
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `maximize objective·x` subject to `constraints` and `lo ≤ x ≤ hi`.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// `n` variables in `[0, ∞)` with a zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            constraints: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints
            .push(Constraint::new(coeffs, relation, rhs));
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {i} has {} coefficients for {n} variables",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {i} is not finite")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("objective is not finite".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_nan() || lo > hi {
                return Err(LpError::Malformed(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    /// `objective·solution` when optimal, NaN otherwise.
    pub objective: f64,
    /// Primal solution when optimal, empty otherwise.
    pub solution: Vec<f64>,
    pub pivots: usize,
}

impl LpResult {
    fn status_only(status: LpStatus, pivots: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            solution: Vec::new(),
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("no convergence within {pivots} pivots; the input is likely ill-conditioned")]
    PivotBudget { pivots: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_pivots: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degeneracy_threshold: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_pivots: 10_000,
            degeneracy_threshold: 25,
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpResult, LpError> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with(lp: &LinearProgram, options: &SimplexOptions) -> Result<LpResult, LpError> {
    lp.validate()?;
    let n = lp.num_vars();
    let lo: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();

    // Structural columns that are not fixed by their bounds.
    let free: Vec<usize> = (0..n)
        .filter(|&j| lp.bounds[j].1 > lp.bounds[j].0)
        .collect();

    // Rows over shifted variables y = x - lo, restricted to free columns.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let shift: f64 = c.coeffs.iter().zip(&lo).map(|(a, l)| a * l).sum();
        let coeffs: Vec<f64> = free.iter().map(|&j| c.coeffs[j]).collect();
        let rhs = c.rhs - shift;
        if coeffs.iter().all(|a| *a == 0.0) {
            let ok = match c.relation {
                Relation::Le => rhs >= -FEAS_EPS,
                Relation::Ge => rhs <= FEAS_EPS,
                Relation::Eq => rhs.abs() <= FEAS_EPS,
            };
            if !ok {
                return Ok(LpResult::status_only(LpStatus::Infeasible, 0));
            }
            continue;
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for (col, &j) in free.iter().enumerate() {
        let (l, h) = lp.bounds[j];
        if h.is_finite() {
            let mut coeffs = vec![0.0; free.len()];
            coeffs[col] = 1.0;
            rows.push((coeffs, Relation::Le, h - l));
        }
    }

    let cost: Vec<f64> = free.iter().map(|&j| lp.objective[j]).collect();
    let mut tableau = Tableau::build(free.len(), rows);
    let mut pivots = 0usize;

    if tableau.num_artificial > 0 {
        let phase1_cost: Vec<f64> = (0..tableau.cols)
            .map(|j| if tableau.is_artificial(j) { -1.0 } else { 0.0 })
            .collect();
        tableau.set_objective(&phase1_cost);
        match tableau.optimize(false, options, &mut pivots)? {
            Phase::Optimal => {}
            // Phase one is bounded above by zero.
            Phase::Unbounded => unreachable!("phase one cannot be unbounded"),
        }
        if -tableau.objective_value() > FEAS_EPS {
            return Ok(LpResult::status_only(LpStatus::Infeasible, pivots));
        }
        tableau.evict_artificials();
    }

    let mut full_cost = vec![0.0; tableau.cols];
    full_cost[..free.len()].copy_from_slice(&cost);
    tableau.set_objective(&full_cost);
    if let Phase::Unbounded = tableau.optimize(true, options, &mut pivots)? {
        return Ok(LpResult::status_only(LpStatus::Unbounded, pivots));
    }

    let y = tableau.primal(free.len());
    let mut x = lo.clone();
    for (col, &j) in free.iter().enumerate() {
        x[j] = (lo[j] + y[col].max(0.0)).min(lp.bounds[j].1);
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpResult {
        status: LpStatus::Optimal,
        objective,
        solution: x,
        pivots,
    })
}

enum Phase {
    Optimal,
    Unbounded,
}

/// Standard-form tableau: `rows × (cols + 1)`, right-hand side in the last column.
struct Tableau {
    data: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    first_artificial: usize,
    num_artificial: usize,
}

impl Tableau {
    fn build(structural: usize, mut rows: Vec<(Vec<f64>, Relation, f64)>) -> Self {
        for (coeffs, rel, rhs) in rows.iter_mut() {
            if *rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                *rhs = -*rhs;
                *rel = match *rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }
        let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = structural + slacks;
        let cols = first_artificial + artificials;

        let mut data = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut s, mut a) = (structural, first_artificial);
        for (coeffs, rel, rhs) in rows {
            let mut row = vec![0.0; cols + 1];
            row[..structural].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
            data.push(row);
        }
        Self {
            data,
            obj: vec![0.0; cols + 1],
            basis,
            cols,
            first_artificial,
            num_artificial: artificials,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    /// Installs reduced costs for `cost` (maximized) relative to the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj[..self.cols].copy_from_slice(cost);
        self.obj[self.cols] = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, t) in self.obj.iter_mut().zip(&self.data[i]) {
                    *o -= cb * t;
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.cols]
    }

    fn optimize(
        &mut self,
        bar_artificials: bool,
        options: &SimplexOptions,
        pivots: &mut usize,
    ) -> Result<Phase, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            let eligible = |j: usize| !(bar_artificials && j >= self.first_artificial);
            let entering = if bland {
                (0..self.cols).find(|&j| eligible(j) && self.obj[j] > COST_EPS)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in (0..self.cols).filter(|&j| eligible(j)) {
                    let d = self.obj[j];
                    if d > COST_EPS && best.is_none_or(|(_, b)| d > b) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(q) = entering else {
                return Ok(Phase::Optimal);
            };

            let mut leaving: Option<(usize, f64)> = None;
            for (i, row) in self.data.iter().enumerate() {
                let a = row[q];
                if a > PIVOT_EPS {
                    let ratio = row[self.cols] / a;
                    let better = match leaving {
                        None => true,
                        Some((p, r)) => {
                            ratio < r - 1e-12
                                || (ratio <= r + 1e-12 && self.basis[i] < self.basis[p])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((p, ratio)) = leaving else {
                return Ok(Phase::Unbounded);
            };

            if *pivots >= options.max_pivots {
                return Err(LpError::PivotBudget { pivots: *pivots });
            }
            *pivots += 1;
            if ratio.abs() <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > options.degeneracy_threshold {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(p, q);
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let piv = self.data[p][q];
        for v in self.data[p].iter_mut() {
            *v /= piv;
        }
        self.data[p][q] = 1.0;
        let pivot_row = self.data[p].clone();
        for (i, row) in self.data.iter_mut().enumerate() {
            if i == p {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[q] = 0.0;
            }
        }
        let f = self.obj[q];
        if f != 0.0 {
            for (v, pr) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.obj[q] = 0.0;
        }
        self.basis[p] = q;
    }

    /// Pivots zero-level artificials out of the basis where possible. Rows
    /// where that is impossible are redundant; their artificial stays basic
    /// at zero and is never allowed to re-enter.
    fn evict_artificials(&mut self) {
        for i in 0..self.data.len() {
            if !self.is_artificial(self.basis[i]) {
                continue;
            }
            let candidate = (0..self.first_artificial)
                .filter(|&j| self.data[i][j].abs() > 1e-9)
                .max_by(|&a, &b| self.data[i][a].abs().total_cmp(&self.data[i][b].abs()));
            if let Some(j) = candidate {
                self.pivot(i, j);
            }
        }
    }

    fn primal(&self, structural: usize) -> Vec<f64> {
        let mut y = vec![0.0; structural];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < structural {
                y[b] = self.data[i][self.cols];
            }
        }
        y
    }
}

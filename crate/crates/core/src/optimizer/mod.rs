//! Rank-optimal weights.
//!
//! For a target entity `c` the first-order problem maximizes the number of
//! rivals `k` with `Σ_q (I_{q,c} − I_{q,k}) w_q ≥ 0`. The second-order problem
//! keeps that count fixed at its optimum `R*` and maximizes the smallest lead
//! `d` over the dominated rivals. Both exist for continuous weights
//! (`w ≥ w_min`, `Σw = 10`) and for integer weights in `0..=cap` with
//! `Σw ≥ 1`; the integer distance is measured under the normalized weights
//! `ŵ = 10w / Σw`. A mirrored problem finds the weights that let the most
//! rivals overtake the target.
//!
//! The indicator products `z_k · margin_k(w) ≥ 0` are linearized with big-M
//! constants and solved exactly by the branch-and-bound in [`bnb`]. The
//! bilinear `d · Σw` of the integer distance problem is removed by solving one
//! program per weight total `S = Σw`.

mod bnb;
mod model;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::IndicatorMatrix;
use crate::lp::LpError;
use crate::ranking::{
    composite_indices, count_dominated, RankingError, WeightMode, WeightVector, DEFAULT_TIE_EPS,
    MAX_INTEGER_WEIGHT, WEIGHT_TOTAL,
};

pub use model::BigMData;

/// Margin by which a rival must trail the target's raw weighted sum to count
/// as strictly ahead in the worst-rank problem.
pub const STRICT_EPS: f64 = 1e-7;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    First,
    Second,
}

impl std::str::FromStr for Order {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "first" => Ok(Self::First),
            "2" | "second" => Ok(Self::Second),
            other => Err(format!("unknown order `{other}` (expected 1 or 2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Best,
    Worst,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "best" => Ok(Self::Best),
            "worst" => Ok(Self::Worst),
            other => Err(format!(
                "unknown direction `{other}` (expected best or worst)"
            )),
        }
    }
}

/// Which problem to solve for which entity, and how hard to try.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationSpec {
    pub target: usize,
    pub order: Order,
    pub mode: WeightMode,
    pub direction: Direction,
    /// Lower bound on every continuous weight.
    pub w_min: f64,
    /// Largest integer weight; the published tool uses 5.
    pub weight_cap: u32,
    pub feas_eps: f64,
    pub int_eps: f64,
    pub node_budget: u64,
    pub time_limit: Option<Duration>,
}

impl OptimizationSpec {
    /// Integer weights, second order, best rank.
    pub fn new(target: usize) -> Self {
        Self {
            target,
            order: Order::Second,
            mode: WeightMode::Integer,
            direction: Direction::Best,
            w_min: 0.0,
            weight_cap: MAX_INTEGER_WEIGHT,
            feas_eps: crate::lp::FEAS_EPS,
            int_eps: 1e-6,
            node_budget: DEFAULT_NODE_BUDGET,
            time_limit: None,
        }
    }

    pub fn with_order(mut self, order: Order) -> Self {
        self.order = order;
        self
    }

    pub fn with_mode(mut self, mode: WeightMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_w_min(mut self, w_min: f64) -> Self {
        self.w_min = w_min;
        self
    }

    pub fn with_weight_cap(mut self, cap: u32) -> Self {
        self.weight_cap = cap;
        self
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    pub fn for_target(&self, target: usize) -> Self {
        Self {
            target,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Optimality proven by bound closure.
    Optimal,
    /// Node budget exhausted; the returned weights are the best incumbent.
    NodeBudget,
    /// Time limit reached; the returned weights are the best incumbent.
    TimeLimit,
}

impl SolveStatus {
    fn combine(self, other: Self) -> Self {
        match (self, other) {
            (Self::TimeLimit, _) | (_, Self::TimeLimit) => Self::TimeLimit,
            (Self::NodeBudget, _) | (_, Self::NodeBudget) => Self::NodeBudget,
            _ => Self::Optimal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    /// Root relaxation bound of the first-order (or worst-rank) problem,
    /// in dominance counts. `None` when the root was never solved.
    pub root_bound: Option<f64>,
    pub wall_time_secs: f64,
}

impl SolveStats {
    fn absorb(&mut self, other: &SolveStats) {
        self.nodes += other.nodes;
        self.lp_solves += other.lp_solves;
        self.wall_time_secs += other.wall_time_secs;
        if self.root_bound.is_none() {
            self.root_bound = other.root_bound;
        }
    }
}

/// Optimal rank and weights for one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub target: usize,
    pub order: Order,
    pub mode: WeightMode,
    pub direction: Direction,
    /// Best direction: rivals weakly dominated (`R*`). Worst direction:
    /// rivals strictly ahead.
    pub r_star: usize,
    /// Resulting rank among all entities: `C − R*` for best, `1 + count`
    /// for worst.
    pub rank: usize,
    /// Second order only: lead over the closest dominated rival, in index points.
    pub d_star: Option<f64>,
    pub weights: WeightVector,
    /// `z[k]` marks rival `k` as counted; `z[target]` is always false.
    pub z: Vec<bool>,
    pub status: SolveStatus,
    pub stats: SolveStats,
}

impl Solution {
    pub fn is_proven(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("invalid optimization spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("R* = {r_star} is inconsistent with the data for entity {target}")]
    StaleRStar { target: usize, r_star: usize },
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Solves the problem selected by `spec`. Second order runs the first-order
/// problem first and pins its optimum.
pub fn solve(data: &IndicatorMatrix, spec: &OptimizationSpec) -> Result<Solution, OptimizerError> {
    validate(data, spec)?;
    match (spec.direction, spec.order, spec.mode) {
        (Direction::Worst, _, _) => minimize_rank(data, spec),
        (Direction::Best, Order::First, WeightMode::Continuous) => {
            maximize_rank_continuous(data, spec)
        }
        (Direction::Best, Order::First, WeightMode::Integer) => maximize_rank_integer(data, spec),
        (Direction::Best, Order::Second, mode) => {
            let first_spec = spec.clone().with_order(Order::First);
            let first = match mode {
                WeightMode::Continuous => maximize_rank_continuous(data, &first_spec)?,
                WeightMode::Integer => maximize_rank_integer(data, &first_spec)?,
            };
            let remaining = OptimizationSpec {
                node_budget: spec.node_budget.saturating_sub(first.stats.nodes).max(1),
                time_limit: spec
                    .time_limit
                    .map(|t| t.saturating_sub(Duration::from_secs_f64(first.stats.wall_time_secs))),
                ..spec.clone()
            };
            let mut second =
                distance_with_seed(data, &remaining, first.r_star, Some(first.weights.clone()))?;
            let mut stats = first.stats.clone();
            stats.absorb(&second.stats);
            second.stats = stats;
            second.status = first.status.combine(second.status);
            Ok(second)
        }
    }
}

/// First-order problem with continuous weights.
pub fn maximize_rank_continuous(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
) -> Result<Solution, OptimizerError> {
    let spec = &spec
        .clone()
        .with_mode(WeightMode::Continuous)
        .with_order(Order::First)
        .with_direction(Direction::Best);
    validate(data, spec)?;
    model::count_problem(data, spec)
}

/// First-order problem with integer weights in `0..=spec.weight_cap`.
pub fn maximize_rank_integer(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
) -> Result<Solution, OptimizerError> {
    let spec = &spec
        .clone()
        .with_mode(WeightMode::Integer)
        .with_order(Order::First)
        .with_direction(Direction::Best);
    validate(data, spec)?;
    model::count_problem(data, spec)
}

/// Second-order problem with continuous weights, given a proven `R*`.
pub fn maximize_distance_continuous(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
) -> Result<Solution, OptimizerError> {
    let spec = spec
        .clone()
        .with_mode(WeightMode::Continuous)
        .with_order(Order::Second)
        .with_direction(Direction::Best);
    validate(data, &spec)?;
    distance_with_seed(data, &spec, r_star, None)
}

/// Second-order problem with integer weights, given a proven `R*`.
pub fn maximize_distance_integer(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
) -> Result<Solution, OptimizerError> {
    let spec = spec
        .clone()
        .with_mode(WeightMode::Integer)
        .with_order(Order::Second)
        .with_direction(Direction::Best);
    validate(data, &spec)?;
    distance_with_seed(data, &spec, r_star, None)
}

/// Weights that let the largest number of rivals score strictly above the
/// target, in either weight mode.
pub fn minimize_rank(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
) -> Result<Solution, OptimizerError> {
    let spec = &spec
        .clone()
        .with_order(Order::First)
        .with_direction(Direction::Worst);
    validate(data, spec)?;
    model::count_problem(data, spec)
}

fn distance_with_seed(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
    seed: Option<WeightVector>,
) -> Result<Solution, OptimizerError> {
    let c_len = data.num_entities();
    if r_star >= c_len {
        return Err(OptimizerError::StaleRStar {
            target: spec.target,
            r_star,
        });
    }
    match spec.mode {
        WeightMode::Continuous => model::distance_continuous(data, spec, r_star, seed),
        WeightMode::Integer => model::distance_integer(data, spec, r_star, seed),
    }
}

fn validate(data: &IndicatorMatrix, spec: &OptimizationSpec) -> Result<(), OptimizerError> {
    if spec.target >= data.num_entities() {
        return Err(RankingError::EntityOutOfRange {
            index: spec.target,
            count: data.num_entities(),
        }
        .into());
    }
    if spec.direction == Direction::Worst && spec.order == Order::Second {
        return Err(OptimizerError::InvalidSpec(
            "the worst-rank problem has no second-order variant".into(),
        ));
    }
    if spec.node_budget == 0 {
        return Err(OptimizerError::InvalidSpec(
            "node budget must be positive".into(),
        ));
    }
    match spec.mode {
        WeightMode::Integer => {
            if !(1..=MAX_INTEGER_WEIGHT).contains(&spec.weight_cap) {
                return Err(OptimizerError::InvalidSpec(format!(
                    "integer weight cap must lie in 1..={MAX_INTEGER_WEIGHT}, got {}",
                    spec.weight_cap
                )));
            }
            if spec.w_min != 0.0 {
                return Err(OptimizerError::InvalidSpec(
                    "a minimal weight applies to continuous mode only".into(),
                ));
            }
        }
        WeightMode::Continuous => {
            if !spec.w_min.is_finite() || spec.w_min < 0.0 {
                return Err(OptimizerError::InvalidSpec(format!(
                    "minimal weight must be finite and nonnegative, got {}",
                    spec.w_min
                )));
            }
            let floor = spec.w_min * data.num_dimensions() as f64;
            if floor > WEIGHT_TOTAL + 1e-12 {
                return Err(OptimizerError::Infeasible(format!(
                    "minimal weight {} times {} dimensions exceeds the weight total {WEIGHT_TOTAL}",
                    spec.w_min,
                    data.num_dimensions()
                )));
            }
        }
    }
    Ok(())
}

/// Replayed ranking facts for a weight vector.
struct Replay {
    ci: Vec<f64>,
}

impl Replay {
    fn new(data: &IndicatorMatrix, w: &WeightVector) -> Self {
        Self {
            ci: composite_indices(data, w).expect("weights match the data"),
        }
    }

    fn dominated(&self, c: usize) -> usize {
        count_dominated(&self.ci, c, DEFAULT_TIE_EPS)
    }

    fn ahead(&self, c: usize) -> usize {
        self.ci.len() - 1 - self.dominated(c)
    }

    /// Leads `CI_c − CI_k` over weakly dominated rivals, largest first.
    fn leads(&self, c: usize) -> Vec<(usize, f64)> {
        let mut leads: Vec<(usize, f64)> = self
            .ci
            .iter()
            .enumerate()
            .filter(|&(k, &v)| k != c && self.ci[c] >= v - DEFAULT_TIE_EPS)
            .map(|(k, &v)| (k, self.ci[c] - v))
            .collect();
        leads.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        leads
    }

    /// Smallest lead when exactly `r` dominated rivals are counted (the `r`
    /// trailing furthest). `None` if fewer than `r` rivals are dominated.
    fn distance(&self, c: usize, r: usize) -> Option<f64> {
        if r == 0 {
            return Some(0.0);
        }
        self.leads(c).get(r - 1).map(|&(_, d)| d.max(0.0))
    }

    fn z_best(&self, c: usize, r: usize) -> Vec<bool> {
        let mut z = vec![false; self.ci.len()];
        for (k, _) in self.leads(c).into_iter().take(r) {
            z[k] = true;
        }
        z
    }

    fn z_worst(&self, c: usize) -> Vec<bool> {
        self.ci
            .iter()
            .enumerate()
            .map(|(k, &v)| k != c && v > self.ci[c] + DEFAULT_TIE_EPS)
            .collect()
    }
}

/// One entity's outcome in a batch run.
#[derive(Debug)]
pub struct BatchEntry {
    pub entity: usize,
    pub name: String,
    pub result: Result<Solution, OptimizerError>,
}

/// Solves `template` for every entity in parallel.
///
/// Successful entries are ordered by rank (ascending), then distance
/// (descending), then entity index; failures follow in entity order.
pub fn solve_all(data: &IndicatorMatrix, template: &OptimizationSpec) -> Vec<BatchEntry> {
    let mut entries: Vec<BatchEntry> = (0..data.num_entities())
        .into_par_iter()
        .map(|c| BatchEntry {
            entity: c,
            name: data.entity_names()[c].clone(),
            result: solve(data, &template.for_target(c)),
        })
        .collect();
    entries.sort_by(|a, b| match (&a.result, &b.result) {
        (Ok(x), Ok(y)) => x
            .rank
            .cmp(&y.rank)
            .then_with(|| y.d_star.unwrap_or(0.0).total_cmp(&x.d_star.unwrap_or(0.0)))
            .then(a.entity.cmp(&b.entity)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.entity.cmp(&b.entity),
    });
    entries
}

fn deadline(spec: &OptimizationSpec, start: Instant) -> Option<Instant> {
    spec.time_limit.map(|t| start + t)
}

#[cfg(test)]
mod tests;

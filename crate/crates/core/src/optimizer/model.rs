//! Big-M formulations and the drivers that feed them to branch-and-bound.

use std::time::Instant;

use super::bnb::{branch_and_bound, BnbOutcome, BnbSettings, MilpProblem, Stop};
use super::{
    deadline, Direction, OptimizationSpec, OptimizerError, Order, Replay, Solution, SolveStats,
    SolveStatus, STRICT_EPS,
};
use crate::dataset::IndicatorMatrix;
use crate::lp::{LinearProgram, Relation};
use crate::ranking::{WeightMode, WeightVector, WEIGHT_TOTAL};

/// Per-rival big-M constants of the first-order problem. `m[target]` is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BigMData {
    pub m: Vec<f64>,
}

impl BigMData {
    /// Constants large enough that `Σ_q diff_{q,k} w_q ≥ −M_k` holds for every
    /// admissible weight vector, where `diff = I_c − I_k`.
    pub fn first_order(data: &IndicatorMatrix, target: usize, mode: WeightMode, cap: u32) -> Self {
        let m = (0..data.num_entities())
            .map(|k| {
                if k == target {
                    return 0.0;
                }
                let d = diffs(data, target, k);
                match mode {
                    WeightMode::Continuous => WEIGHT_TOTAL * neg_max(&d) + 1.0,
                    WeightMode::Integer => f64::from(cap) * neg_sum(&d) + 1.0,
                }
            })
            .collect();
        Self { m }
    }
}

fn diffs(data: &IndicatorMatrix, c: usize, k: usize) -> Vec<f64> {
    (0..data.num_dimensions())
        .map(|q| data.value(q, c) - data.value(q, k))
        .collect()
}

fn neg_max(d: &[f64]) -> f64 {
    d.iter().fold(0.0_f64, |a, &x| a.max(-x))
}

fn neg_sum(d: &[f64]) -> f64 {
    d.iter().map(|&x| (-x).max(0.0)).sum()
}

fn pos_max(d: &[f64]) -> f64 {
    d.iter().fold(0.0_f64, |a, &x| a.max(x))
}

fn pos_sum(d: &[f64]) -> f64 {
    d.iter().map(|&x| x.max(0.0)).sum()
}

fn max_of(d: &[f64]) -> f64 {
    d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(d: &[f64]) -> f64 {
    d.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fate {
    Open,
    /// Counted under every admissible weight vector.
    In,
    /// Never counted.
    Out,
}

struct Rival {
    diff: Vec<f64>,
    fate: Fate,
}

fn rivals(data: &IndicatorMatrix, spec: &OptimizationSpec) -> Vec<Rival> {
    let c = spec.target;
    (0..data.num_entities())
        .filter(|&k| k != c)
        .map(|k| {
            let diff = diffs(data, c, k);
            let fate = match spec.direction {
                Direction::Best => {
                    if min_of(&diff) >= 0.0 {
                        Fate::In
                    } else if max_of(&diff) < 0.0 {
                        Fate::Out
                    } else {
                        Fate::Open
                    }
                }
                Direction::Worst => {
                    // Largest attainable raw margin: 10·max diff on the
                    // continuous simplex, max diff itself when Σw ≥ 1 is integral.
                    let top = match spec.mode {
                        WeightMode::Continuous => WEIGHT_TOTAL * max_of(&diff),
                        WeightMode::Integer => max_of(&diff),
                    };
                    if top <= -STRICT_EPS {
                        Fate::In
                    } else if min_of(&diff) >= 0.0 {
                        Fate::Out
                    } else {
                        Fate::Open
                    }
                }
            };
            Rival { diff, fate }
        })
        .collect()
}

/// Cheap starting points: each single dimension, plus equal weights.
fn candidates(q: usize, spec: &OptimizationSpec) -> Vec<WeightVector> {
    let mut out = Vec::with_capacity(q + 1);
    match spec.mode {
        WeightMode::Continuous => {
            let rest = WEIGHT_TOTAL - spec.w_min * (q as f64 - 1.0);
            for j in 0..q {
                let mut w = vec![spec.w_min; q];
                w[j] = rest;
                if let Ok(wv) = WeightVector::continuous_scaled(&w) {
                    out.push(wv);
                }
            }
            out.push(WeightVector::equal_weights(q));
        }
        WeightMode::Integer => {
            for j in 0..q {
                let mut w = vec![0u32; q];
                w[j] = 1;
                out.push(WeightVector::integer(&w).expect("unit vector is valid"));
            }
            out.push(WeightVector::integer(&vec![1; q]).expect("ones are valid"));
        }
    }
    out
}

fn weights_from(x: &[f64], q: usize, mode: WeightMode) -> Option<WeightVector> {
    match mode {
        WeightMode::Continuous => WeightVector::continuous_scaled(&x[..q]).ok(),
        WeightMode::Integer => {
            let ints: Vec<u32> = x[..q].iter().map(|v| v.round().max(0.0) as u32).collect();
            WeightVector::integer(&ints).ok()
        }
    }
}

fn settings(spec: &OptimizationSpec, start: Instant, budget: u64) -> BnbSettings {
    BnbSettings {
        node_budget: budget,
        int_eps: spec.int_eps,
        prune_tol: spec.feas_eps,
        deadline: deadline(spec, start),
    }
}

fn status_of(stop: Stop) -> SolveStatus {
    match stop {
        Stop::Exhausted => SolveStatus::Optimal,
        Stop::NodeBudget => SolveStatus::NodeBudget,
        Stop::Deadline => SolveStatus::TimeLimit,
    }
}

/// Adds the weight block shared by every formulation: variables `0..q`.
fn weight_block(lp: &mut LinearProgram, q: usize, spec: &OptimizationSpec, total: Option<f64>) {
    let ones = pad(&vec![1.0; q], lp.num_vars());
    match spec.mode {
        WeightMode::Continuous => {
            for b in &mut lp.bounds[..q] {
                *b = (spec.w_min, f64::INFINITY);
            }
            lp.add_constraint(ones, Relation::Eq, total.unwrap_or(WEIGHT_TOTAL));
        }
        WeightMode::Integer => {
            for b in &mut lp.bounds[..q] {
                *b = (0.0, f64::from(spec.weight_cap));
            }
            match total {
                Some(s) => lp.add_constraint(ones, Relation::Eq, s),
                None => lp.add_constraint(ones, Relation::Ge, 1.0),
            }
        }
    }
}

fn pad(prefix: &[f64], n: usize) -> Vec<f64> {
    let mut row = vec![0.0; n];
    row[..prefix.len()].copy_from_slice(prefix);
    row
}

/// First-order best-rank and worst-rank problems: maximize the number of
/// counted rivals.
pub(super) fn count_problem(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
) -> Result<Solution, OptimizerError> {
    let start = Instant::now();
    let c = spec.target;
    let q = data.num_dimensions();
    let worst = spec.direction == Direction::Worst;
    let score = |r: &Replay| if worst { r.ahead(c) } else { r.dominated(c) };

    let mut best: Option<(usize, WeightVector)> = None;
    for wv in candidates(q, spec) {
        let s = score(&Replay::new(data, &wv));
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, wv));
        }
    }
    let (seed_value, seed_weights) = best.expect("at least one candidate");

    let rivals = rivals(data, spec);
    let open: Vec<&Rival> = rivals.iter().filter(|r| r.fate == Fate::Open).collect();
    let forced_in = rivals.iter().filter(|r| r.fate == Fate::In).count();

    let n = q + open.len();
    let mut lp = LinearProgram::new(n);
    weight_block(&mut lp, q, spec, None);
    let cap = f64::from(spec.weight_cap);
    for (i, r) in open.iter().enumerate() {
        let zj = q + i;
        lp.bounds[zj] = (0.0, 1.0);
        lp.objective[zj] = 1.0;
        let mut row = pad(&r.diff, n);
        if worst {
            let m = match spec.mode {
                WeightMode::Continuous => WEIGHT_TOTAL * pos_max(&r.diff) + 1.0,
                WeightMode::Integer => cap * pos_sum(&r.diff) + 1.0,
            };
            row[zj] = m;
            lp.add_constraint(row, Relation::Le, m - STRICT_EPS);
        } else {
            let m = match spec.mode {
                WeightMode::Continuous => WEIGHT_TOTAL * neg_max(&r.diff) + 1.0,
                WeightMode::Integer => cap * neg_sum(&r.diff) + 1.0,
            };
            row[zj] = -m;
            lp.add_constraint(row, Relation::Ge, -m);
        }
    }
    let mut classes = vec![(q..n).collect::<Vec<_>>()];
    if spec.mode == WeightMode::Integer {
        classes.push((0..q).collect());
    }
    let problem = MilpProblem {
        lp,
        integer_classes: classes,
        objective_offset: forced_in as f64,
        integral_objective: true,
    };

    let outcome = branch_and_bound(
        &problem,
        &settings(spec, start, spec.node_budget),
        Some(seed_value as f64),
        |x| {
            let wv = weights_from(x, q, spec.mode)?;
            Some((score(&Replay::new(data, &wv)) as f64, wv))
        },
    )?;

    let weights = outcome
        .best
        .as_ref()
        .map(|(_, w)| w.clone())
        .unwrap_or(seed_weights);
    let replay = Replay::new(data, &weights);
    let r_star = score(&replay);
    let c_len = data.num_entities();
    Ok(Solution {
        target: c,
        order: Order::First,
        mode: spec.mode,
        direction: spec.direction,
        r_star,
        rank: if worst { 1 + r_star } else { c_len - r_star },
        d_star: None,
        z: if worst {
            replay.z_worst(c)
        } else {
            replay.z_best(c, r_star)
        },
        weights,
        status: status_of(outcome.stop),
        stats: stats_of(&outcome, start),
    })
}

fn stats_of<T>(outcome: &BnbOutcome<T>, start: Instant) -> SolveStats {
    SolveStats {
        nodes: outcome.nodes,
        lp_solves: outcome.lp_solves,
        root_bound: outcome.root_bound,
        wall_time_secs: start.elapsed().as_secs_f64(),
    }
}

fn zero_distance(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    seed: Option<WeightVector>,
    start: Instant,
) -> Solution {
    let q = data.num_dimensions();
    let weights = seed.unwrap_or_else(|| match spec.mode {
        WeightMode::Continuous => WeightVector::equal_weights(q),
        WeightMode::Integer => WeightVector::integer(&vec![1; q]).expect("ones are valid"),
    });
    let replay = Replay::new(data, &weights);
    let r = replay.dominated(spec.target);
    Solution {
        target: spec.target,
        order: Order::Second,
        mode: spec.mode,
        direction: Direction::Best,
        r_star: r,
        rank: data.num_entities() - r,
        d_star: Some(0.0),
        z: replay.z_best(spec.target, 0),
        weights,
        status: SolveStatus::Optimal,
        stats: SolveStats {
            nodes: 0,
            lp_solves: 0,
            root_bound: None,
            wall_time_secs: start.elapsed().as_secs_f64(),
        },
    }
}

struct Split<'a> {
    open: Vec<&'a Rival>,
    forced: Vec<&'a Rival>,
    need: usize,
}

fn split<'a>(
    rivals: &'a [Rival],
    spec: &OptimizationSpec,
    r_star: usize,
) -> Result<Split<'a>, OptimizerError> {
    let open: Vec<&Rival> = rivals.iter().filter(|r| r.fate == Fate::Open).collect();
    let forced: Vec<&Rival> = rivals.iter().filter(|r| r.fate == Fate::In).collect();
    if forced.len() > r_star || forced.len() + open.len() < r_star {
        return Err(OptimizerError::StaleRStar {
            target: spec.target,
            r_star,
        });
    }
    Ok(Split {
        need: r_star - forced.len(),
        open,
        forced,
    })
}

fn best_seed(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
    seed: Option<WeightVector>,
) -> Option<(f64, WeightVector)> {
    let q = data.num_dimensions();
    let mut best: Option<(f64, WeightVector)> = None;
    for wv in seed.into_iter().chain(candidates(q, spec)) {
        let replay = Replay::new(data, &wv);
        if replay.dominated(spec.target) != r_star {
            continue;
        }
        if let Some(d) = replay.distance(spec.target, r_star) {
            if best.as_ref().is_none_or(|(b, _)| d > *b) {
                best = Some((d, wv));
            }
        }
    }
    best
}

fn distance_solution(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
    weights: WeightVector,
    status: SolveStatus,
    stats: SolveStats,
) -> Solution {
    let replay = Replay::new(data, &weights);
    let c = spec.target;
    let r = replay.dominated(c);
    Solution {
        target: c,
        order: Order::Second,
        mode: spec.mode,
        direction: Direction::Best,
        r_star: r,
        rank: data.num_entities() - r,
        d_star: replay.distance(c, r_star),
        z: replay.z_best(c, r_star),
        weights,
        status,
        stats,
    }
}

/// Second-order problem, continuous weights: maximize `d` subject to exactly
/// `r_star` rivals trailing by at least `d`.
pub(super) fn distance_continuous(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
    seed: Option<WeightVector>,
) -> Result<Solution, OptimizerError> {
    let start = Instant::now();
    if r_star == 0 {
        return Ok(zero_distance(data, spec, seed, start));
    }
    let q = data.num_dimensions();
    let c = spec.target;
    let rivals = rivals(data, spec);
    let Split { open, forced, need } = split(&rivals, spec, r_star)?;
    let seeded = best_seed(data, spec, r_star, seed);

    // d can never exceed the largest lead over any rival that must be counted.
    let lead_cap = |r: &Rival| WEIGHT_TOTAL * pos_max(&r.diff);
    let d_ub = if forced.is_empty() {
        open.iter().map(|r| lead_cap(r)).fold(0.0, f64::max)
    } else {
        forced
            .iter()
            .map(|r| lead_cap(r))
            .fold(f64::INFINITY, f64::min)
    };

    let d_var = q;
    let n = q + 1 + open.len();
    let mut lp = LinearProgram::new(n);
    weight_block(&mut lp, q, spec, None);
    lp.bounds[d_var] = (0.0, d_ub);
    lp.objective[d_var] = 1.0;
    for r in &forced {
        let mut row = pad(&r.diff, n);
        row[d_var] = -1.0;
        lp.add_constraint(row, Relation::Ge, 0.0);
    }
    let mut pick = vec![0.0; n];
    for (i, r) in open.iter().enumerate() {
        let zj = q + 1 + i;
        lp.bounds[zj] = (0.0, 1.0);
        pick[zj] = 1.0;
        let m = WEIGHT_TOTAL * neg_max(&r.diff) + d_ub + 1.0;
        let mut row = pad(&r.diff, n);
        row[d_var] = -1.0;
        row[zj] = -m;
        lp.add_constraint(row, Relation::Ge, -m);
    }
    lp.add_constraint(pick, Relation::Eq, need as f64);
    let problem = MilpProblem {
        lp,
        integer_classes: vec![(q + 1..n).collect()],
        objective_offset: 0.0,
        integral_objective: false,
    };

    let outcome = branch_and_bound(
        &problem,
        &settings(spec, start, spec.node_budget),
        seeded.as_ref().map(|(d, _)| *d),
        |x| {
            let wv = weights_from(x, q, spec.mode)?;
            let replay = Replay::new(data, &wv);
            if replay.dominated(c) != r_star {
                return None;
            }
            Some((replay.distance(c, r_star)?, wv))
        },
    )?;

    let stats = stats_of(&outcome, start);
    let status = status_of(outcome.stop);
    let weights = match (outcome.best, seeded) {
        (Some((_, w)), _) | (None, Some((_, w))) => w,
        (None, None) => return Err(OptimizerError::StaleRStar { target: c, r_star }),
    };
    Ok(distance_solution(
        data, spec, r_star, weights, status, stats,
    ))
}

/// Second-order problem, integer weights. The normalized lead is
/// `d = 10·t / S` with `t` the raw lead and `S = Σw`; fixing `S` makes each
/// subproblem linear, so every total in `1..=cap·Q` is solved in turn.
pub(super) fn distance_integer(
    data: &IndicatorMatrix,
    spec: &OptimizationSpec,
    r_star: usize,
    seed: Option<WeightVector>,
) -> Result<Solution, OptimizerError> {
    let start = Instant::now();
    if r_star == 0 {
        return Ok(zero_distance(data, spec, seed, start));
    }
    let q = data.num_dimensions();
    let c = spec.target;
    let cap = f64::from(spec.weight_cap);
    let rivals = rivals(data, spec);
    let Split { open, forced, need } = split(&rivals, spec, r_star)?;
    let mut best = best_seed(data, spec, r_star, seed);

    let mut stats = SolveStats {
        nodes: 0,
        lp_solves: 0,
        root_bound: None,
        wall_time_secs: 0.0,
    };
    let mut status = SolveStatus::Optimal;
    let max_total = spec.weight_cap as usize * q;

    for s in 1..=max_total {
        let sf = s as f64;
        let lead_cap = |r: &Rival| (sf * pos_max(&r.diff)).min(cap * pos_sum(&r.diff));
        let t_ub = if forced.is_empty() {
            open.iter().map(|r| lead_cap(r)).fold(0.0, f64::max)
        } else {
            forced
                .iter()
                .map(|r| lead_cap(r))
                .fold(f64::INFINITY, f64::min)
        };
        let cutoff_t = best.as_ref().map(|(d, _)| d * sf / WEIGHT_TOTAL);
        if cutoff_t.is_some_and(|t| t_ub <= t + spec.feas_eps) {
            continue;
        }
        let remaining = spec.node_budget.saturating_sub(stats.nodes);
        if remaining == 0 {
            status = SolveStatus::NodeBudget;
            break;
        }

        let t_var = q;
        let n = q + 1 + open.len();
        let mut lp = LinearProgram::new(n);
        weight_block(&mut lp, q, spec, Some(sf));
        lp.bounds[t_var] = (0.0, t_ub);
        lp.objective[t_var] = 1.0;
        for r in &forced {
            let mut row = pad(&r.diff, n);
            row[t_var] = -1.0;
            lp.add_constraint(row, Relation::Ge, 0.0);
        }
        let mut pick = vec![0.0; n];
        for (i, r) in open.iter().enumerate() {
            let zj = q + 1 + i;
            lp.bounds[zj] = (0.0, 1.0);
            pick[zj] = 1.0;
            let m = (sf * neg_max(&r.diff)).min(cap * neg_sum(&r.diff)) + t_ub + 1.0;
            let mut row = pad(&r.diff, n);
            row[t_var] = -1.0;
            row[zj] = -m;
            lp.add_constraint(row, Relation::Ge, -m);
        }
        lp.add_constraint(pick, Relation::Eq, need as f64);
        let problem = MilpProblem {
            lp,
            integer_classes: vec![(q + 1..n).collect(), (0..q).collect()],
            objective_offset: 0.0,
            integral_objective: false,
        };

        let outcome =
            branch_and_bound(&problem, &settings(spec, start, remaining), cutoff_t, |x| {
                let wv = weights_from(x, q, spec.mode)?;
                let replay = Replay::new(data, &wv);
                if replay.dominated(c) != r_star {
                    return None;
                }
                let d = replay.distance(c, r_star)?;
                Some((d * sf / WEIGHT_TOTAL, (d, wv)))
            })?;
        stats.nodes += outcome.nodes;
        stats.lp_solves += outcome.lp_solves;
        if let Some(rb) = outcome.root_bound {
            let d_bound = rb * WEIGHT_TOTAL / sf;
            stats.root_bound = Some(stats.root_bound.map_or(d_bound, |b: f64| b.max(d_bound)));
        }
        if let Some((_, (d, wv))) = outcome.best {
            if best.as_ref().is_none_or(|(b, _)| d > *b) {
                best = Some((d, wv));
            }
        }
        match outcome.stop {
            Stop::Exhausted => {}
            stop => {
                status = status_of(stop);
                break;
            }
        }
    }

    stats.wall_time_secs = start.elapsed().as_secs_f64();
    let Some((_, weights)) = best else {
        return Err(OptimizerError::StaleRStar { target: c, r_star });
    };
    Ok(distance_solution(
        data, spec, r_star, weights, status, stats,
    ))
}

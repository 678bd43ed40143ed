//! LP-based best-bound branch-and-bound over a [`LinearProgram`] with a set of
//! integer variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus};

/// A mixed-integer program: the LP relaxation plus its integer variables.
pub(crate) struct MilpProblem {
    pub lp: LinearProgram,
    /// Integer variables grouped by branching priority, highest priority first.
    pub integer_classes: Vec<Vec<usize>>,
    /// Constant added to the LP objective (e.g. rivals fixed by presolve).
    pub objective_offset: f64,
    /// Every integer-feasible objective value is an integer, so LP bounds can
    /// be rounded down.
    pub integral_objective: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BnbSettings {
    pub node_budget: u64,
    pub int_eps: f64,
    /// A node must promise more than `incumbent + prune_tol` to be explored.
    pub prune_tol: f64,
    pub deadline: Option<Instant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stop {
    Exhausted,
    NodeBudget,
    Deadline,
}

pub(crate) struct BnbOutcome<T> {
    /// Best solution strictly better than the starting cutoff, if any.
    pub best: Option<(f64, T)>,
    pub stop: Stop,
    pub nodes: u64,
    pub lp_solves: u64,
    /// Bound from the root relaxation (including the offset); `None` if the
    /// root relaxation is infeasible.
    pub root_bound: Option<f64>,
}

struct Node {
    bound: f64,
    seq: u64,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: larger bound first, then older node first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Maximizes `problem` by branch-and-bound.
///
/// `cutoff` is the value of a known incumbent; only strictly better solutions
/// are returned. `evaluate` receives an integer-feasible LP solution (integer
/// variables already rounded) and returns its true objective value together
/// with any payload the caller wants back, or `None` to reject it.
pub(crate) fn branch_and_bound<T>(
    problem: &MilpProblem,
    settings: &BnbSettings,
    cutoff: Option<f64>,
    mut evaluate: impl FnMut(&[f64]) -> Option<(f64, T)>,
) -> Result<BnbOutcome<T>, LpError> {
    let mut incumbent = cutoff.unwrap_or(f64::NEG_INFINITY);
    let mut best: Option<(f64, T)> = None;
    let mut nodes = 0u64;
    let mut lp_solves = 0u64;
    let mut root_bound = None;
    let mut seq = 0u64;

    let beats = |bound: f64, incumbent: f64| -> bool {
        if problem.integral_objective {
            bound > incumbent + 0.5
        } else {
            bound > incumbent + settings.prune_tol
        }
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::INFINITY,
        seq,
        bounds: problem.lp.bounds.clone(),
    });

    let mut lp = problem.lp.clone();
    let stop = loop {
        let Some(node) = heap.pop() else {
            break Stop::Exhausted;
        };
        if !beats(node.bound, incumbent) {
            // Best-bound order: nothing left in the heap can do better.
            break Stop::Exhausted;
        }
        if nodes >= settings.node_budget {
            break Stop::NodeBudget;
        }
        if settings.deadline.is_some_and(|d| Instant::now() >= d) {
            break Stop::Deadline;
        }
        nodes += 1;

        lp.bounds.clone_from(&node.bounds);
        let relaxed = solve_lp(&lp)?;
        lp_solves += 1;
        match relaxed.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(LpError::Malformed(
                    "mixed-integer relaxation is unbounded".into(),
                ))
            }
        }
        let mut bound = relaxed.objective + problem.objective_offset;
        if problem.integral_objective {
            bound = (bound + 1e-6).floor();
        }
        if nodes == 1 {
            root_bound = Some(bound);
        }
        if !beats(bound, incumbent) {
            continue;
        }

        let x = &relaxed.solution;
        match select_branch(problem, x, settings.int_eps) {
            Some(j) => {
                let v = x[j];
                let mut down = node.bounds.clone();
                down[j].1 = v.floor();
                let mut up = node.bounds;
                up[j].0 = v.ceil();
                for bounds in [down, up] {
                    if bounds[j].0 <= bounds[j].1 {
                        seq += 1;
                        heap.push(Node { bound, seq, bounds });
                    }
                }
            }
            None => {
                let mut rounded = x.clone();
                for &j in problem.integer_classes.iter().flatten() {
                    rounded[j] = rounded[j].round();
                }
                if let Some((value, payload)) = evaluate(&rounded) {
                    if value > incumbent {
                        incumbent = value;
                        best = Some((value, payload));
                    }
                }
            }
        }
    };

    Ok(BnbOutcome {
        best,
        stop,
        nodes,
        lp_solves,
        root_bound,
    })
}

/// Most fractional variable in the highest-priority class that has one.
fn select_branch(problem: &MilpProblem, x: &[f64], int_eps: f64) -> Option<usize> {
    for class in &problem.integer_classes {
        let mut pick: Option<(usize, f64)> = None;
        for &j in class {
            let frac = x[j] - x[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > int_eps && pick.is_none_or(|(_, d)| dist > d) {
                pick = Some((j, dist));
            }
        }
        if let Some((j, _)) = pick {
            return Some(j);
        }
    }
    None
}

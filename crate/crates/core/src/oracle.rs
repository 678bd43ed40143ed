//! Exhaustive reference solvers for small instances.
//!
//! These are deliberately naive: integer weights are enumerated outright, and
//! continuous problems are decided by one feasibility LP per subset of rivals.
//! They exist to cross-check the branch-and-bound on instances small enough to
//! enumerate, and to generate seeded random instances for that purpose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::IndicatorMatrix;
use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus, Relation};
use crate::optimizer::{Direction, Order, STRICT_EPS};
use crate::ranking::{WeightVector, DEFAULT_TIE_EPS, WEIGHT_TOTAL};

/// Largest number of integer weight vectors the enumerator will visit.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;
/// Largest entity count for the subset-based continuous oracle.
pub const MAX_SUBSET_ENTITIES: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large to enumerate: {0}")]
    TooLarge(String),
    #[error("entity index {0} out of range")]
    EntityOutOfRange(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Reference optimum: the count, the second-order distance if requested, and
/// one weight vector attaining them.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub r_star: usize,
    pub d_star: Option<f64>,
    pub weights: Vec<f64>,
}

fn composite(data: &IndicatorMatrix, w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    (0..data.num_entities())
        .map(|c| {
            (0..data.num_dimensions())
                .map(|q| WEIGHT_TOTAL * w[q] / total * data.value(q, c))
                .sum()
        })
        .collect()
}

fn dominated(ci: &[f64], c: usize) -> usize {
    (0..ci.len())
        .filter(|&k| k != c && ci[c] >= ci[k] - DEFAULT_TIE_EPS)
        .count()
}

fn ahead(ci: &[f64], c: usize) -> usize {
    (0..ci.len())
        .filter(|&k| k != c && ci[k] > ci[c] + DEFAULT_TIE_EPS)
        .count()
}

/// `r`-th largest lead over weakly dominated rivals, clamped at zero.
fn distance(ci: &[f64], c: usize, r: usize) -> Option<f64> {
    if r == 0 {
        return Some(0.0);
    }
    let mut leads: Vec<f64> = (0..ci.len())
        .filter(|&k| k != c && ci[c] >= ci[k] - DEFAULT_TIE_EPS)
        .map(|k| ci[c] - ci[k])
        .collect();
    leads.sort_by(|a, b| b.total_cmp(a));
    leads.get(r - 1).map(|d| d.max(0.0))
}

fn check_target(data: &IndicatorMatrix, c: usize) -> Result<(), OracleError> {
    if c >= data.num_entities() {
        return Err(OracleError::EntityOutOfRange(c));
    }
    Ok(())
}

/// Enumerates every integer weight vector in `0..=cap` with a positive sum.
///
/// For [`Order::Second`] the distance is maximized among vectors attaining the
/// optimal count. Only [`Order::First`] is meaningful with [`Direction::Worst`].
pub fn brute_integer(
    data: &IndicatorMatrix,
    target: usize,
    cap: u32,
    order: Order,
    direction: Direction,
) -> Result<OracleResult, OracleError> {
    check_target(data, target)?;
    let q = data.num_dimensions();
    let size = u64::from(cap + 1)
        .checked_pow(q as u32)
        .filter(|&n| n <= ENUMERATION_BUDGET)
        .ok_or_else(|| OracleError::TooLarge(format!("{}^{q} integer weight vectors", cap + 1)))?;

    // Pass 1: optimal count. Pass 2 (second order): best distance at that count.
    let mut best_count: Option<(usize, Vec<f64>)> = None;
    let mut best_dist: Option<(f64, Vec<f64>)> = None;
    let passes = if order == Order::Second && direction == Direction::Best {
        2
    } else {
        1
    };
    for pass in 0..passes {
        let mut w = vec![0u32; q];
        for _ in 0..size {
            // Odometer increment; the all-zero vector is visited last.
            for slot in w.iter_mut() {
                if *slot == cap {
                    *slot = 0;
                } else {
                    *slot += 1;
                    break;
                }
            }
            if w.iter().all(|&x| x == 0) {
                continue;
            }
            let wf: Vec<f64> = w.iter().map(|&x| f64::from(x)).collect();
            let ci = composite(data, &wf);
            let count = match direction {
                Direction::Best => dominated(&ci, target),
                Direction::Worst => ahead(&ci, target),
            };
            if pass == 0 {
                if best_count.as_ref().is_none_or(|(b, _)| count > *b) {
                    best_count = Some((count, wf));
                }
            } else {
                let r = best_count.as_ref().expect("first pass ran").0;
                if count == r {
                    let d = distance(&ci, target, r).expect("count reached");
                    if best_dist.as_ref().is_none_or(|(b, _)| d > *b) {
                        best_dist = Some((d, wf));
                    }
                }
            }
        }
    }
    let (r_star, weights) = best_count.ok_or_else(|| {
        OracleError::TooLarge("no positive weight vector (cap must be at least 1)".into())
    })?;
    Ok(match best_dist {
        Some((d, w)) => OracleResult {
            r_star,
            d_star: Some(d),
            weights: w,
        },
        None => OracleResult {
            r_star,
            d_star: (passes == 2).then_some(0.0),
            weights,
        },
    })
}

fn subsets_of_size(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < r - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// LP over continuous weights (and a trailing free-ish `d ≥ 0` when `with_d`)
/// requiring each rival in `chosen` to be counted.
fn subset_lp(
    data: &IndicatorMatrix,
    target: usize,
    chosen: &[usize],
    w_min: f64,
    direction: Direction,
    with_d: bool,
) -> LinearProgram {
    let q = data.num_dimensions();
    let n = q + usize::from(with_d);
    let mut lp = LinearProgram::new(n);
    for b in &mut lp.bounds[..q] {
        b.0 = w_min;
    }
    let mut ones = vec![1.0; q];
    ones.resize(n, 0.0);
    lp.add_constraint(ones, Relation::Eq, WEIGHT_TOTAL);
    for &k in chosen {
        let mut row: Vec<f64> = (0..q)
            .map(|d| data.value(d, target) - data.value(d, k))
            .collect();
        match direction {
            Direction::Best => {
                if with_d {
                    row.push(-1.0);
                    lp.objective[q] = 1.0;
                }
                lp.add_constraint(row, Relation::Ge, 0.0);
            }
            Direction::Worst => lp.add_constraint(row, Relation::Le, -STRICT_EPS),
        }
    }
    lp
}

fn rivals_of(data: &IndicatorMatrix, target: usize) -> Vec<usize> {
    (0..data.num_entities()).filter(|&k| k != target).collect()
}

/// Largest number of rivals that some continuous weight vector (`w ≥ w_min`,
/// `Σw = 10`) counts, found by testing subsets from the largest size down.
pub fn brute_continuous_rank(
    data: &IndicatorMatrix,
    target: usize,
    w_min: f64,
    direction: Direction,
) -> Result<OracleResult, OracleError> {
    check_target(data, target)?;
    if data.num_entities() > MAX_SUBSET_ENTITIES {
        return Err(OracleError::TooLarge(format!(
            "{} entities (limit {MAX_SUBSET_ENTITIES})",
            data.num_entities()
        )));
    }
    let rivals = rivals_of(data, target);
    for r in (0..=rivals.len()).rev() {
        for subset in subsets_of_size(rivals.len(), r) {
            let chosen: Vec<usize> = subset.iter().map(|&i| rivals[i]).collect();
            let res = solve_lp(&subset_lp(data, target, &chosen, w_min, direction, false))?;
            if res.status == LpStatus::Optimal {
                return Ok(OracleResult {
                    r_star: r,
                    d_star: None,
                    weights: res.solution,
                });
            }
        }
    }
    unreachable!("the empty subset is always feasible when w_min·Q ≤ 10")
}

/// Best-rank second-order optimum over continuous weights: the largest `d`
/// such that some subset of `r_star` rivals all trail by at least `d`.
pub fn brute_continuous_distance(
    data: &IndicatorMatrix,
    target: usize,
    w_min: f64,
) -> Result<OracleResult, OracleError> {
    let first = brute_continuous_rank(data, target, w_min, Direction::Best)?;
    let r = first.r_star;
    if r == 0 {
        return Ok(OracleResult {
            d_star: Some(0.0),
            ..first
        });
    }
    let rivals = rivals_of(data, target);
    let q = data.num_dimensions();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for subset in subsets_of_size(rivals.len(), r) {
        let chosen: Vec<usize> = subset.iter().map(|&i| rivals[i]).collect();
        let res = solve_lp(&subset_lp(
            data,
            target,
            &chosen,
            w_min,
            Direction::Best,
            true,
        ))?;
        if res.status == LpStatus::Optimal && best.as_ref().is_none_or(|(b, _)| res.objective > *b)
        {
            best = Some((res.objective, res.solution[..q].to_vec()));
        }
    }
    let (d, weights) = best.expect("a subset of size R* is feasible");
    Ok(OracleResult {
        r_star: r,
        d_star: Some(d),
        weights,
    })
}

/// Seeded random indicator matrix with values in `[0, 1]` rounded to
/// `decimals` places. Coarse rounding produces ties on purpose.
pub fn random_instance(
    seed: u64,
    entities: usize,
    dimensions: usize,
    decimals: u32,
) -> IndicatorMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 10f64.powi(decimals as i32);
    let values: Vec<Vec<f64>> = (0..dimensions)
        .map(|_| {
            (0..entities)
                .map(|_| (rng.gen::<f64>() * scale).round() / scale)
                .collect()
        })
        .collect();
    IndicatorMatrix::new(
        (1..=dimensions).map(|i| format!("D{i}")).collect(),
        (1..=entities).map(|i| format!("E{i}")).collect(),
        values,
    )
    .expect("generated values are valid")
}

/// Replays a weight vector from an oracle result.
pub fn weight_vector(result: &OracleResult) -> WeightVector {
    WeightVector::continuous_scaled(&result.weights).expect("oracle weights are nonnegative")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::embedded_fixture_2014;

    fn pair() -> IndicatorMatrix {
        IndicatorMatrix::from_entity_rows(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            &[vec![0.4, 0.5], vec![0.3, 0.2]],
        )
        .unwrap()
    }

    #[test]
    fn enumeration_finds_closed_form() {
        let o = brute_integer(&pair(), 0, 5, Order::Second, Direction::Best).unwrap();
        assert_eq!(o.r_star, 1);
        assert!((o.d_star.unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(o.weights[0], 0.0);
        let w = brute_integer(&pair(), 1, 5, Order::First, Direction::Worst).unwrap();
        assert_eq!(w.r_star, 1);
    }

    #[test]
    fn subset_oracle_finds_closed_form() {
        let o = brute_continuous_distance(&pair(), 0, 0.0).unwrap();
        assert_eq!(o.r_star, 1);
        assert!((o.d_star.unwrap() - 3.0).abs() < 1e-9);
        let o = brute_continuous_distance(&pair(), 0, 2.0).unwrap();
        // w = (2, 8): 0.1·2 + 0.3·8.
        assert!((o.d_star.unwrap() - 2.6).abs() < 1e-9);
    }

    #[test]
    fn refuses_oversized_instances() {
        let data = embedded_fixture_2014();
        assert!(matches!(
            brute_integer(&data, 0, 5, Order::First, Direction::Best),
            Err(OracleError::TooLarge(_))
        ));
        assert!(matches!(
            brute_continuous_rank(&data, 0, 0.0, Direction::Best),
            Err(OracleError::TooLarge(_))
        ));
        assert!(brute_integer(&pair(), 3, 5, Order::First, Direction::Best).is_err());
    }

    proptest::proptest! {
        #[test]
        fn larger_cap_never_hurts(seed in 0u64..10_000, c_len in 2usize..7, q in 1usize..4) {
            let data = random_instance(seed, c_len, q, 2);
            let small = brute_integer(&data, 0, 3, Order::First, Direction::Best).unwrap();
            let large = brute_integer(&data, 0, 5, Order::First, Direction::Best).unwrap();
            proptest::prop_assert!(large.r_star >= small.r_star);
        }
    }

    #[test]
    fn random_instances_are_reproducible() {
        let a = random_instance(42, 6, 3, 2);
        assert_eq!(a, random_instance(42, 6, 3, 2));
        assert_ne!(a, random_instance(43, 6, 3, 2));
        assert!(a.values().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }
}

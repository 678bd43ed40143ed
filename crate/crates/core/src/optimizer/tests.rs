use super::*;
use crate::oracle::{
    brute_continuous_distance, brute_continuous_rank, brute_integer, random_instance,
};
use crate::ranking::dominance_count;
use proptest::prelude::*;

fn matrix(rows: &[&[f64]]) -> IndicatorMatrix {
    let q = rows[0].len();
    IndicatorMatrix::from_entity_rows(
        (0..q).map(|i| format!("D{i}")).collect(),
        (0..rows.len()).map(|i| format!("E{i}")).collect(),
        &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
    )
    .unwrap()
}

fn continuous(target: usize) -> OptimizationSpec {
    OptimizationSpec::new(target).with_mode(WeightMode::Continuous)
}

#[test]
fn single_rival_closed_form() {
    // diff = (0.1, 0.3): all weight on the second dimension gives a lead of 3.
    let data = matrix(&[&[0.4, 0.5], &[0.3, 0.2]]);
    for spec in [continuous(0), OptimizationSpec::new(0)] {
        let s = solve(&data, &spec).unwrap();
        assert_eq!(s.r_star, 1);
        assert_eq!(s.rank, 1);
        assert!((s.d_star.unwrap() - 3.0).abs() < 1e-9, "{s:?}");
        assert!(s.is_proven());
    }
}

#[test]
fn duplicate_rows_tie_at_zero_distance() {
    let data = matrix(&[&[0.5, 0.7, 0.1], &[0.5, 0.7, 0.1], &[0.2, 0.9, 0.0]]);
    let s = solve(&data, &continuous(0)).unwrap();
    assert_eq!(s.r_star, 2);
    assert!(s.z[1] && s.z[2] && !s.z[0]);
    assert_eq!(s.d_star, Some(0.0));
}

#[test]
fn maximal_and_dominated_entities() {
    let data = matrix(&[&[0.9, 0.8], &[0.5, 0.4], &[0.1, 0.1], &[0.6, 0.2]]);
    for mode in [WeightMode::Continuous, WeightMode::Integer] {
        let top = solve(&data, &OptimizationSpec::new(0).with_mode(mode)).unwrap();
        assert_eq!((top.r_star, top.rank), (3, 1));
        let bottom = solve(&data, &OptimizationSpec::new(2).with_mode(mode)).unwrap();
        assert_eq!((bottom.r_star, bottom.rank), (0, 4));
        assert_eq!(bottom.d_star, Some(0.0));

        let worst_top = solve(
            &data,
            &OptimizationSpec::new(0)
                .with_mode(mode)
                .with_order(Order::First)
                .with_direction(Direction::Worst),
        )
        .unwrap();
        assert_eq!((worst_top.r_star, worst_top.rank), (0, 1));
        let worst_bottom = minimize_rank(&data, &OptimizationSpec::new(2).with_mode(mode)).unwrap();
        assert_eq!((worst_bottom.r_star, worst_bottom.rank), (3, 4));
    }
}

#[test]
fn worst_rank_uses_the_weak_dimension() {
    // E0 leads on D0 only; weighting D1 alone puts both rivals ahead.
    let data = matrix(&[&[0.9, 0.1], &[0.5, 0.6], &[0.2, 0.5]]);
    let s = minimize_rank(&data, &continuous(0)).unwrap();
    assert_eq!(s.r_star, 2);
    assert_eq!(s.rank, 3);
    assert_eq!(s.z, vec![false, true, true]);
}

#[test]
fn rejects_bad_specs() {
    let data = matrix(&[&[0.4, 0.5], &[0.3, 0.2]]);
    assert!(matches!(
        solve(&data, &OptimizationSpec::new(5)),
        Err(OptimizerError::Ranking(_))
    ));
    assert!(matches!(
        solve(&data, &continuous(0).with_w_min(6.0)),
        Err(OptimizerError::Infeasible(_))
    ));
    assert!(matches!(
        solve(&data, &continuous(0).with_w_min(-1.0)),
        Err(OptimizerError::InvalidSpec(_))
    ));
    assert!(matches!(
        solve(&data, &OptimizationSpec::new(0).with_weight_cap(6)),
        Err(OptimizerError::InvalidSpec(_))
    ));
    assert!(matches!(
        solve(
            &data,
            &OptimizationSpec::new(0).with_direction(Direction::Worst)
        ),
        Err(OptimizerError::InvalidSpec(_))
    ));
    assert!(matches!(
        maximize_distance_continuous(&data, &continuous(0), 2),
        Err(OptimizerError::StaleRStar { .. })
    ));
}

#[test]
fn w_min_at_the_limit_pins_equal_weights() {
    let data = matrix(&[&[0.4, 0.5], &[0.3, 0.2], &[0.9, 0.0]]);
    let s = solve(&data, &continuous(1).with_w_min(5.0)).unwrap();
    for w in s.weights.normalized() {
        assert!((w - 5.0).abs() < 1e-9);
    }
    assert_eq!(s.r_star, dominance_count(&data, &s.weights, 1).unwrap());
}

#[test]
fn node_budget_yields_unproven_incumbent() {
    let data = random_instance(7, 9, 4, 2);
    let s = solve(&data, &OptimizationSpec::new(3).with_node_budget(1)).unwrap();
    assert!(!s.is_proven());
    assert_eq!(s.r_star, dominance_count(&data, &s.weights, 3).unwrap());
}

#[test]
fn solve_all_orders_by_rank_then_distance() {
    let data = random_instance(11, 7, 3, 2);
    let entries = solve_all(&data, &OptimizationSpec::new(0));
    assert_eq!(entries.len(), 7);
    let keys: Vec<(usize, f64)> = entries
        .iter()
        .map(|e| {
            let s = e.result.as_ref().unwrap();
            (s.rank, s.d_star.unwrap())
        })
        .collect();
    for pair in keys.windows(2) {
        assert!(pair[0].0 < pair[1].0 || (pair[0].0 == pair[1].0 && pair[0].1 >= pair[1].1));
    }
}

#[test]
fn big_m_matches_formula() {
    let data = matrix(&[&[0.4, 0.5], &[0.9, 0.2], &[0.1, 0.8]]);
    let cont = BigMData::first_order(&data, 0, WeightMode::Continuous, 5);
    assert_eq!(cont.m[0], 0.0);
    assert!((cont.m[1] - 6.0).abs() < 1e-12);
    assert!((cont.m[2] - 4.0).abs() < 1e-12);
    let int = BigMData::first_order(&data, 0, WeightMode::Integer, 5);
    assert!((int.m[1] - 3.5).abs() < 1e-12);
    assert!((int.m[2] - 2.5).abs() < 1e-12);
}

fn instance() -> impl Strategy<Value = (IndicatorMatrix, usize)> {
    (any::<u64>(), 2usize..=7, 1usize..=4)
        .prop_flat_map(|(seed, c, q)| (Just(random_instance(seed, c, q, 2)), 0..c))
}

fn stats_free(mut s: Solution) -> Solution {
    s.stats.wall_time_secs = 0.0;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn big_m_is_never_binding((data, c) in instance(), raw in prop::collection::vec(0u32..=5, 4)) {
        let q = data.num_dimensions();
        let mut w: Vec<u32> = raw[..q].to_vec();
        if w.iter().all(|&x| x == 0) { w[0] = 1; }
        let int = BigMData::first_order(&data, c, WeightMode::Integer, 5);
        let cont = BigMData::first_order(&data, c, WeightMode::Continuous, 5);
        let total: u32 = w.iter().sum();
        for k in (0..data.num_entities()).filter(|&k| k != c) {
            let raw_margin: f64 = (0..q).map(|j| f64::from(w[j]) * (data.value(j, c) - data.value(j, k))).sum();
            prop_assert!(raw_margin >= -int.m[k]);
            let scaled = raw_margin * 10.0 / f64::from(total);
            prop_assert!(scaled >= -cont.m[k]);
        }
    }

    #[test]
    fn integer_matches_enumeration((data, c) in instance(), cap in 1u32..=3) {
        let spec = OptimizationSpec::new(c).with_weight_cap(cap);
        let s = solve(&data, &spec).unwrap();
        let o = brute_integer(&data, c, cap, Order::Second, Direction::Best).unwrap();
        prop_assert_eq!(s.r_star, o.r_star);
        prop_assert!((s.d_star.unwrap() - o.d_star.unwrap()).abs() < 1e-6, "{:?} vs {:?}", s, o);
        let w = minimize_rank(&data, &spec.clone().with_order(Order::First)).unwrap();
        let ow = brute_integer(&data, c, cap, Order::First, Direction::Worst).unwrap();
        prop_assert_eq!(w.r_star, ow.r_star);
    }

    #[test]
    fn continuous_matches_subset_oracle((data, c) in instance()) {
        let s = solve(&data, &continuous(c)).unwrap();
        let o = brute_continuous_distance(&data, c, 0.0).unwrap();
        prop_assert_eq!(s.r_star, o.r_star);
        prop_assert!((s.d_star.unwrap() - o.d_star.unwrap()).abs() < 1e-6, "{:?} vs {:?}", s, o);
        let w = minimize_rank(&data, &continuous(c).with_order(Order::First)).unwrap();
        let ow = brute_continuous_rank(&data, c, 0.0, Direction::Worst).unwrap();
        prop_assert_eq!(w.r_star, ow.r_star);
    }

    #[test]
    fn solution_replays_exactly((data, c) in instance(), integer in any::<bool>()) {
        let mode = if integer { WeightMode::Integer } else { WeightMode::Continuous };
        let s = solve(&data, &OptimizationSpec::new(c).with_mode(mode)).unwrap();
        prop_assert_eq!(s.r_star, dominance_count(&data, &s.weights, c).unwrap());
        prop_assert_eq!(s.rank, data.num_entities() - s.r_star);
        prop_assert_eq!(s.z.iter().filter(|&&z| z).count(), s.r_star);
        prop_assert!(!s.z[c]);
        let ci = composite_indices(&data, &s.weights).unwrap();
        for k in (0..data.num_entities()).filter(|&k| s.z[k]) {
            prop_assert!(ci[c] - ci[k] >= s.d_star.unwrap() - 1e-9);
        }
        let w = s.weights.normalized();
        prop_assert!((w.iter().sum::<f64>() - 10.0).abs() < 1e-9);
        prop_assert!(w.iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn second_order_pins_first_order((data, c) in instance(), integer in any::<bool>()) {
        let mode = if integer { WeightMode::Integer } else { WeightMode::Continuous };
        let spec = OptimizationSpec::new(c).with_mode(mode);
        let first = solve(&data, &spec.clone().with_order(Order::First)).unwrap();
        let second = solve(&data, &spec).unwrap();
        prop_assert_eq!(first.r_star, second.r_star);
        prop_assert_eq!(first.rank, second.rank);
    }

    #[test]
    fn integer_never_beats_continuous((data, c) in instance()) {
        let int = solve(&data, &OptimizationSpec::new(c)).unwrap();
        let cont = solve(&data, &continuous(c)).unwrap();
        prop_assert!(int.r_star <= cont.r_star);
        if int.r_star == cont.r_star {
            prop_assert!(int.d_star.unwrap() <= cont.d_star.unwrap() + 1e-9);
        }
    }

    #[test]
    fn solving_is_deterministic((data, c) in instance()) {
        let spec = OptimizationSpec::new(c);
        let a = stats_free(solve(&data, &spec).unwrap());
        let b = stats_free(solve(&data, &spec).unwrap());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn w_min_is_respected((data, c) in instance(), frac in 0.0f64..1.0) {
        let w_min = frac * 10.0 / data.num_dimensions() as f64;
        let s = solve(&data, &continuous(c).with_w_min(w_min)).unwrap();
        prop_assert!(s.weights.normalized().iter().all(|&w| w >= w_min - 1e-9));
        let o = brute_continuous_distance(&data, c, w_min).unwrap();
        prop_assert_eq!(s.r_star, o.r_star);
        prop_assert!((s.d_star.unwrap() - o.d_star.unwrap()).abs() < 1e-6);
    }
}

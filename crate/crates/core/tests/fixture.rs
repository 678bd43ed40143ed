use rankopt::optimizer::{solve, solve_all, Direction, OptimizationSpec, Order};
use rankopt::ranking::{dominance_count, ranking_table, WeightMode, WeightVector};
use rankopt::{embedded_fixture_2014, parse_csv, IndicatorMatrix};

#[test]
fn batch_on_fixture_is_proven_and_replays() {
    let data = embedded_fixture_2014();
    let entries = solve_all(&data, &OptimizationSpec::new(0));
    assert_eq!(entries.len(), 15);
    for e in &entries {
        let s = e.result.as_ref().unwrap();
        assert!(s.is_proven(), "{}", e.name);
        assert_eq!(
            dominance_count(&data, &s.weights, e.entity).unwrap(),
            s.r_star
        );
    }
    let austria = entries.iter().find(|e| e.name == "Austria").unwrap();
    assert_eq!(austria.result.as_ref().unwrap().rank, 2);
    assert_eq!(entries.last().unwrap().name, "Austria");
}

#[test]
fn spain_prefers_health_and_work_life_balance() {
    let data = embedded_fixture_2014();
    let spain = data.find_entity("spain").unwrap();
    let s = solve(&data, &OptimizationSpec::new(spain)).unwrap();
    let w = s.weights.as_integers().unwrap();
    let health = data.find_dimension("Health").unwrap();
    let wlb = data.find_dimension("Work-Life Balance").unwrap();
    assert_eq!((w[health], w[wlb]), (5, 4));
    assert_eq!(w.iter().sum::<u32>(), 9);
}

#[test]
fn united_states_leads_on_income_alone() {
    let data = embedded_fixture_2014();
    let us = data.find_entity("United States").unwrap();
    let s = solve(&data, &OptimizationSpec::new(us)).unwrap();
    let income = data.find_dimension("Income").unwrap();
    assert_eq!(s.rank, 1);
    for (q, &w) in s.weights.normalized().iter().enumerate() {
        assert_eq!(w > 0.0, q == income);
    }
}

#[test]
fn worst_rank_on_fixture_replays() {
    let data = embedded_fixture_2014();
    for mode in [WeightMode::Integer, WeightMode::Continuous] {
        let poland = data.find_entity("Poland").unwrap();
        let spec = OptimizationSpec::new(poland)
            .with_mode(mode)
            .with_order(Order::First)
            .with_direction(Direction::Worst);
        let s = solve(&data, &spec).unwrap();
        let table = ranking_table(&data, &s.weights).unwrap();
        let ahead = table
            .entries
            .iter()
            .filter(|e| e.ci > table.entry(poland).unwrap().ci + 1e-9)
            .count();
        assert_eq!(ahead, s.r_star);
        assert_eq!(s.rank, 1 + s.r_star);
        // Any single dimension is admissible, so the optimum can't do worse.
        let single = (0..data.num_dimensions())
            .map(|q| {
                (0..data.num_entities())
                    .filter(|&k| data.value(q, k) > data.value(q, poland) + 1e-6)
                    .count()
            })
            .max()
            .unwrap();
        assert!(s.r_star >= single, "{mode}: {} < {single}", s.r_star);
    }
}

#[test]
fn csv_export_reloads_to_same_optimum() {
    let data = embedded_fixture_2014();
    let reloaded: IndicatorMatrix = parse_csv(&data.to_csv(), true).unwrap();
    assert_eq!(reloaded, data);
    let w = WeightVector::equal_weights(data.num_dimensions());
    assert_eq!(
        ranking_table(&data, &w).unwrap(),
        ranking_table(&reloaded, &w).unwrap()
    );
}

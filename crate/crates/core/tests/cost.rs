mod common;

use proptest::prelude::*;
use qkdplan::cost::{
    classify_paths, discount_factor, edge_cost, has_bottleneck, path_cost_basic, penalty_factors, quartiles, CostTable,
    DiscountState, PenaltyMode,
};
use qkdplan::graph::PathTable;

proptest! {
    #[test]
    fn discount_grows_toward_one(q in 0u32..200) {
        let (a, b) = (discount_factor(q), discount_factor(q + 1));
        prop_assert!((0.0..1.0).contains(&a));
        prop_assert!(b >= a);
    }

    #[test]
    fn edge_cost_falls_with_rate_and_use(rate in 0.5f64..50.0, bump in 0.01f64..10.0, q in 0u32..30, deg in 1usize..10, n in 2usize..40) {
        let c = edge_cost(rate, q, deg, n).unwrap();
        prop_assert!(c > 0.0);
        prop_assert!(edge_cost(rate + bump, q, deg, n).unwrap() < c);
        prop_assert!(edge_cost(rate, q + 1, deg, n).unwrap() < c);
        let expected = 0.9f64.powi(q as i32) * deg as f64 * n as f64 / (rate * rate);
        prop_assert!((c - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn classes_are_monotone_in_cost(costs in proptest::collection::vec(0.0f64..100.0, 1..40)) {
        let q = quartiles(&costs).unwrap();
        prop_assert!(q.q1 <= q.median && q.median <= q.q3);
        let classes = classify_paths(&costs).unwrap();
        for i in 0..costs.len() {
            for j in 0..costs.len() {
                if costs[i] < costs[j] {
                    prop_assert!(classes[i] <= classes[j]);
                }
            }
        }
    }

    #[test]
    fn penalty_weight_exceeds_every_path_cost(max_cost in 0.0f64..1e4) {
        let nn = penalty_factors(max_cost, PenaltyMode::Nn);
        let rd = penalty_factors(max_cost, PenaltyMode::Redundancy);
        prop_assert_eq!(nn.b, 0.5);
        prop_assert!(nn.a > nn.b * 2.0 * max_cost);
        prop_assert!(rd.a >= rd.b * 2.0 * max_cost);
        prop_assert_eq!(nn.a, rd.a + 1.0);
    }

    #[test]
    fn path_costs_follow_their_bottleneck(seed in any::<u64>(), n in 3usize..7, extra in 0usize..6) {
        let mut r = common::rng(seed);
        let edges = common::random_connected(&mut r, n, extra);
        let net = common::network(&mut r, n, &edges, 0.0);
        let table = PathTable::for_source(&net, 0, 3);
        let paths = table.paths_from(0);
        let table = CostTable::build(&net, &paths, &DiscountState::new(net.edge_count())).unwrap();
        for (p, c) in paths.iter().zip(&table.paths) {
            let es = p.edges(&net);
            let first = table.edge_costs[es[0]];
            let worst = es.iter().map(|&e| table.edge_costs[e]).fold(0.0, f64::max);
            let want = p.len() as f64 * if has_bottleneck(&net, p) { worst } else { first };
            prop_assert!((c.basic - want).abs() <= 1e-12 * want);
            prop_assert_eq!(c.basic, path_cost_basic(&net, p, &table.edge_costs));
            prop_assert!(c.cost <= table.max_cost);
        }
    }
}

#[test]
fn discount_lowers_costs_of_recorded_edges() {
    let mut r = common::rng(11);
    let edges = common::random_connected(&mut r, 6, 4);
    let net = common::network(&mut r, 6, &edges, 0.0);
    let fresh = DiscountState::new(net.edge_count());
    let mut used = fresh.clone();
    used.record([0, 0, 2]);
    assert_eq!(used.count(0), 1);
    let a = qkdplan::cost::edge_costs(&net, &fresh);
    let b = qkdplan::cost::edge_costs(&net, &used);
    for e in 0..net.edge_count() {
        if e == 0 || e == 2 {
            assert!(b[e] < a[e]);
        } else {
            assert_eq!(b[e], a[e]);
        }
    }
}

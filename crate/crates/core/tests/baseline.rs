mod common;

use proptest::prelude::*;
use qkdplan::baseline::{run_sa, run_sa_batch, sa_accept, sa_neighbor, BaselineError, SaConfig};
use qkdplan::graph::{is_connected, is_two_edge_connected};
use qkdplan::{EdgeSet, Network};

fn graph(two_edge: bool) -> impl Strategy<Value = Network> {
    (any::<u64>(), 3usize..8, 0usize..6).prop_map(move |(seed, n, extra)| {
        let mut r = common::rng(seed);
        let edges = if two_edge {
            common::random_two_edge_connected(&mut r, n, extra)
        } else {
            common::random_connected(&mut r, n, extra)
        };
        common::network(&mut r, n, &edges, 0.002)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn acceptance_is_a_probability(e in -1e3f64..1e3, e_new in -1e3f64..1e3, w in 0u64..100, t in 1e-4f64..1e3) {
        let p = sa_accept(e, e_new, w, t, 0.04);
        prop_assert!((0.0..=1.0).contains(&p));
        if e_new <= e {
            prop_assert_eq!(p, 1.0);
        }
    }

    #[test]
    fn neighbors_toggle_two_or_three_edges(net in graph(false), seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let full = EdgeSet::full(&net);
        if let Some(next) = sa_neighbor(&net, &full, &mut r, false, 3, 1000) {
            let changed = full.symmetric_difference(&next).len();
            prop_assert!((2..=3).contains(&changed));
            prop_assert!(is_connected(&net, &next));
        }
    }

    #[test]
    fn runs_stay_feasible(net in graph(true), seed in any::<u64>(), redundant in any::<bool>()) {
        let config = SaConfig { seed, redundancy_mode: redundant, restarts: 2, ..SaConfig::default() };
        let plan = run_sa(&net, &config).unwrap();
        if redundant {
            prop_assert!(is_two_edge_connected(&net, &plan.edges));
        } else {
            prop_assert!(is_connected(&net, &plan.edges));
        }
        prop_assert_eq!(plan, run_sa(&net, &config).unwrap());
    }
}

#[test]
fn batch_runs_are_reproducible() {
    let mut r = common::rng(4);
    let edges = common::random_two_edge_connected(&mut r, 7, 6);
    let net = common::network(&mut r, 7, &edges, 0.002);
    let config = SaConfig { restarts: 1, ..SaConfig::default() };
    let runs = run_sa_batch(&net, &config, 4).unwrap();
    assert_eq!(runs.len(), 4);
    assert_eq!(runs, run_sa_batch(&net, &config, 4).unwrap());
}

#[test]
fn redundancy_mode_rejects_trees() {
    let mut r = common::rng(5);
    let net = common::network(&mut r, 4, &[(0, 1), (1, 2), (2, 3)], 0.002);
    let config = SaConfig { redundancy_mode: true, ..SaConfig::default() };
    assert!(matches!(run_sa(&net, &config), Err(BaselineError::Infeasible(_))));
}

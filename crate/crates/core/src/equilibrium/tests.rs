use approx::assert_abs_diff_eq;

use super::*;
use crate::model::tests::three_node;
use crate::model::{DemandCurve, Generator, Line, Network, Node, ScenarioSet, Season};

fn two_node(f_max: f64, inv_cost: f64, expandable: bool) -> (Network, ScenarioSet) {
    let nodes = vec![Node::new("n1", "A"), Node::new("n2", "B")];
    let lines = vec![Line {
        id: "l21".into(),
        from_node: "n2".into(),
        to_node: "n1".into(),
        f_max,
        inv_cost,
        expandable,
    }];
    let mut s1 = Generator::new("s1", "n1", f64::INFINITY).with_flat_cost(["all"], 2.0);
    s1.cost_slope = 2.0;
    let mut s2 = Generator::new("s2", "n2", f64::INFINITY).with_flat_cost(["all"], 1.0);
    s2.cost_slope = 1.0;
    let net = Network::new(nodes, lines, vec![s1, s2], vec![]);
    let sc = ScenarioSet {
        probabilities: vec![1.0],
        seasons: vec![Season {
            label: "all".into(),
            periods: vec![0],
        }],
        n_periods: 1,
        demand: vec![vec![vec![DemandCurve::new(-1.0, 10.0)], vec![DemandCurve::new(-2.0, 10.0)]]],
        period_weight: 1.0,
    };
    (net, sc)
}

fn solve_with(net: &Network, sc: &ScenarioSet, mask: &ExpansionMask) -> DispatchSolution {
    let p = assemble(net, sc, mask).unwrap();
    solve(&p, &ToleranceSet::default()).unwrap()
}

#[test]
fn three_node_column_count() {
    let (net, sc) = three_node();
    let p = assemble(&net, &sc, &ExpansionMask::allow_all(&net)).unwrap();
    assert_eq!(p.index.n_vars, 3 + 1 + 2 + 1);
    assert!(p.is_concave());
    assert_eq!(p.count_rows(|t| matches!(t, RowTag::MarketClearing { .. })), 3);
}

#[test]
fn deny_all_pins_investment_columns() {
    let (net, sc) = three_node();
    let p = assemble(&net, &sc, &ExpansionMask::deny_all(&net)).unwrap();
    let c = p.index.x_col[1].unwrap();
    assert_eq!((p.qp.lower[c], p.qp.upper[c]), (0.0, 0.0));
    assert!(p.index.x_col[0].is_none());
}

#[test]
fn market_clearing_rows_per_scenario_node_period() {
    let (net, mut sc) = three_node();
    sc.probabilities = vec![0.5, 0.5];
    sc.demand.push(sc.demand[0].clone());
    let p = assemble(&net, &sc, &ExpansionMask::allow_all(&net)).unwrap();
    assert_eq!(p.count_rows(|t| matches!(t, RowTag::MarketClearing { .. })), 2 * 3);
}

#[test]
fn two_node_unconstrained_common_price() {
    let (net, sc) = two_node(f64::INFINITY, 0.0, false);
    let s = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
    assert_abs_diff_eq!(s.price[0][0][0], 17.0 / 3.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.price[0][1][0], 17.0 / 3.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.f[0][0][0], 2.5, epsilon = 1e-7);
}

#[test]
fn two_node_autarky_prices() {
    let (net, sc) = two_node(0.0, 0.0, true);
    let s = solve_with(&net, &sc, &ExpansionMask::deny_all(&net));
    assert_abs_diff_eq!(s.price[0][0][0], 22.0 / 3.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.price[0][1][0], 4.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.x[0], 0.0);
}

#[test]
fn three_node_new_situation() {
    let (net, sc) = three_node();
    let s = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
    for n in 0..3 {
        assert_abs_diff_eq!(s.price[0][n][0], 4.0, epsilon = 1e-7);
    }
    assert_abs_diff_eq!(s.q[0][0][0], 4.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.d[0][1][0], 2.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.d[0][2][0], 2.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.x[1], 2.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.objective, 12.0, epsilon = 1e-7);
    let rep = verify_kkt(&net, &sc, &s).unwrap();
    assert!(rep.max_relative() <= 1e-6, "{rep:?}");
}

#[test]
fn three_node_old_situation_has_no_rent() {
    let (net, sc) = three_node();
    let s = solve_with(&net, &sc, &ExpansionMask::deny_all(&net));
    assert_abs_diff_eq!(s.price[0][1][0], 3.0, epsilon = 1e-7);
    assert_abs_diff_eq!(s.objective, 9.0, epsilon = 1e-7);
    let cr = congestion_rent(&net, &s, "l12").unwrap();
    assert_abs_diff_eq!(cr.expected, 0.0, epsilon = 1e-7);
}

#[test]
fn zeroed_prices_expose_marginal_profit() {
    let (net, sc) = three_node();
    let mut s = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
    for p in s.price.iter_mut().flatten().flatten() {
        *p = 0.0;
    }
    let rep = verify_kkt(&net, &sc, &s).unwrap();
    // pi - C - slope * q at q = 4 with pi = 0.
    assert_abs_diff_eq!(rep.generator.stationarity, 4.0, epsilon = 1e-6);
}

#[test]
fn perturbed_output_at_binding_capacity() {
    let (mut net, sc) = two_node(0.0, 0.0, false);
    net.generators[0].g_max = 1.0;
    let s = solve_with(&net, &sc, &ExpansionMask::deny_all(&net));
    assert_abs_diff_eq!(s.q[0][0][0], 1.0, epsilon = 1e-7);
    assert!(s.capacity_dual[0][0][0] > 0.0);
    let mut bad = s.clone();
    bad.q[0][0][0] += 1.0;
    let rep = verify_kkt(&net, &sc, &bad).unwrap();
    assert_abs_diff_eq!(rep.generator.primal, 1.0, epsilon = 1e-6);
}

#[test]
fn optimal_line_earns_its_cost() {
    for (c, x_star) in [(0.0, 2.5), (1.0, 1.75), (1.3, 1.525), (4.0, 0.0)] {
        let (net, sc) = two_node(0.0, c, true);
        let s = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
        assert_abs_diff_eq!(s.x[0], x_star, epsilon = 1e-6);
        let cr = congestion_rent(&net, &s, "l21").unwrap();
        assert_abs_diff_eq!(cr.expected, c * s.x[0], epsilon = 1e-6);
        if x_star > 0.0 {
            assert_abs_diff_eq!(s.price[0][0][0] - s.price[0][1][0], c, epsilon = 1e-6);
        }
    }
}

#[test]
fn relaxing_the_mask_never_hurts() {
    let (net, sc) = two_node(0.5, 1.0, true);
    let closed = solve_with(&net, &sc, &ExpansionMask::deny_all(&net));
    let open = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
    assert!(open.objective >= closed.objective - 1e-9);
}

#[test]
fn zero_probability_scenarios_are_inert() {
    let (net, sc) = two_node(0.0, 1.0, true);
    let base = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
    let mut sc2 = sc.clone();
    sc2.probabilities = vec![1.0, 0.0];
    sc2.demand.push(vec![vec![DemandCurve::new(-1.0, 50.0)], vec![DemandCurve::new(-1.0, 5.0)]]);
    let s = solve_with(&net, &sc2, &ExpansionMask::allow_all(&net));
    assert_abs_diff_eq!(s.x[0], base.x[0], epsilon = 1e-8);
    assert_abs_diff_eq!(s.objective, base.objective, epsilon = 1e-8);
    // The zero-probability scenario is still dispatched against the same line.
    assert!(s.f[1][0][0].abs() <= s.x[0] + 1e-8);
    assert!(s.price[1][0][0] > s.price[0][0][0]);
}

#[test]
fn solution_round_trips_through_csv() {
    let (net, sc) = two_node(0.0, 1.0, true);
    let s = solve_with(&net, &sc, &ExpansionMask::allow_all(&net));
    let dir = tempfile::tempdir().unwrap();
    let sp = dir.path().join("solution.csv");
    let pp = dir.path().join("prices.csv");
    write_solution_csv(&sp, &net, &s).unwrap();
    write_prices_csv(&pp, &net, &s).unwrap();
    let back = read_solution_csv(&sp).unwrap();
    assert_eq!(back, export::solution_records(&net, &s));
    for (a, b) in back.iter().zip(export::solution_records(&net, &s)) {
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
    let prices = read_prices_csv(&pp, &net).unwrap();
    assert_eq!(prices, s.price);
}

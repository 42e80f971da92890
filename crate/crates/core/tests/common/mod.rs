#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::Rng;
use tepcomp::model::{DemandCurve, Generator, Line, Network, Node, Renewable, ScenarioSet, Season};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Two nodes with the linear curves D1: p = 10 - d, S1: p = 2 + 2q,
/// D2: p = 10 - 2d, S2: p = 1 + q and an empty, expandable 2 -> 1 line.
pub fn two_node(line_cost: f64) -> (Network, ScenarioSet) {
    let nodes = vec![Node::new("n1", "A"), Node::new("n2", "B")];
    let lines = vec![Line {
        id: "l21".into(),
        from_node: "n2".into(),
        to_node: "n1".into(),
        f_max: 0.0,
        inv_cost: line_cost,
        expandable: true,
    }];
    let mut s1 = Generator::new("s1", "n1", f64::INFINITY).with_flat_cost(["all"], 2.0);
    s1.cost_slope = 2.0;
    let mut s2 = Generator::new("s2", "n2", f64::INFINITY).with_flat_cost(["all"], 1.0);
    s2.cost_slope = 1.0;
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
    (Network::new(nodes, lines, vec![s1, s2], vec![]), sc)
}

pub struct Shape {
    pub nodes: usize,
    pub scenarios: usize,
    pub periods: usize,
    /// Allow renewables, generator expansion and energy limits.
    pub rich: bool,
}

/// Random instance that is always feasible: demand may fall to zero and every
/// unit may stay idle.
pub fn random_instance(rng: &mut impl Rng, shape: &Shape) -> (Network, ScenarioSet) {
    let n = shape.nodes;
    let nodes: Vec<Node> = (0..n).map(|i| Node::new(format!("n{i}"), format!("C{i}"))).collect();
    let n_seasons = if shape.periods > 1 { rng.gen_range(1..=2) } else { 1 };
    let labels: Vec<String> = (0..n_seasons).map(|s| format!("s{s}")).collect();
    let seasons: Vec<Season> = labels
        .iter()
        .enumerate()
        .map(|(s, l)| Season {
            label: l.clone(),
            periods: (0..shape.periods).filter(|t| t * n_seasons / shape.periods == s).collect(),
        })
        .collect();

    let mut lines = Vec::new();
    let mut add_line = |rng: &mut dyn rand::RngCore, a: usize, b: usize| {
        let expandable = rng.gen_bool(0.5);
        lines.push(Line {
            id: format!("l{}", lines.len()),
            from_node: format!("n{a}"),
            to_node: format!("n{b}"),
            f_max: if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(1.0..20.0) },
            inv_cost: if expandable { rng.gen_range(0.0..10.0) } else { 0.0 },
            expandable,
        });
    };
    for b in 1..n {
        let a = rng.gen_range(0..b);
        add_line(rng, a, b);
    }
    if n >= 3 && rng.gen_bool(0.5) {
        add_line(rng, 0, n - 1);
    }

    let mut generators = Vec::new();
    for i in 0..n {
        for k in 0..rng.gen_range(0..=2usize) {
            let g_max = if rng.gen_bool(0.2) {
                f64::INFINITY
            } else {
                rng.gen_range(5.0..40.0)
            };
            let mut g = Generator::new(format!("g{i}{k}"), format!("n{i}"), g_max);
            for l in &labels {
                g.marg_cost.insert(l.clone(), rng.gen_range(1.0..15.0));
            }
            g.cost_slope = rng.gen_range(0.1..2.0);
            if shape.rich && rng.gen_bool(0.3) {
                g.expandable = true;
                g.inv_cost = rng.gen_range(1.0..10.0);
            }
            if shape.rich && rng.gen_bool(0.3) {
                for w in 0..shape.scenarios {
                    for s in &seasons {
                        g.energy_limits
                            .insert((w, s.label.clone()), rng.gen_range(5.0..30.0) * s.periods.len() as f64);
                    }
                }
            }
            generators.push(g);
        }
    }
    let mut renewables = Vec::new();
    if shape.rich {
        for i in 0..n {
            if rng.gen_bool(0.4) {
                let expandable = rng.gen_bool(0.5);
                renewables.push(Renewable {
                    id: format!("r{i}"),
                    node: format!("n{i}"),
                    g_r: rng.gen_range(0.0..20.0),
                    inv_cost: if expandable { rng.gen_range(1.0..10.0) } else { 0.0 },
                    profile: (0..shape.scenarios)
                        .map(|_| (0..shape.periods).map(|_| rng.gen_range(0.0..1.0)).collect())
                        .collect(),
                    expandable,
                });
            }
        }
    }

    let raw: Vec<f64> = (0..shape.scenarios).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let demand = (0..shape.scenarios)
        .map(|_| {
            (0..n)
                .map(|_| {
                    (0..shape.periods)
                        .map(|_| DemandCurve::new(-rng.gen_range(0.5..3.0), rng.gen_range(20.0..60.0)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let sc = ScenarioSet {
        probabilities: raw.iter().map(|r| r / total).collect(),
        seasons,
        n_periods: shape.periods,
        demand,
        period_weight: 1.0,
    };
    (Network::new(nodes, lines, generators, renewables), sc)
}

/// Surplus of one node that imports `m` (negative when exporting), with the
/// local units dispatched at a common clearing price. `None` when the node
/// cannot export that much.
fn node_surplus(net: &Network, sc: &ScenarioSet, n: usize, m: f64) -> Option<f64> {
    let curve = sc.demand[0][n][0];
    let season = &sc.seasons[0].label;
    let units: Vec<(f64, f64, f64)> = net
        .generators
        .iter()
        .filter(|g| g.node == net.nodes[n].id)
        .map(|g| (g.marg_cost[season], g.cost_slope, g.g_max))
        .collect();
    let demand = |p: f64| ((p - curve.intercept) / curve.slope).max(0.0);
    let supply = |p: f64| -> Vec<f64> { units.iter().map(|&(c, s, cap)| ((p - c) / s).clamp(0.0, cap)).collect() };
    let excess = |p: f64| demand(p) - supply(p).iter().sum::<f64>() - m;
    let (mut lo, mut hi) = (-1e4, 1e4);
    if excess(hi) > 1e-9 || excess(lo) < -1e-9 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let q = supply(p);
    let d = q.iter().sum::<f64>() + m;
    if d < -1e-9 {
        return None;
    }
    let cost: f64 = units.iter().zip(&q).map(|(&(c, s, _), &x)| c * x + 0.5 * s * x * x).sum();
    Some(curve.utility(d.max(0.0)) - cost)
}

/// Welfare at the given line flows, with any capacity beyond `f_max` built at
/// the line's investment cost.
fn welfare_at(net: &Network, sc: &ScenarioSet, flows: &[f64]) -> f64 {
    let mut import = vec![0.0; net.nodes.len()];
    let mut total = 0.0;
    for (line, &f) in net.lines.iter().zip(flows) {
        let excess = (f.abs() - line.f_max).max(0.0);
        if excess > 0.0 {
            if !line.expandable {
                return f64::NEG_INFINITY;
            }
            total -= line.inv_cost * excess;
        }
        import[net.node_index(&line.to_node).unwrap()] += f;
        import[net.node_index(&line.from_node).unwrap()] -= f;
    }
    for (n, &m) in import.iter().enumerate() {
        match node_surplus(net, sc, n, m) {
            Some(s) => total += s,
            None => return f64::NEG_INFINITY,
        }
    }
    total
}

/// Grid search over line flows for single-scenario, single-period instances
/// without renewables or generator expansion, refining around the best point.
pub fn brute_force_welfare(net: &Network, sc: &ScenarioSet) -> f64 {
    assert!(sc.n_scenarios() == 1 && sc.n_periods == 1 && net.renewables.is_empty());
    assert!(net.generators.iter().all(|g| !g.expandable && g.energy_limits.is_empty()));
    let dims = net.lines.len();
    let bound: Vec<f64> = net
        .lines
        .iter()
        .map(|l| if l.expandable { 200.0 } else { l.f_max.min(200.0) })
        .collect();
    let mut center = vec![0.0; dims];
    let mut span = bound.clone();
    let steps = 12usize;
    let mut best = welfare_at(net, sc, &center);
    for _ in 0..32 {
        let mut idx = vec![0usize; dims];
        let mut best_point = center.clone();
        loop {
            let point: Vec<f64> = (0..dims)
                .map(|k| {
                    let v = center[k] - span[k] + 2.0 * span[k] * idx[k] as f64 / steps as f64;
                    v.clamp(-bound[k], bound[k])
                })
                .collect();
            let w = welfare_at(net, sc, &point);
            if w > best {
                best = w;
                best_point = point;
            }
            let mut k = 0;
            while k < dims {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == dims {
                break;
            }
        }
        center = best_point;
        for s in span.iter_mut() {
            *s *= 0.5;
        }
    }
    best
}

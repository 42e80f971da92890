//! Domain types for the transport-model power market and structural validation.
//!
//! The network (nodes, lines, generators, renewables) is scenario-independent
//! except for the per-scenario data that the market model attaches to units:
//! renewable production profiles and seasonal energy limits. Demand curves and
//! scenario weights live in [`ScenarioSet`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// Tolerance on the probability sum of a scenario set.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub country: String,
    /// Ids of generators located here; filled by [`Network::new`].
    pub generators: Vec<String>,
    /// Ids of renewables located here; filled by [`Network::new`].
    pub renewables: Vec<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, country: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            country: country.into(),
            generators: Vec::new(),
            renewables: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: String,
    pub from_node: String,
    pub to_node: String,
    /// Existing capacity in MW. May be `f64::INFINITY` for an unconstrained link.
    pub f_max: f64,
    /// Annualized investment cost in EUR/MW/yr.
    pub inv_cost: f64,
    pub expandable: bool,
}

impl Line {
    /// Node-line incidence entry: +1 at the sending node, -1 at the receiving node.
    pub fn incidence(&self, node: &str) -> f64 {
        if node == self.from_node {
            1.0
        } else if node == self.to_node {
            -1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub node: String,
    /// Installed capacity in MW. May be infinite.
    pub g_max: f64,
    /// Annualized investment cost in EUR/MW/yr.
    pub inv_cost: f64,
    /// Marginal cost in EUR/MWh keyed by season label.
    pub marg_cost: BTreeMap<String, f64>,
    /// Increase of marginal cost per MW of output (EUR/MWh per MW). Zero for
    /// the constant-cost units of the market model; positive values give a
    /// linear supply curve.
    pub cost_slope: f64,
    /// Seasonal energy limit in MWh keyed by (scenario index, season label).
    /// Missing entries are unlimited.
    pub energy_limits: BTreeMap<(usize, String), f64>,
    pub expandable: bool,
}

impl Generator {
    pub fn new(id: impl Into<String>, node: impl Into<String>, g_max: f64) -> Self {
        Self {
            id: id.into(),
            node: node.into(),
            g_max,
            inv_cost: 0.0,
            marg_cost: BTreeMap::new(),
            cost_slope: 0.0,
            energy_limits: BTreeMap::new(),
            expandable: false,
        }
    }

    /// Sets the same marginal cost for every listed season.
    pub fn with_flat_cost<'a>(mut self, seasons: impl IntoIterator<Item = &'a str>, cost: f64) -> Self {
        for s in seasons {
            self.marg_cost.insert(s.to_string(), cost);
        }
        self
    }

    pub fn energy_limit(&self, scenario: usize, season: &str) -> Option<f64> {
        self.energy_limits.get(&(scenario, season.to_string())).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Renewable {
    pub id: String,
    pub node: String,
    /// Installed capacity in MW.
    pub g_r: f64,
    /// Annualized investment cost in EUR/MW/yr.
    pub inv_cost: f64,
    /// Availability factor in [0, 1] indexed `[scenario][period]`.
    pub profile: Vec<Vec<f64>>,
    pub expandable: bool,
}

/// Linear inverse demand `price = slope * d + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCurve {
    pub slope: f64,
    pub intercept: f64,
}

impl DemandCurve {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn price_at(&self, demand: f64) -> f64 {
        self.slope * demand + self.intercept
    }

    /// Gross utility: the integral of the inverse demand from 0 to `demand`.
    pub fn utility(&self, demand: f64) -> f64 {
        (0.5 * self.slope * demand + self.intercept) * demand
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Season {
    pub label: String,
    pub periods: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub probabilities: Vec<f64>,
    pub seasons: Vec<Season>,
    pub n_periods: usize,
    /// Demand curves indexed `[scenario][node][period]`, nodes in network order.
    pub demand: Vec<Vec<Vec<DemandCurve>>>,
    /// Hours represented by one period when annualizing operating terms.
    pub period_weight: f64,
}

impl ScenarioSet {
    pub fn n_scenarios(&self) -> usize {
        self.probabilities.len()
    }

    /// Season index of each period. Periods not covered by any season map to
    /// `usize::MAX`; [`validate`] reports those.
    pub fn season_of_periods(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_periods];
        for (s, season) in self.seasons.iter().enumerate() {
            for &t in &season.periods {
                if t < self.n_periods {
                    out[t] = s;
                }
            }
        }
        out
    }

    pub fn season_labels(&self) -> impl Iterator<Item = &str> {
        self.seasons.iter().map(|s| s.label.as_str())
    }

    /// Weight `8760 / |T|` that scales a sampled horizon to one year.
    pub fn annual_weight(n_periods: usize) -> f64 {
        8760.0 / n_periods as f64
    }

    /// Copy restricted to the listed scenarios (probabilities kept as-is).
    pub fn subset(&self, scenarios: &[usize]) -> ScenarioSet {
        ScenarioSet {
            probabilities: scenarios.iter().map(|&w| self.probabilities[w]).collect(),
            seasons: self.seasons.clone(),
            n_periods: self.n_periods,
            demand: scenarios.iter().map(|&w| self.demand[w].clone()).collect(),
            period_weight: self.period_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub renewables: Vec<Renewable>,
    node_index: HashMap<String, usize>,
}

impl Network {
    /// Builds the network and fills each node's unit lists.
    pub fn new(
        mut nodes: Vec<Node>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        renewables: Vec<Renewable>,
    ) -> Self {
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            node_index.entry(n.id.clone()).or_insert(i);
        }
        for n in nodes.iter_mut() {
            n.generators.clear();
            n.renewables.clear();
        }
        for g in &generators {
            if let Some(&i) = node_index.get(&g.node) {
                nodes[i].generators.push(g.id.clone());
            }
        }
        for r in &renewables {
            if let Some(&i) = node_index.get(&r.node) {
                nodes[i].renewables.push(r.id.clone());
            }
        }
        Self {
            nodes,
            lines,
            generators,
            renewables,
            node_index,
        }
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn country_of(&self, node: &str) -> Option<&str> {
        self.node_index(node).map(|i| self.nodes[i].country.as_str())
    }

    /// Distinct country codes in sorted order.
    pub fn countries(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.nodes.iter().map(|n| n.country.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    DuplicateId,
    EmptyCountry,
    UnknownReference,
    SelfLoop,
    NegativeCapacity,
    NegativeCost,
    MissingSeasonCost,
    NegativeEnergyLimit,
    ProfileOutOfRange,
    ProfileShape,
    NonNegativeDemandSlope,
    DemandShape,
    NegativeProbability,
    ProbabilitySum,
    SeasonPartition,
    EmptyScenarioSet,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn push(&mut self, kind: ViolationKind, message: String) {
        self.violations.push(Violation { kind, message });
    }
}

/// Checks every structural invariant of the instance. Violations are data:
/// an empty report means the instance is well-formed.
pub fn validate(network: &Network, scenarios: &ScenarioSet) -> ValidationReport {
    let mut rep = ValidationReport::default();
    check_network(network, &mut rep);
    check_scenarios(network, scenarios, &mut rep);
    check_units_against_scenarios(network, scenarios, &mut rep);
    rep
}

fn check_unique<'a>(kind: &str, ids: impl Iterator<Item = &'a str>, rep: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            rep.push(ViolationKind::DuplicateId, format!("duplicate {kind} id '{id}'"));
        }
    }
}

fn check_network(net: &Network, rep: &mut ValidationReport) {
    check_unique("node", net.nodes.iter().map(|n| n.id.as_str()), rep);
    check_unique("line", net.lines.iter().map(|l| l.id.as_str()), rep);
    check_unique("generator", net.generators.iter().map(|g| g.id.as_str()), rep);
    check_unique("renewable", net.renewables.iter().map(|r| r.id.as_str()), rep);

    for n in &net.nodes {
        if n.country.trim().is_empty() {
            rep.push(ViolationKind::EmptyCountry, format!("node '{}' has an empty country", n.id));
        }
    }
    for l in &net.lines {
        for end in [&l.from_node, &l.to_node] {
            if net.node_index(end).is_none() {
                rep.push(
                    ViolationKind::UnknownReference,
                    format!("line '{}' references unknown node '{}'", l.id, end),
                );
            }
        }
        if l.from_node == l.to_node {
            rep.push(ViolationKind::SelfLoop, format!("line '{}' is a self-loop on '{}'", l.id, l.from_node));
        }
        if l.f_max.is_nan() || l.f_max < 0.0 {
            rep.push(ViolationKind::NegativeCapacity, format!("line '{}' has f_max {}", l.id, l.f_max));
        }
        if !l.inv_cost.is_finite() || l.inv_cost < 0.0 {
            rep.push(ViolationKind::NegativeCost, format!("line '{}' has investment cost {}", l.id, l.inv_cost));
        }
    }
    for g in &net.generators {
        if net.node_index(&g.node).is_none() {
            rep.push(
                ViolationKind::UnknownReference,
                format!("generator '{}' references unknown node '{}'", g.id, g.node),
            );
        }
        if g.g_max.is_nan() || g.g_max < 0.0 {
            rep.push(ViolationKind::NegativeCapacity, format!("generator '{}' has g_max {}", g.id, g.g_max));
        }
        if !g.inv_cost.is_finite() || g.inv_cost < 0.0 {
            rep.push(ViolationKind::NegativeCost, format!("generator '{}' has investment cost {}", g.id, g.inv_cost));
        }
        if !g.cost_slope.is_finite() || g.cost_slope < 0.0 {
            rep.push(ViolationKind::NegativeCost, format!("generator '{}' has cost slope {}", g.id, g.cost_slope));
        }
        for (season, c) in &g.marg_cost {
            if !c.is_finite() {
                rep.push(
                    ViolationKind::NonFinite,
                    format!("generator '{}' has non-finite marginal cost in season '{}'", g.id, season),
                );
            }
        }
        for ((w, s), q) in &g.energy_limits {
            if q.is_nan() || *q < 0.0 {
                rep.push(
                    ViolationKind::NegativeEnergyLimit,
                    format!("generator '{}' has energy limit {} in scenario {}, season '{}'", g.id, q, w, s),
                );
            }
        }
    }
    for r in &net.renewables {
        if net.node_index(&r.node).is_none() {
            rep.push(
                ViolationKind::UnknownReference,
                format!("renewable '{}' references unknown node '{}'", r.id, r.node),
            );
        }
        if r.g_r.is_nan() || r.g_r < 0.0 || r.g_r.is_infinite() {
            rep.push(ViolationKind::NegativeCapacity, format!("renewable '{}' has capacity {}", r.id, r.g_r));
        }
        if !r.inv_cost.is_finite() || r.inv_cost < 0.0 {
            rep.push(ViolationKind::NegativeCost, format!("renewable '{}' has investment cost {}", r.id, r.inv_cost));
        }
        for (w, row) in r.profile.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    rep.push(
                        ViolationKind::ProfileOutOfRange,
                        format!("renewable '{}' profile {} at scenario {}, period {} is outside [0,1]", r.id, v, w, t),
                    );
                }
            }
        }
    }
}

fn check_scenarios(net: &Network, sc: &ScenarioSet, rep: &mut ValidationReport) {
    if sc.probabilities.is_empty() {
        rep.push(ViolationKind::EmptyScenarioSet, "scenario set is empty".to_string());
    }
    let mut sum = 0.0;
    for (w, &p) in sc.probabilities.iter().enumerate() {
        if p.is_nan() || p < 0.0 {
            rep.push(ViolationKind::NegativeProbability, format!("scenario {w} has probability {p}"));
        }
        sum += p;
    }
    if !sc.probabilities.is_empty() && (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
        rep.push(ViolationKind::ProbabilitySum, format!("probabilities sum ≠ 1 (sum = {sum})"));
    }
    if !sc.period_weight.is_finite() || sc.period_weight <= 0.0 {
        rep.push(ViolationKind::NonFinite, format!("period weight {} must be positive", sc.period_weight));
    }

    let mut covered = vec![0usize; sc.n_periods];
    let mut labels = BTreeSet::new();
    for s in &sc.seasons {
        if !labels.insert(s.label.as_str()) {
            rep.push(ViolationKind::SeasonPartition, format!("season '{}' listed twice", s.label));
        }
        for &t in &s.periods {
            if t >= sc.n_periods {
                rep.push(
                    ViolationKind::SeasonPartition,
                    format!("season '{}' lists period {} outside 0..{}", s.label, t, sc.n_periods),
                );
            } else {
                covered[t] += 1;
            }
        }
    }
    for (t, &c) in covered.iter().enumerate() {
        if c != 1 {
            rep.push(
                ViolationKind::SeasonPartition,
                format!("period {t} is covered by {c} seasons (seasons must partition the periods)"),
            );
        }
    }

    if sc.demand.len() != sc.n_scenarios() {
        rep.push(
            ViolationKind::DemandShape,
            format!("demand has {} scenarios, expected {}", sc.demand.len(), sc.n_scenarios()),
        );
    }
    for (w, per_node) in sc.demand.iter().enumerate() {
        if per_node.len() != net.nodes.len() {
            rep.push(
                ViolationKind::DemandShape,
                format!("scenario {} has demand for {} nodes, expected {}", w, per_node.len(), net.nodes.len()),
            );
        }
        for (n, series) in per_node.iter().enumerate() {
            if series.len() != sc.n_periods {
                rep.push(
                    ViolationKind::DemandShape,
                    format!("scenario {} node {} has {} periods, expected {}", w, n, series.len(), sc.n_periods),
                );
            }
            for (t, curve) in series.iter().enumerate() {
                if !(curve.slope < 0.0) || !curve.slope.is_finite() {
                    let id = net.nodes.get(n).map(|x| x.id.as_str()).unwrap_or("?");
                    rep.push(
                        ViolationKind::NonNegativeDemandSlope,
                        format!("demand slope {} at scenario {}, node '{}', period {} must be < 0", curve.slope, w, id, t),
                    );
                }
                if !curve.intercept.is_finite() {
                    rep.push(
                        ViolationKind::NonFinite,
                        format!("demand intercept at scenario {w}, node {n}, period {t} is not finite"),
                    );
                }
            }
        }
    }
}

fn check_units_against_scenarios(net: &Network, sc: &ScenarioSet, rep: &mut ValidationReport) {
    for g in &net.generators {
        for s in sc.season_labels() {
            if !g.marg_cost.contains_key(s) {
                rep.push(
                    ViolationKind::MissingSeasonCost,
                    format!("generator '{}' has no marginal cost for season '{}'", g.id, s),
                );
            }
        }
        for (w, s) in g.energy_limits.keys() {
            if *w >= sc.n_scenarios() || !sc.season_labels().any(|l| l == s) {
                rep.push(
                    ViolationKind::UnknownReference,
                    format!("generator '{}' has an energy limit for unknown scenario {} / season '{}'", g.id, w, s),
                );
            }
        }
    }
    for r in &net.renewables {
        let shape_ok = r.profile.len() == sc.n_scenarios()
            && r.profile.iter().all(|row| row.len() == sc.n_periods);
        if !shape_ok {
            rep.push(
                ViolationKind::ProfileShape,
                format!(
                    "renewable '{}' profile must have {} scenarios x {} periods",
                    r.id,
                    sc.n_scenarios(),
                    sc.n_periods
                ),
            );
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Supply node 1 (S1: q = pi), demand nodes 2 and 3 (D: d = 6 - pi),
    /// an unconstrained 1-2 link and an expandable, zero-cost 2-3 link.
    pub(crate) fn three_node() -> (Network, ScenarioSet) {
        let nodes = vec![Node::new("n1", "C1"), Node::new("n2", "C2"), Node::new("n3", "C3")];
        let lines = vec![
            Line {
                id: "l12".into(),
                from_node: "n1".into(),
                to_node: "n2".into(),
                f_max: f64::INFINITY,
                inv_cost: 0.0,
                expandable: false,
            },
            Line {
                id: "l23".into(),
                from_node: "n2".into(),
                to_node: "n3".into(),
                f_max: 0.0,
                inv_cost: 0.0,
                expandable: true,
            },
        ];
        let mut g = Generator::new("s1", "n1", f64::INFINITY).with_flat_cost(["all"], 0.0);
        g.cost_slope = 1.0;
        let net = Network::new(nodes, lines, vec![g], vec![]);
        let sc = ScenarioSet {
            probabilities: vec![1.0],
            seasons: vec![Season { label: "all".into(), periods: vec![0] }],
            n_periods: 1,
            demand: vec![vec![
                vec![DemandCurve::new(-1.0, 0.0)],
                vec![DemandCurve::new(-1.0, 6.0)],
                vec![DemandCurve::new(-1.0, 6.0)],
            ]],
            period_weight: 1.0,
        };
        (net, sc)
    }

    #[test]
    fn three_node_is_well_formed() {
        let (net, sc) = three_node();
        let rep = validate(&net, &sc);
        assert!(rep.is_ok(), "{:?}", rep.violations);
        assert_eq!(net.nodes[0].generators, vec!["s1".to_string()]);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let (net, mut sc) = three_node();
        sc.probabilities = vec![0.6, 0.6];
        sc.demand = vec![sc.demand[0].clone(), sc.demand[0].clone()];
        let rep = validate(&net, &sc);
        assert!(rep.has(ViolationKind::ProbabilitySum));
        assert!(rep.violations.iter().any(|v| v.message.contains("probabilities sum ≠ 1")));
    }

    #[test]
    fn self_loop_is_reported() {
        let (mut net, sc) = three_node();
        net.lines[0].to_node = "n1".into();
        let rep = validate(&net, &sc);
        assert!(rep.has(ViolationKind::SelfLoop));
        assert!(rep.violations.iter().any(|v| v.message.contains("self-loop")));
    }

    #[test]
    fn unknown_references_and_bad_curves() {
        let (mut net, mut sc) = three_node();
        net.generators[0].node = "nx".into();
        sc.demand[0][1][0].slope = 0.0;
        let net = Network::new(net.nodes, net.lines, net.generators, net.renewables);
        let rep = validate(&net, &sc);
        assert!(rep.has(ViolationKind::UnknownReference));
        assert!(rep.has(ViolationKind::NonNegativeDemandSlope));
    }

    #[test]
    fn seasons_must_partition_periods() {
        let (net, mut sc) = three_node();
        sc.n_periods = 2;
        for row in sc.demand[0].iter_mut() {
            row.push(row[0]);
        }
        let rep = validate(&net, &sc);
        assert!(rep.has(ViolationKind::SeasonPartition));
        sc.seasons[0].periods = vec![0, 1, 1];
        assert!(validate(&net, &sc).has(ViolationKind::SeasonPartition));
        sc.seasons[0].periods = vec![0, 1];
        assert!(validate(&net, &sc).is_ok());
    }

    #[test]
    fn missing_season_cost_and_profile_range() {
        let (mut net, sc) = three_node();
        net.generators[0].marg_cost.clear();
        net.renewables.push(Renewable {
            id: "w".into(),
            node: "n2".into(),
            g_r: 1.0,
            inv_cost: 0.0,
            profile: vec![vec![1.5]],
            expandable: false,
        });
        let rep = validate(&net, &sc);
        assert!(rep.has(ViolationKind::MissingSeasonCost));
        assert!(rep.has(ViolationKind::ProfileOutOfRange));
    }

    #[test]
    fn validate_is_idempotent() {
        let (net, mut sc) = three_node();
        sc.probabilities = vec![0.5];
        let a = validate(&net, &sc);
        let b = validate(&net, &sc);
        assert_eq!(a, b);
    }
}

//! Social planner QP: assembly, solution, KKT verification and export.
//!
//! The planner maximizes expected consumer utility minus operating cost minus
//! investment cost over demand `d`, generation `q`, flows `f` and expansions
//! `y`, `y_r`, `x`. Operating terms of scenario ω carry the weight
//! `P_ω · period_weight`, so prices are market-clearing duals divided by that
//! weight and come out in EUR/MWh.
//!
//! Scenarios with zero probability carry no weight in the joint problem, so
//! they are left out of it and re-dispatched afterwards with the investments
//! fixed.

pub(crate) mod export;
mod kkt;
mod solve;

pub use export::{solution_records, read_prices_csv, read_solution_csv, write_prices_csv, write_solution_csv, SolutionRecord};
pub use kkt::{verify_kkt, ActorResiduals, KktReport};
pub use solve::{congestion_rent, solve, CongestionRent, DispatchSolution, ToleranceSet};

use crate::error::{Error, Result};
use crate::model::{Network, ScenarioSet};
use crate::qp::{DiagQp, QpRow, Sense};

/// Default upper bound on a single expansion variable, MW.
pub const DEFAULT_MAX_EXPANSION: f64 = 1e5;

/// Which expandable entities may receive new capacity.
///
/// An entry only has effect when the entity is flagged expandable in the
/// network; everything else is held at its installed capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionMask {
    pub lines: Vec<bool>,
    pub generators: Vec<bool>,
    pub renewables: Vec<bool>,
    /// Upper bound on every expansion variable, MW. Keeps zero-cost
    /// expansions bounded.
    pub max_expansion: f64,
}

impl ExpansionMask {
    pub fn allow_all(network: &Network) -> Self {
        Self {
            lines: vec![true; network.lines.len()],
            generators: vec![true; network.generators.len()],
            renewables: vec![true; network.renewables.len()],
            max_expansion: DEFAULT_MAX_EXPANSION,
        }
    }

    pub fn deny_all(network: &Network) -> Self {
        Self {
            lines: vec![false; network.lines.len()],
            generators: vec![false; network.generators.len()],
            renewables: vec![false; network.renewables.len()],
            max_expansion: DEFAULT_MAX_EXPANSION,
        }
    }

    pub fn set_line(&mut self, network: &Network, id: &str, allow: bool) -> Result<()> {
        let l = network
            .line_index(id)
            .ok_or_else(|| Error::Config(format!("unknown line id '{id}'")))?;
        self.lines[l] = allow;
        Ok(())
    }

    pub fn line_open(&self, network: &Network, l: usize) -> bool {
        self.lines[l] && network.lines[l].expandable
    }

    pub fn generator_open(&self, network: &Network, g: usize) -> bool {
        self.generators[g] && network.generators[g].expandable
    }

    pub fn renewable_open(&self, network: &Network, r: usize) -> bool {
        self.renewables[r] && network.renewables[r].expandable
    }

    fn check(&self, network: &Network) -> Result<()> {
        if self.lines.len() != network.lines.len()
            || self.generators.len() != network.generators.len()
            || self.renewables.len() != network.renewables.len()
        {
            return Err(Error::Dimension("expansion mask does not match the network".into()));
        }
        if !(self.max_expansion >= 0.0) {
            return Err(Error::Domain("max_expansion must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Expansion decisions, MW, in network order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Investments {
    pub y: Vec<f64>,
    pub y_r: Vec<f64>,
    pub x: Vec<f64>,
}

impl Investments {
    pub fn zero(network: &Network) -> Self {
        Self {
            y: vec![0.0; network.generators.len()],
            y_r: vec![0.0; network.renewables.len()],
            x: vec![0.0; network.lines.len()],
        }
    }
}

/// Column layout of the QP. Operating blocks are indexed by local scenario
/// (position in [`QpProblem::scenarios`]).
#[derive(Debug, Clone, PartialEq)]
pub struct VarIndex {
    pub n_scenarios: usize,
    pub n_nodes: usize,
    pub n_generators: usize,
    pub n_lines: usize,
    pub n_periods: usize,
    q_offset: usize,
    f_offset: usize,
    /// Expansion column per generator, renewable and line, if any.
    pub y_col: Vec<Option<usize>>,
    pub yr_col: Vec<Option<usize>>,
    pub x_col: Vec<Option<usize>>,
    pub n_vars: usize,
}

impl VarIndex {
    pub fn d(&self, w: usize, n: usize, t: usize) -> usize {
        (w * self.n_nodes + n) * self.n_periods + t
    }

    pub fn q(&self, w: usize, g: usize, t: usize) -> usize {
        self.q_offset + (w * self.n_generators + g) * self.n_periods + t
    }

    pub fn f(&self, w: usize, l: usize, t: usize) -> usize {
        self.f_offset + (w * self.n_lines + l) * self.n_periods + t
    }

    pub fn n_operating(&self) -> usize {
        self.f_offset + self.n_scenarios * self.n_lines * self.n_periods
    }
}

/// Origin of a constraint row. Nonnegativity and fixed capacities are
/// variable bounds rather than rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// `q - y <= g_max`
    Capacity { scenario: usize, generator: usize, period: usize },
    /// `sum_{t in season} q <= q_max`
    Energy { scenario: usize, generator: usize, season: usize },
    /// `d + sum_l A f - sum_g q - sum_r I y_r = sum_r I g_r`
    MarketClearing { scenario: usize, node: usize, period: usize },
    /// `f - x <= f_max`
    FlowUpper { scenario: usize, line: usize, period: usize },
    /// `-f - x <= f_max`
    FlowLower { scenario: usize, line: usize, period: usize },
}

/// Assembled planner problem in minimization form (negated welfare).
#[derive(Debug, Clone)]
pub struct QpProblem<'a> {
    pub network: &'a Network,
    pub scenarios: &'a ScenarioSet,
    pub mask: ExpansionMask,
    /// Global scenario index of each local scenario block.
    pub scenario_ids: Vec<usize>,
    /// Objective weight `P_ω · period_weight` of each local block.
    pub weights: Vec<f64>,
    /// Capacity already committed outside the QP columns.
    pub fixed: Investments,
    pub index: VarIndex,
    pub qp: DiagQp,
    pub row_tags: Vec<RowTag>,
}

impl QpProblem<'_> {
    /// The welfare objective is concave iff every Hessian entry of the
    /// minimization form is nonnegative; demand entries must be strictly
    /// positive.
    pub fn is_concave(&self) -> bool {
        let nd = self.index.n_scenarios * self.index.n_nodes * self.index.n_periods;
        self.qp.hess.iter().all(|&h| h >= 0.0 && h.is_finite()) && self.qp.hess[..nd].iter().all(|&h| h > 0.0)
    }

    pub fn count_rows(&self, pred: impl Fn(&RowTag) -> bool) -> usize {
        self.row_tags.iter().filter(|t| pred(t)).count()
    }
}

/// Builds the planner QP for every scenario with positive probability.
pub fn assemble<'a>(network: &'a Network, scenarios: &'a ScenarioSet, mask: &ExpansionMask) -> Result<QpProblem<'a>> {
    mask.check(network)?;
    let ids: Vec<usize> = (0..scenarios.n_scenarios())
        .filter(|&w| scenarios.probabilities[w] > 0.0)
        .collect();
    if ids.is_empty() {
        return Err(Error::Domain("scenario set has no scenario with positive probability".into()));
    }
    let weights = ids
        .iter()
        .map(|&w| scenarios.probabilities[w] * scenarios.period_weight)
        .collect();
    build(network, scenarios, mask.clone(), ids, weights, Investments::zero(network), true)
}

/// Dispatch-only problem for a single scenario with investments fixed and
/// unit probability.
pub(crate) fn assemble_dispatch<'a>(
    network: &'a Network,
    scenarios: &'a ScenarioSet,
    scenario: usize,
    fixed: &Investments,
) -> Result<QpProblem<'a>> {
    build(
        network,
        scenarios,
        ExpansionMask::deny_all(network),
        vec![scenario],
        vec![scenarios.period_weight],
        fixed.clone(),
        false,
    )
}

fn build<'a>(
    network: &'a Network,
    scenarios: &'a ScenarioSet,
    mask: ExpansionMask,
    scenario_ids: Vec<usize>,
    weights: Vec<f64>,
    fixed: Investments,
    with_cols: bool,
) -> Result<QpProblem<'a>> {
    if scenarios.n_scenarios() == 0 || scenarios.n_periods == 0 {
        return Err(Error::Domain("empty scenario set".into()));
    }
    let n_sc = scenario_ids.len();
    let nn = network.nodes.len();
    let ng = network.generators.len();
    let nl = network.lines.len();
    let nt = scenarios.n_periods;
    let season_of = scenarios.season_of_periods();

    let q_offset = n_sc * nn * nt;
    let f_offset = q_offset + n_sc * ng * nt;
    let mut next = f_offset + n_sc * nl * nt;
    let mut alloc = |present: bool| {
        present.then(|| {
            next += 1;
            next - 1
        })
    };
    // Columns exist for every expandable entity in a planning problem; a
    // fixed-investment dispatch has none.
    let y_col: Vec<_> = network.generators.iter().map(|g| alloc(with_cols && g.expandable)).collect();
    let yr_col: Vec<_> = network.renewables.iter().map(|r| alloc(with_cols && r.expandable)).collect();
    let x_col: Vec<_> = network.lines.iter().map(|l| alloc(with_cols && l.expandable)).collect();
    let n_vars = next;
    let index = VarIndex {
        n_scenarios: n_sc,
        n_nodes: nn,
        n_generators: ng,
        n_lines: nl,
        n_periods: nt,
        q_offset,
        f_offset,
        y_col,
        yr_col,
        x_col,
        n_vars,
    };

    let mut hess = vec![0.0; n_vars];
    let mut lin = vec![0.0; n_vars];
    let mut lower = vec![0.0; n_vars];
    let mut upper = vec![f64::INFINITY; n_vars];
    let mut rows = Vec::new();
    let mut tags = Vec::new();

    let open_gen = |g: usize| index.y_col[g].is_some() && mask.generator_open(network, g);
    let open_ren = |r: usize| index.yr_col[r].is_some() && mask.renewable_open(network, r);
    let open_line = |l: usize| index.x_col[l].is_some() && mask.line_open(network, l);

    for (g, gen) in network.generators.iter().enumerate() {
        if let Some(c) = index.y_col[g] {
            lin[c] = gen.inv_cost;
            upper[c] = if open_gen(g) { mask.max_expansion } else { 0.0 };
        }
    }
    for (r, ren) in network.renewables.iter().enumerate() {
        if let Some(c) = index.yr_col[r] {
            lin[c] = ren.inv_cost;
            upper[c] = if open_ren(r) { mask.max_expansion } else { 0.0 };
        }
    }
    for (l, line) in network.lines.iter().enumerate() {
        if let Some(c) = index.x_col[l] {
            lin[c] = line.inv_cost;
            upper[c] = if open_line(l) { mask.max_expansion } else { 0.0 };
        }
    }

    for (w, &gw) in scenario_ids.iter().enumerate() {
        let weight = weights[w];
        for n in 0..nn {
            for t in 0..nt {
                let c = scenarios.demand[gw][n][t];
                let j = index.d(w, n, t);
                hess[j] = -weight * c.slope;
                lin[j] = -weight * c.intercept;
            }
        }
        for (g, gen) in network.generators.iter().enumerate() {
            let cap = gen.g_max + fixed.y[g];
            for t in 0..nt {
                let j = index.q(w, g, t);
                let label = &scenarios.seasons[season_of[t]].label;
                let cost = *gen
                    .marg_cost
                    .get(label)
                    .ok_or_else(|| Error::Domain(format!("generator '{}' has no cost for season '{label}'", gen.id)))?;
                hess[j] = weight * gen.cost_slope;
                lin[j] = weight * cost;
                if open_gen(g) {
                    if cap.is_finite() {
                        rows.push(QpRow {
                            coeffs: vec![(j, 1.0), (index.y_col[g].unwrap(), -1.0)],
                            sense: Sense::Le,
                            rhs: cap,
                        });
                        tags.push(RowTag::Capacity {
                            scenario: w,
                            generator: g,
                            period: t,
                        });
                    }
                } else {
                    upper[j] = cap;
                }
            }
            for (s, season) in scenarios.seasons.iter().enumerate() {
                if let Some(limit) = gen.energy_limit(gw, &season.label) {
                    rows.push(QpRow {
                        coeffs: season.periods.iter().map(|&t| (index.q(w, g, t), 1.0)).collect(),
                        sense: Sense::Le,
                        rhs: limit,
                    });
                    tags.push(RowTag::Energy {
                        scenario: w,
                        generator: g,
                        season: s,
                    });
                }
            }
        }
        for (l, line) in network.lines.iter().enumerate() {
            let cap = line.f_max + fixed.x[l];
            for t in 0..nt {
                let j = index.f(w, l, t);
                if open_line(l) && cap.is_finite() {
                    let x = index.x_col[l].unwrap();
                    lower[j] = f64::NEG_INFINITY;
                    rows.push(QpRow {
                        coeffs: vec![(j, 1.0), (x, -1.0)],
                        sense: Sense::Le,
                        rhs: cap,
                    });
                    tags.push(RowTag::FlowUpper {
                        scenario: w,
                        line: l,
                        period: t,
                    });
                    rows.push(QpRow {
                        coeffs: vec![(j, -1.0), (x, -1.0)],
                        sense: Sense::Le,
                        rhs: cap,
                    });
                    tags.push(RowTag::FlowLower {
                        scenario: w,
                        line: l,
                        period: t,
                    });
                } else {
                    lower[j] = -cap;
                    upper[j] = cap;
                }
            }
        }
        for n in 0..nn {
            let node_id = &network.nodes[n].id;
            for t in 0..nt {
                let mut coeffs = vec![(index.d(w, n, t), 1.0)];
                let mut rhs = 0.0;
                for (l, line) in network.lines.iter().enumerate() {
                    let a = line.incidence(node_id);
                    if a != 0.0 {
                        coeffs.push((index.f(w, l, t), a));
                    }
                }
                for (g, gen) in network.generators.iter().enumerate() {
                    if &gen.node == node_id {
                        coeffs.push((index.q(w, g, t), -1.0));
                    }
                }
                for (r, ren) in network.renewables.iter().enumerate() {
                    if &ren.node == node_id {
                        let factor = ren.profile[gw][t];
                        rhs += (ren.g_r + fixed.y_r[r]) * factor;
                        if let Some(c) = index.yr_col[r] {
                            coeffs.push((c, -factor));
                        }
                    }
                }
                rows.push(QpRow {
                    coeffs,
                    sense: Sense::Eq,
                    rhs,
                });
                tags.push(RowTag::MarketClearing {
                    scenario: w,
                    node: n,
                    period: t,
                });
            }
        }
    }

    Ok(QpProblem {
        network,
        scenarios,
        mask,
        scenario_ids,
        weights,
        fixed,
        index,
        qp: DiagQp {
            hess,
            lin,
            rows,
            lower,
            upper,
        },
        row_tags: tags,
    })
}

#[cfg(test)]
mod tests;

use crate::error::{Error, Result};
use crate::model::{Network, ScenarioSet};
use crate::qp::{self, IpmSettings};

use super::{assemble_dispatch, verify_kkt, ExpansionMask, Investments, QpProblem, RowTag};

/// Solver and acceptance tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSet {
    /// Maximum relative stationarity / complementarity residual accepted.
    pub kkt: f64,
    /// Maximum primal infeasibility relative to the quantity scale.
    pub feasibility: f64,
    /// Interior-point stopping tolerance on the scaled problem.
    pub ipm: f64,
    pub max_iter: usize,
    /// Randomized interior-point start; `None` uses the default start.
    pub start_seed: Option<u64>,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            kkt: 1e-6,
            feasibility: 1e-8,
            ipm: 1e-10,
            max_iter: 200,
            start_seed: None,
        }
    }
}

impl ToleranceSet {
    fn ipm_settings(&self) -> IpmSettings {
        IpmSettings {
            tol: self.ipm,
            max_iter: self.max_iter,
            start_seed: self.start_seed,
        }
    }
}

/// Primal-dual equilibrium of the planner problem. Operating arrays are
/// indexed `[scenario][entity][period]` in network order; all duals are in
/// per-scenario units (EUR/MWh, or EUR/MWh-per-season for energy limits).
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchSolution {
    pub probabilities: Vec<f64>,
    pub period_weight: f64,
    pub q: Vec<Vec<Vec<f64>>>,
    pub d: Vec<Vec<Vec<f64>>>,
    pub f: Vec<Vec<Vec<f64>>>,
    pub y: Vec<f64>,
    pub y_r: Vec<f64>,
    pub x: Vec<f64>,
    /// Nodal price `[scenario][node][period]`, EUR/MWh.
    pub price: Vec<Vec<Vec<f64>>>,
    /// Multiplier of `q <= g_max + y`, nonnegative.
    pub capacity_dual: Vec<Vec<Vec<f64>>>,
    /// Multiplier of the seasonal energy limit `[scenario][generator][season]`.
    pub energy_dual: Vec<Vec<Vec<f64>>>,
    /// Multipliers of `f <= f_max + x` and `-f <= f_max + x`.
    pub flow_dual_upper: Vec<Vec<Vec<f64>>>,
    pub flow_dual_lower: Vec<Vec<Vec<f64>>>,
    pub mask: ExpansionMask,
    /// Expected net total welfare, EUR/yr.
    pub objective: f64,
    /// Largest relative KKT residual over all actors.
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl DispatchSolution {
    pub fn n_scenarios(&self) -> usize {
        self.probabilities.len()
    }

    pub fn n_periods(&self) -> usize {
        self.price.first().and_then(|p| p.first()).map_or(0, Vec::len)
    }

    pub fn investments(&self) -> Investments {
        Investments {
            y: self.y.clone(),
            y_r: self.y_r.clone(),
            x: self.x.clone(),
        }
    }

    fn empty(network: &Network, scenarios: &ScenarioSet, mask: ExpansionMask) -> Self {
        let ns = scenarios.n_scenarios();
        let nt = scenarios.n_periods;
        let grid = |k: usize, m: usize| vec![vec![vec![0.0; m]; k]; ns];
        Self {
            probabilities: scenarios.probabilities.clone(),
            period_weight: scenarios.period_weight,
            q: grid(network.generators.len(), nt),
            d: grid(network.nodes.len(), nt),
            f: grid(network.lines.len(), nt),
            y: vec![0.0; network.generators.len()],
            y_r: vec![0.0; network.renewables.len()],
            x: vec![0.0; network.lines.len()],
            price: grid(network.nodes.len(), nt),
            capacity_dual: grid(network.generators.len(), nt),
            energy_dual: grid(network.generators.len(), scenarios.seasons.len()),
            flow_dual_upper: grid(network.lines.len(), nt),
            flow_dual_lower: grid(network.lines.len(), nt),
            mask,
            objective: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
        }
    }

    /// Expected net total welfare recomputed from the primal quantities.
    pub fn welfare(&self, network: &Network, scenarios: &ScenarioSet) -> f64 {
        let season_of = scenarios.season_of_periods();
        let mut total = 0.0;
        for w in 0..self.n_scenarios() {
            let p = self.probabilities[w];
            if p == 0.0 {
                continue;
            }
            let mut op = 0.0;
            for t in 0..scenarios.n_periods {
                for n in 0..network.nodes.len() {
                    op += scenarios.demand[w][n][t].utility(self.d[w][n][t]);
                }
                let label = &scenarios.seasons[season_of[t]].label;
                for (g, gen) in network.generators.iter().enumerate() {
                    let q = self.q[w][g][t];
                    op -= (gen.marg_cost[label] + 0.5 * gen.cost_slope * q) * q;
                }
            }
            total += p * self.period_weight * op;
        }
        total - investment_cost(network, &self.investments())
    }
}

pub(crate) fn investment_cost(network: &Network, inv: &Investments) -> f64 {
    let g: f64 = network.generators.iter().zip(&inv.y).map(|(g, y)| g.inv_cost * y).sum();
    let r: f64 = network.renewables.iter().zip(&inv.y_r).map(|(r, y)| r.inv_cost * y).sum();
    let l: f64 = network.lines.iter().zip(&inv.x).map(|(l, x)| l.inv_cost * x).sum();
    g + r + l
}

/// Solves the planner problem and verifies the resulting equilibrium.
///
/// Zero-cost expansions are indeterminate above the capacity actually used,
/// so they are trimmed to the smallest optimal value before scenarios with
/// zero probability are dispatched against the final investments.
pub fn solve(problem: &QpProblem, tol: &ToleranceSet) -> Result<DispatchSolution> {
    if !problem.is_concave() {
        return Err(Error::Domain("planner objective is not concave".into()));
    }
    let network = problem.network;
    let scenarios = problem.scenarios;
    let ipm = qp::solve(&problem.qp, &tol.ipm_settings())?;

    let mut sol = DispatchSolution::empty(network, scenarios, problem.mask.clone());
    sol.iterations = ipm.iterations;
    scatter(problem, &ipm, &mut sol);
    trim_zero_cost(problem, &mut sol);

    for w in 0..scenarios.n_scenarios() {
        if problem.scenario_ids.contains(&w) {
            continue;
        }
        let sub = assemble_dispatch(network, scenarios, w, &sol.investments())?;
        let ipm = qp::solve(&sub.qp, &tol.ipm_settings())?;
        let mut part = DispatchSolution::empty(network, scenarios, sol.mask.clone());
        scatter(&sub, &ipm, &mut part);
        sol.iterations += ipm.iterations;
        sol.q[w] = std::mem::take(&mut part.q[w]);
        sol.d[w] = std::mem::take(&mut part.d[w]);
        sol.f[w] = std::mem::take(&mut part.f[w]);
        sol.price[w] = std::mem::take(&mut part.price[w]);
        sol.capacity_dual[w] = std::mem::take(&mut part.capacity_dual[w]);
        sol.energy_dual[w] = std::mem::take(&mut part.energy_dual[w]);
        sol.flow_dual_upper[w] = std::mem::take(&mut part.flow_dual_upper[w]);
        sol.flow_dual_lower[w] = std::mem::take(&mut part.flow_dual_lower[w]);
    }

    sol.objective = sol.welfare(network, scenarios);
    let report = verify_kkt(network, scenarios, &sol)?;
    sol.kkt_residual = report.max_relative();
    let stat = report.max_stationarity_relative();
    let comp = report.max_complementarity();
    let primal = report.max_primal_relative();
    if stat > tol.kkt || comp > tol.kkt || primal > tol.feasibility.max(tol.kkt) {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            primal,
            dual: stat,
            gap: comp,
        });
    }
    Ok(sol)
}

/// Copies the QP solution of `problem` into `sol`, converting duals to
/// per-scenario units.
fn scatter(problem: &QpProblem, ipm: &qp::IpmSolution, sol: &mut DispatchSolution) {
    let ix = &problem.index;
    for (w, &gw) in problem.scenario_ids.iter().enumerate() {
        let wt = problem.weights[w];
        for n in 0..ix.n_nodes {
            for t in 0..ix.n_periods {
                sol.d[gw][n][t] = ipm.x[ix.d(w, n, t)];
            }
        }
        for g in 0..ix.n_generators {
            for t in 0..ix.n_periods {
                let j = ix.q(w, g, t);
                sol.q[gw][g][t] = ipm.x[j];
                sol.capacity_dual[gw][g][t] = ipm.upper_duals[j] / wt;
            }
        }
        for l in 0..ix.n_lines {
            for t in 0..ix.n_periods {
                let j = ix.f(w, l, t);
                sol.f[gw][l][t] = ipm.x[j];
                sol.flow_dual_upper[gw][l][t] = ipm.upper_duals[j] / wt;
                sol.flow_dual_lower[gw][l][t] = ipm.lower_duals[j] / wt;
            }
        }
    }
    for (i, tag) in problem.row_tags.iter().enumerate() {
        let lam = ipm.row_duals[i];
        match *tag {
            RowTag::MarketClearing { scenario, node, period } => {
                let gw = problem.scenario_ids[scenario];
                sol.price[gw][node][period] = -lam / problem.weights[scenario];
            }
            RowTag::Capacity {
                scenario,
                generator,
                period,
            } => {
                let gw = problem.scenario_ids[scenario];
                sol.capacity_dual[gw][generator][period] = -lam / problem.weights[scenario];
            }
            RowTag::Energy {
                scenario,
                generator,
                season,
            } => {
                let gw = problem.scenario_ids[scenario];
                sol.energy_dual[gw][generator][season] = -lam / problem.weights[scenario];
            }
            RowTag::FlowUpper { scenario, line, period } => {
                let gw = problem.scenario_ids[scenario];
                sol.flow_dual_upper[gw][line][period] = -lam / problem.weights[scenario];
            }
            RowTag::FlowLower { scenario, line, period } => {
                let gw = problem.scenario_ids[scenario];
                sol.flow_dual_lower[gw][line][period] = -lam / problem.weights[scenario];
            }
        }
    }
    for (g, c) in ix.y_col.iter().enumerate() {
        sol.y[g] = c.map_or(problem.fixed.y[g], |c| ipm.x[c]);
    }
    for (r, c) in ix.yr_col.iter().enumerate() {
        sol.y_r[r] = c.map_or(problem.fixed.y_r[r], |c| ipm.x[c]);
    }
    for (l, c) in ix.x_col.iter().enumerate() {
        sol.x[l] = c.map_or(problem.fixed.x[l], |c| ipm.x[c]);
    }
}

fn trim_zero_cost(problem: &QpProblem, sol: &mut DispatchSolution) {
    let network = problem.network;
    for (l, line) in network.lines.iter().enumerate() {
        if problem.mask.line_open(network, l) && line.inv_cost == 0.0 && line.f_max.is_finite() {
            let used = problem
                .scenario_ids
                .iter()
                .flat_map(|&w| sol.f[w][l].iter())
                .fold(0.0f64, |m, f| m.max(f.abs()));
            sol.x[l] = (used - line.f_max).max(0.0).min(sol.x[l]);
        }
    }
    for (g, gen) in network.generators.iter().enumerate() {
        if problem.mask.generator_open(network, g) && gen.inv_cost == 0.0 && gen.g_max.is_finite() {
            let used = problem
                .scenario_ids
                .iter()
                .flat_map(|&w| sol.q[w][g].iter())
                .fold(0.0f64, |m, q| m.max(*q));
            sol.y[g] = (used - gen.g_max).max(0.0).min(sol.y[g]);
        }
    }
}

/// Congestion rent of one line, EUR/yr.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionRent {
    pub per_scenario: Vec<f64>,
    pub expected: f64,
}

/// `period_weight · Σ_t (π_to − π_from) f` per scenario, and its expectation.
pub fn congestion_rent(network: &Network, solution: &DispatchSolution, line_id: &str) -> Result<CongestionRent> {
    let l = network
        .line_index(line_id)
        .ok_or_else(|| Error::Config(format!("unknown line id '{line_id}'")))?;
    let line = &network.lines[l];
    let from = network.node_index(&line.from_node).expect("validated network");
    let to = network.node_index(&line.to_node).expect("validated network");
    let per_scenario: Vec<f64> = (0..solution.n_scenarios())
        .map(|w| {
            let p = &solution.price[w];
            solution.period_weight
                * solution.f[w][l]
                    .iter()
                    .enumerate()
                    .map(|(t, f)| (p[to][t] - p[from][t]) * f)
                    .sum::<f64>()
        })
        .collect();
    let expected = per_scenario.iter().zip(&solution.probabilities).map(|(c, p)| c * p).sum();
    Ok(CongestionRent { per_scenario, expected })
}

//! Independent check of the optimality conditions of every market actor.
//!
//! Stationarity residuals are in EUR/MWh (investment conditions are divided
//! by the hours of one scenario so they share that unit), primal residuals in
//! MW and complementarity residuals are dimensionless natural residuals
//! `min(slack / quantity_scale, multiplier / price_scale)`.

use crate::error::{Error, Result};
use crate::model::{Network, ScenarioSet};

use super::DispatchSolution;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActorResiduals {
    pub stationarity: f64,
    pub complementarity: f64,
    pub primal: f64,
}

impl ActorResiduals {
    fn stat(&mut self, v: f64) {
        self.stationarity = self.stationarity.max(v);
    }
    fn comp(&mut self, v: f64) {
        self.complementarity = self.complementarity.max(v);
    }
    fn primal(&mut self, v: f64) {
        self.primal = self.primal.max(v);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    pub generator: ActorResiduals,
    pub renewable: ActorResiduals,
    pub consumer: ActorResiduals,
    pub tso: ActorResiduals,
    pub market_clearing: ActorResiduals,
    /// Largest price-like coefficient magnitude, at least 1.
    pub price_scale: f64,
    /// Largest quantity-like coefficient magnitude, at least 1.
    pub quantity_scale: f64,
}

impl KktReport {
    pub fn actors(&self) -> [(&'static str, &ActorResiduals); 5] {
        [
            ("generator", &self.generator),
            ("renewable", &self.renewable),
            ("consumer", &self.consumer),
            ("tso", &self.tso),
            ("market_clearing", &self.market_clearing),
        ]
    }

    pub fn max_stationarity_relative(&self) -> f64 {
        self.actors().iter().map(|(_, a)| a.stationarity).fold(0.0, f64::max) / self.price_scale
    }

    pub fn max_complementarity(&self) -> f64 {
        self.actors().iter().map(|(_, a)| a.complementarity).fold(0.0, f64::max)
    }

    pub fn max_primal_relative(&self) -> f64 {
        self.actors().iter().map(|(_, a)| a.primal).fold(0.0, f64::max) / self.quantity_scale
    }

    pub fn max_relative(&self) -> f64 {
        self.max_stationarity_relative()
            .max(self.max_complementarity())
            .max(self.max_primal_relative())
    }
}

struct Scales {
    p: f64,
    q: f64,
}

impl Scales {
    /// Residuals of a variable `v >= 0` whose objective gradient (already net
    /// of constraint multipliers) is `g`, for a maximization.
    fn nonneg(&self, acc: &mut ActorResiduals, v: f64, g: f64) {
        let interior = v * self.p >= -g * self.q;
        acc.stat(if interior { g.abs() } else { g.max(0.0) });
        if g < 0.0 && v > 0.0 {
            acc.comp((v / self.q).min(-g / self.p));
        }
        acc.primal((-v).max(0.0));
    }

    /// Residuals of `slack >= 0` with multiplier `mult >= 0`.
    fn inequality(&self, acc: &mut ActorResiduals, slack: f64, mult: f64) {
        acc.primal((-slack).max(0.0));
        acc.comp((-mult).max(0.0) / self.p);
        if slack > 0.0 && mult > 0.0 {
            acc.comp((slack / self.q).min(mult / self.p));
        }
    }
}

fn check_dims(network: &Network, scenarios: &ScenarioSet, s: &DispatchSolution) -> Result<()> {
    let ns = scenarios.n_scenarios();
    let nt = scenarios.n_periods;
    let grid_ok = |g: &Vec<Vec<Vec<f64>>>, k: usize, m: usize| {
        g.len() == ns && g.iter().all(|e| e.len() == k && e.iter().all(|r| r.len() == m))
    };
    let (nn, ng, nl) = (network.nodes.len(), network.generators.len(), network.lines.len());
    let ok = s.probabilities.len() == ns
        && grid_ok(&s.q, ng, nt)
        && grid_ok(&s.d, nn, nt)
        && grid_ok(&s.f, nl, nt)
        && grid_ok(&s.price, nn, nt)
        && grid_ok(&s.capacity_dual, ng, nt)
        && grid_ok(&s.energy_dual, ng, scenarios.seasons.len())
        && grid_ok(&s.flow_dual_upper, nl, nt)
        && grid_ok(&s.flow_dual_lower, nl, nt)
        && s.y.len() == ng
        && s.y_r.len() == network.renewables.len()
        && s.x.len() == nl
        && s.mask.lines.len() == nl
        && s.mask.generators.len() == ng
        && s.mask.renewables.len() == network.renewables.len();
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension("solution dimensions do not match the instance".into()))
    }
}

fn scales(network: &Network, scenarios: &ScenarioSet) -> Scales {
    let hours = scenarios.period_weight * scenarios.n_periods as f64;
    let mut p = 1.0f64;
    let mut q = 1.0f64;
    for per_node in &scenarios.demand {
        for series in per_node {
            for c in series {
                p = p.max(c.intercept.abs());
                if c.intercept > 0.0 {
                    q = q.max(c.intercept / -c.slope);
                }
            }
        }
    }
    for g in &network.generators {
        for c in g.marg_cost.values() {
            p = p.max(c.abs());
        }
        p = p.max(g.inv_cost / hours);
        if g.g_max.is_finite() {
            q = q.max(g.g_max);
        }
    }
    for r in &network.renewables {
        p = p.max(r.inv_cost / hours);
        q = q.max(r.g_r);
    }
    for l in &network.lines {
        p = p.max(l.inv_cost / hours);
        if l.f_max.is_finite() {
            q = q.max(l.f_max);
        }
    }
    Scales { p, q }
}

/// Recomputes every actor's optimality conditions from the solution's primal
/// quantities and multipliers.
pub fn verify_kkt(network: &Network, scenarios: &ScenarioSet, sol: &DispatchSolution) -> Result<KktReport> {
    check_dims(network, scenarios, sol)?;
    let sc = scales(network, scenarios);
    let nt = scenarios.n_periods;
    let hours = scenarios.period_weight * nt as f64;
    let season_of = scenarios.season_of_periods();
    let node_of = |id: &str| network.node_index(id).expect("validated network");
    let cap_tol = 1e-9 * sol.mask.max_expansion.max(1.0);

    let mut gen = ActorResiduals::default();
    let mut ren = ActorResiduals::default();
    let mut con = ActorResiduals::default();
    let mut tso = ActorResiduals::default();
    let mut mc = ActorResiduals::default();

    // Investment stationarity for one expansion variable.
    let investment = |acc: &mut ActorResiduals, open: bool, v: f64, g: f64| {
        if !open {
            return;
        }
        if v >= sol.mask.max_expansion - cap_tol {
            acc.stat((-g).max(0.0));
        } else {
            sc.nonneg(acc, v, g);
        }
    };

    for (g, unit) in network.generators.iter().enumerate() {
        let n = node_of(&unit.node);
        let cap = unit.g_max + sol.y[g];
        let mut marginal_value = 0.0;
        for w in 0..sol.n_scenarios() {
            for t in 0..nt {
                let s = season_of[t];
                let q = sol.q[w][g][t];
                let mu = sol.capacity_dual[w][g][t];
                let grad = sol.price[w][n][t]
                    - unit.marg_cost[&scenarios.seasons[s].label]
                    - unit.cost_slope * q
                    - mu
                    - sol.energy_dual[w][g][s];
                sc.nonneg(&mut gen, q, grad);
                sc.inequality(&mut gen, cap - q, mu);
                marginal_value += sol.probabilities[w] * sol.period_weight * mu;
            }
            for (s, season) in scenarios.seasons.iter().enumerate() {
                let used: f64 = season.periods.iter().map(|&t| sol.q[w][g][t]).sum();
                let len = season.periods.len().max(1) as f64;
                match unit.energy_limit(w, &season.label) {
                    Some(limit) => sc.inequality(&mut gen, (limit - used) / len, sol.energy_dual[w][g][s]),
                    None => gen.comp(sol.energy_dual[w][g][s].abs() / sc.p),
                }
            }
        }
        let open = sol.mask.generator_open(network, g);
        investment(&mut gen, open, sol.y[g], (marginal_value - unit.inv_cost) / hours);
        if !open {
            gen.primal(sol.y[g].abs());
        }
    }

    for (r, unit) in network.renewables.iter().enumerate() {
        let n = node_of(&unit.node);
        let mut revenue = 0.0;
        for w in 0..sol.n_scenarios() {
            for t in 0..nt {
                revenue += sol.probabilities[w] * sol.period_weight * sol.price[w][n][t] * unit.profile[w][t];
            }
        }
        let open = sol.mask.renewable_open(network, r);
        investment(&mut ren, open, sol.y_r[r], (revenue - unit.inv_cost) / hours);
        if open {
            ren.primal((-sol.y_r[r]).max(0.0));
        } else {
            ren.primal(sol.y_r[r].abs());
        }
    }

    for w in 0..sol.n_scenarios() {
        for n in 0..network.nodes.len() {
            for t in 0..nt {
                let c = scenarios.demand[w][n][t];
                let d = sol.d[w][n][t];
                sc.nonneg(&mut con, d, c.price_at(d) - sol.price[w][n][t]);
            }
        }
    }

    for (l, line) in network.lines.iter().enumerate() {
        let from = node_of(&line.from_node);
        let to = node_of(&line.to_node);
        let cap = line.f_max + sol.x[l];
        let mut rent = 0.0;
        for w in 0..sol.n_scenarios() {
            for t in 0..nt {
                let f = sol.f[w][l][t];
                let up = sol.flow_dual_upper[w][l][t];
                let lo = sol.flow_dual_lower[w][l][t];
                let p = &sol.price[w];
                tso.stat((p[to][t] - p[from][t] - up + lo).abs());
                sc.inequality(&mut tso, cap - f, up);
                sc.inequality(&mut tso, cap + f, lo);
                rent += sol.probabilities[w] * sol.period_weight * (up + lo);
            }
        }
        let open = sol.mask.line_open(network, l);
        investment(&mut tso, open, sol.x[l], (rent - line.inv_cost) / hours);
        if !open {
            tso.primal(sol.x[l].abs());
        }
    }

    for w in 0..sol.n_scenarios() {
        for (n, node) in network.nodes.iter().enumerate() {
            for t in 0..nt {
                let mut r = sol.d[w][n][t];
                for (l, line) in network.lines.iter().enumerate() {
                    r += line.incidence(&node.id) * sol.f[w][l][t];
                }
                for (g, unit) in network.generators.iter().enumerate() {
                    if unit.node == node.id {
                        r -= sol.q[w][g][t];
                    }
                }
                for (k, unit) in network.renewables.iter().enumerate() {
                    if unit.node == node.id {
                        r -= (unit.g_r + sol.y_r[k]) * unit.profile[w][t];
                    }
                }
                mc.primal(r.abs());
                if !sol.price[w][n][t].is_finite() {
                    mc.primal(f64::INFINITY);
                }
            }
        }
    }

    Ok(KktReport {
        generator: gen,
        renewable: ren,
        consumer: con,
        tso,
        market_clearing: mc,
        price_scale: sc.p,
        quantity_scale: sc.q,
    })
}

//! Per-country, per-scenario welfare accounts and their differences.

use std::collections::BTreeMap;
use std::path::Path;

use crate::equilibrium::export::{csv_writer, finish, fmt_f64, parse_field, read_records, write_row};
use crate::equilibrium::{verify_kkt, DispatchSolution};
use crate::error::{Error, Result};
use crate::model::{Network, ScenarioSet};

/// Maximum relative KKT residual for a solution to count as an equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-6;

/// How each line's congestion rent and investment cost are divided between
/// the countries at its two ends. Shares are the from-node country's share;
/// the to-node country receives the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationRule {
    pub default_from_share: f64,
    pub rent_from_share: BTreeMap<String, f64>,
    pub cost_from_share: BTreeMap<String, f64>,
}

impl Default for AllocationRule {
    fn default() -> Self {
        Self {
            default_from_share: 0.5,
            rent_from_share: BTreeMap::new(),
            cost_from_share: BTreeMap::new(),
        }
    }
}

impl AllocationRule {
    fn share(map: &BTreeMap<String, f64>, default: f64, line: &str) -> Result<f64> {
        let s = map.get(line).copied().unwrap_or(default);
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Domain(format!("allocation share {s} for line '{line}' is outside [0, 1]")));
        }
        Ok(s)
    }

    pub fn rent_share(&self, line: &str) -> Result<f64> {
        Self::share(&self.rent_from_share, self.default_from_share, line)
    }

    pub fn cost_share(&self, line: &str) -> Result<f64> {
        Self::share(&self.cost_from_share, self.default_from_share, line)
    }
}

/// Annualized welfare components, EUR/yr, indexed `[country][scenario]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareAccount {
    pub countries: Vec<String>,
    pub probabilities: Vec<f64>,
    pub cs: Vec<Vec<f64>>,
    /// Producer surplus net of generator and renewable investment cost.
    pub ps: Vec<Vec<f64>>,
    pub cr_share: Vec<Vec<f64>>,
    /// Allocated line investment cost.
    pub inv_cost: Vec<Vec<f64>>,
    pub tw: Vec<Vec<f64>>,
}

impl WelfareAccount {
    pub fn expected_tw(&self) -> Vec<f64> {
        self.tw.iter().map(|row| expectation(row, &self.probabilities)).collect()
    }

    pub fn country_index(&self, c: &str) -> Option<usize> {
        self.countries.iter().position(|x| x == c)
    }
}

pub(crate) fn expectation(values: &[f64], probabilities: &[f64]) -> f64 {
    values.iter().zip(probabilities).map(|(v, p)| v * p).sum()
}

/// Builds the welfare account of an equilibrium.
pub fn account(
    network: &Network,
    scenarios: &ScenarioSet,
    solution: &DispatchSolution,
    rule: &AllocationRule,
) -> Result<WelfareAccount> {
    let report = verify_kkt(network, scenarios, solution)?;
    if report.max_relative() > EQUILIBRIUM_TOL {
        return Err(Error::Domain(format!(
            "solution is not an equilibrium (KKT residual {:.3e})",
            report.max_relative()
        )));
    }
    let countries = network.countries();
    let nc = countries.len();
    let ns = scenarios.n_scenarios();
    let nt = scenarios.n_periods;
    let w = scenarios.period_weight;
    let season_of = scenarios.season_of_periods();
    let cidx = |node: &str| {
        let c = network.country_of(node).expect("validated network");
        countries.iter().position(|x| x == c).expect("country list")
    };
    let nidx = |node: &str| network.node_index(node).expect("validated network");

    let zeros = || vec![vec![0.0; ns]; nc];
    let (mut cs, mut ps, mut cr, mut ic) = (zeros(), zeros(), zeros(), zeros());

    for (n, node) in network.nodes.iter().enumerate() {
        let c = cidx(&node.id);
        for s in 0..ns {
            let mut v = 0.0;
            for t in 0..nt {
                let d = solution.d[s][n][t];
                v += scenarios.demand[s][n][t].utility(d) - solution.price[s][n][t] * d;
            }
            cs[c][s] += w * v;
        }
    }
    for (g, unit) in network.generators.iter().enumerate() {
        let c = cidx(&unit.node);
        let n = nidx(&unit.node);
        for s in 0..ns {
            let mut v = 0.0;
            for t in 0..nt {
                let q = solution.q[s][g][t];
                let cost = unit.marg_cost[&scenarios.seasons[season_of[t]].label];
                v += (solution.price[s][n][t] - cost - 0.5 * unit.cost_slope * q) * q;
            }
            ps[c][s] += w * v - unit.inv_cost * solution.y[g];
        }
    }
    for (r, unit) in network.renewables.iter().enumerate() {
        let c = cidx(&unit.node);
        let n = nidx(&unit.node);
        let cap = unit.g_r + solution.y_r[r];
        for s in 0..ns {
            let v: f64 = (0..nt).map(|t| solution.price[s][n][t] * cap * unit.profile[s][t]).sum();
            ps[c][s] += w * v - unit.inv_cost * solution.y_r[r];
        }
    }
    for (l, line) in network.lines.iter().enumerate() {
        let (cf, ct) = (cidx(&line.from_node), cidx(&line.to_node));
        let (nf, nt_) = (nidx(&line.from_node), nidx(&line.to_node));
        let rs = rule.rent_share(&line.id)?;
        let ks = rule.cost_share(&line.id)?;
        let cost = line.inv_cost * solution.x[l];
        for s in 0..ns {
            let p = &solution.price[s];
            let rent: f64 = w * (0..nt).map(|t| (p[nt_][t] - p[nf][t]) * solution.f[s][l][t]).sum::<f64>();
            cr[cf][s] += rs * rent;
            cr[ct][s] += (1.0 - rs) * rent;
            ic[cf][s] += ks * cost;
            ic[ct][s] += (1.0 - ks) * cost;
        }
    }
    let tw = (0..nc)
        .map(|c| (0..ns).map(|s| cs[c][s] + ps[c][s] + cr[c][s] - ic[c][s]).collect())
        .collect();
    Ok(WelfareAccount {
        countries,
        probabilities: scenarios.probabilities.clone(),
        cs,
        ps,
        cr_share: cr,
        inv_cost: ic,
        tw,
    })
}

/// `ΔTW_i^ω = TW_i^ω(plan B) − TW_i^ω(plan A)` with expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaWelfare {
    pub countries: Vec<String>,
    pub probabilities: Vec<f64>,
    /// `[country][scenario]`, EUR/yr.
    pub delta: Vec<Vec<f64>>,
    pub expected: Vec<f64>,
}

impl DeltaWelfare {
    pub fn new(countries: Vec<String>, probabilities: Vec<f64>, delta: Vec<Vec<f64>>) -> Result<Self> {
        if delta.len() != countries.len() || delta.iter().any(|r| r.len() != probabilities.len()) {
            return Err(Error::Dimension("delta table does not match countries and scenarios".into()));
        }
        let expected = delta.iter().map(|r| expectation(r, &probabilities)).collect();
        Ok(Self {
            countries,
            probabilities,
            delta,
            expected,
        })
    }

    pub fn country_index(&self, c: &str) -> Option<usize> {
        self.countries.iter().position(|x| x == c)
    }

    pub fn n_scenarios(&self) -> usize {
        self.probabilities.len()
    }
}

/// Difference between two accounts built on the same scenario set.
pub fn delta(with: &WelfareAccount, without: &WelfareAccount) -> Result<DeltaWelfare> {
    if with.countries != without.countries || with.probabilities != without.probabilities {
        return Err(Error::Mismatch("welfare accounts use different countries or scenario sets".into()));
    }
    let d = with
        .tw
        .iter()
        .zip(&without.tw)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect();
    DeltaWelfare::new(with.countries.clone(), with.probabilities.clone(), d)
}

pub fn write_welfare_csv(path: &Path, acc: &WelfareAccount) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    let header = ["country", "scenario", "cs", "ps", "cr_share", "inv_cost", "tw"];
    write_row(&mut wtr, path, &header.map(String::from))?;
    for (c, country) in acc.countries.iter().enumerate() {
        for s in 0..acc.probabilities.len() {
            write_row(
                &mut wtr,
                path,
                &[
                    country.clone(),
                    s.to_string(),
                    fmt_f64(acc.cs[c][s]),
                    fmt_f64(acc.ps[c][s]),
                    fmt_f64(acc.cr_share[c][s]),
                    fmt_f64(acc.inv_cost[c][s]),
                    fmt_f64(acc.tw[c][s]),
                ],
            )?;
        }
    }
    finish(wtr, path)
}

pub fn write_delta_csv(path: &Path, delta: &DeltaWelfare) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["country".into(), "scenario".into(), "delta_tw".into()])?;
    for (c, country) in delta.countries.iter().enumerate() {
        for (s, v) in delta.delta[c].iter().enumerate() {
            write_row(&mut wtr, path, &[country.clone(), s.to_string(), fmt_f64(*v)])?;
        }
    }
    finish(wtr, path)
}

/// Reads `delta.csv`; countries are returned in first-appearance order.
pub fn read_delta_csv(path: &Path, probabilities: &[f64]) -> Result<DeltaWelfare> {
    let mut countries: Vec<String> = Vec::new();
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for (row, rec) in read_records(path)? {
        let c = rec.get(0).unwrap_or("").trim().to_string();
        let ci = match countries.iter().position(|x| *x == c) {
            Some(i) => i,
            None => {
                countries.push(c);
                countries.len() - 1
            }
        };
        let s: usize = parse_field(path, row, &rec, 1, "scenario")?;
        if s >= probabilities.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: "scenario".into(),
                message: format!("scenario {s} has no probability"),
            });
        }
        cells.push((ci, s, parse_field(path, row, &rec, 2, "delta_tw")?));
    }
    let mut delta = vec![vec![f64::NAN; probabilities.len()]; countries.len()];
    for (c, s, v) in cells {
        delta[c][s] = v;
    }
    if delta.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InsufficientData(format!("{}: delta table is incomplete", path.display())));
    }
    DeltaWelfare::new(countries, probabilities.to_vec(), delta)
}

/// Writes `scenario,probability`.
pub fn write_probabilities_csv(path: &Path, probabilities: &[f64]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["scenario".into(), "probability".into()])?;
    for (s, p) in probabilities.iter().enumerate() {
        write_row(&mut wtr, path, &[s.to_string(), fmt_f64(*p)])?;
    }
    finish(wtr, path)
}

pub fn read_probabilities_csv(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (row, rec) in read_records(path)? {
        let s: usize = parse_field(path, row, &rec, 0, "scenario")?;
        if s != out.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: "scenario".into(),
                message: "scenarios must be listed in order 0..n-1".into(),
            });
        }
        out.push(parse_field(path, row, &rec, 1, "probability")?);
    }
    Ok(out)
}

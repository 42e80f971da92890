//! Compensation mechanisms calibrated to a target share of the expected
//! welfare gain. Sign convention: `C_i > 0` means country `i` receives.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::equilibrium::export::{csv_writer, finish, fmt_f64, parse_field, read_records, write_row};
use crate::equilibrium::DispatchSolution;
use crate::error::{Error, Result};
use crate::model::{Network, ScenarioSet};
use crate::welfare::{expectation, DeltaWelfare};

const SHARE_TOL: f64 = 1e-12;
const BALANCE_TOL: f64 = 1e-9;

/// Participating countries and their entitled shares of the aggregate gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ShareRule {
    countries: Vec<String>,
    shares: Vec<f64>,
}

impl ShareRule {
    pub fn new(countries: Vec<String>, shares: Vec<f64>) -> Result<Self> {
        if countries.is_empty() || countries.len() != shares.len() {
            return Err(Error::Domain("share rule needs one share per participating country".into()));
        }
        let mut sorted = countries.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != countries.len() {
            return Err(Error::Domain("share rule lists a country twice".into()));
        }
        if shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Domain("shares must be finite and nonnegative".into()));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > SHARE_TOL {
            return Err(Error::Domain(format!("shares sum to {total}, not 1")));
        }
        Ok(Self { countries, shares })
    }

    pub fn equal(countries: Vec<String>) -> Result<Self> {
        let n = countries.len().max(1);
        Self::new(countries, vec![1.0 / n as f64; n])
    }

    pub fn countries(&self) -> &[String] {
        &self.countries
    }

    pub fn shares(&self) -> &[f64] {
        &self.shares
    }

    /// Positions of the participants in `delta`.
    fn locate(&self, delta: &DeltaWelfare) -> Result<Vec<usize>> {
        self.countries
            .iter()
            .map(|c| {
                delta
                    .country_index(c)
                    .ok_or_else(|| Error::Mismatch(format!("participant '{c}' is missing from the welfare delta")))
            })
            .collect()
    }
}

/// Expected transfer `t_i` each participant must receive, in rule order.
pub fn targets(delta: &DeltaWelfare, rule: &ShareRule) -> Result<Vec<f64>> {
    let idx = rule.locate(delta)?;
    let total: f64 = idx.iter().map(|&i| delta.expected[i]).sum();
    Ok(idx
        .iter()
        .zip(rule.shares())
        .map(|(&i, l)| l * total - delta.expected[i])
        .collect())
}

/// Per-scenario flow on the candidate line (positive from→to) and the
/// prices at its two ends.
#[derive(Debug, Clone, PartialEq)]
pub struct LineObservables {
    pub line_id: String,
    pub from_country: String,
    pub to_country: String,
    pub probabilities: Vec<f64>,
    /// Hours represented by each period.
    pub weight: f64,
    pub flow: Vec<Vec<f64>>,
    pub price_from: Vec<Vec<f64>>,
    pub price_to: Vec<Vec<f64>>,
}

impl LineObservables {
    pub fn from_solution(
        network: &Network,
        scenarios: &ScenarioSet,
        solution: &DispatchSolution,
        line_id: &str,
    ) -> Result<Self> {
        let l = network
            .line_index(line_id)
            .ok_or_else(|| Error::Config(format!("unknown line '{line_id}'")))?;
        let line = &network.lines[l];
        let nf = network.node_index(&line.from_node).expect("validated network");
        let nt = network.node_index(&line.to_node).expect("validated network");
        let country = |n: &str| network.country_of(n).expect("validated network").to_string();
        Ok(Self {
            line_id: line_id.to_string(),
            from_country: country(&line.from_node),
            to_country: country(&line.to_node),
            probabilities: scenarios.probabilities.clone(),
            weight: scenarios.period_weight,
            flow: solution.f.iter().map(|per| per[l].clone()).collect(),
            price_from: solution.price.iter().map(|per| per[nf].clone()).collect(),
            price_to: solution.price.iter().map(|per| per[nt].clone()).collect(),
        })
    }

    pub fn n_scenarios(&self) -> usize {
        self.probabilities.len()
    }

    /// `w·Σ_t f` per scenario.
    pub fn total_flow(&self) -> Vec<f64> {
        self.flow.iter().map(|f| self.weight * f.iter().sum::<f64>()).collect()
    }

    /// `w·Σ_t f·π̄` per scenario, with `π̄` the midpoint of the endpoint prices.
    pub fn flow_value(&self) -> Vec<f64> {
        (0..self.n_scenarios())
            .map(|s| {
                let v: f64 = (0..self.flow[s].len())
                    .map(|t| self.flow[s][t] * 0.5 * (self.price_from[s][t] + self.price_to[s][t]))
                    .sum();
                self.weight * v
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        let ns = self.n_scenarios();
        if self.flow.len() != ns || self.price_from.len() != ns || self.price_to.len() != ns {
            return Err(Error::Dimension("line observables do not match the scenario count".into()));
        }
        for s in 0..ns {
            let nt = self.flow[s].len();
            if self.price_from[s].len() != nt || self.price_to[s].len() != nt {
                return Err(Error::Dimension(format!("scenario {s}: flow and price series differ in length")));
            }
        }
        Ok(())
    }
}

/// Mechanism tags as used on the command line and in output files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mechanism {
    None,
    LumpSum,
    /// PPA priced against the given base country.
    Ppa(String),
    Flow,
    Value,
    Ideal,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mechanism::None => f.write_str("none"),
            Mechanism::LumpSum => f.write_str("lump_sum"),
            Mechanism::Ppa(c) => write!(f, "ppa:{c}"),
            Mechanism::Flow => f.write_str("flow"),
            Mechanism::Value => f.write_str("value"),
            Mechanism::Ideal => f.write_str("ideal"),
        }
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "none" => Mechanism::None,
            "lump" | "lump_sum" => Mechanism::LumpSum,
            "flow" => Mechanism::Flow,
            "value" => Mechanism::Value,
            "ideal" => Mechanism::Ideal,
            _ => match s.strip_prefix("ppa:") {
                Some(c) if !c.trim().is_empty() => Mechanism::Ppa(c.trim().to_string()),
                _ => return Err(Error::Config(format!("unknown mechanism '{s}'"))),
            },
        })
    }
}

/// `C_i^ω` per participant and scenario plus the calibrated parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensationSchedule {
    pub mechanism: String,
    pub countries: Vec<String>,
    pub probabilities: Vec<f64>,
    /// `[country][scenario]`, EUR/yr.
    pub amounts: Vec<Vec<f64>>,
    pub parameters: Vec<(String, f64)>,
}

impl CompensationSchedule {
    pub fn expected(&self) -> Vec<f64> {
        self.amounts.iter().map(|a| expectation(a, &self.probabilities)).collect()
    }

    /// `max_ω |Σ_i C_i^ω|`.
    pub fn max_imbalance(&self) -> f64 {
        (0..self.probabilities.len())
            .map(|s| self.amounts.iter().map(|a| a[s]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

fn check_balanced(targets: &[f64]) -> Result<()> {
    let sum: f64 = targets.iter().sum();
    let scale: f64 = targets.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
    if sum.abs() > BALANCE_TOL * scale {
        return Err(Error::Domain(format!("targets are unbalanced (sum {sum:e})")));
    }
    Ok(())
}

fn check_targets(rule: &ShareRule, targets: &[f64]) -> Result<()> {
    if targets.len() != rule.countries().len() {
        return Err(Error::Dimension("one target per participant is required".into()));
    }
    check_balanced(targets)
}

/// Schedule of zeros for the no-compensation benchmark.
pub fn no_compensation(rule: &ShareRule, probabilities: &[f64]) -> CompensationSchedule {
    CompensationSchedule {
        mechanism: Mechanism::None.to_string(),
        countries: rule.countries().to_vec(),
        probabilities: probabilities.to_vec(),
        amounts: vec![vec![0.0; probabilities.len()]; rule.countries().len()],
        parameters: Vec::new(),
    }
}

pub fn lump_sum(rule: &ShareRule, targets: &[f64], probabilities: &[f64]) -> Result<CompensationSchedule> {
    check_targets(rule, targets)?;
    Ok(CompensationSchedule {
        mechanism: Mechanism::LumpSum.to_string(),
        countries: rule.countries().to_vec(),
        probabilities: probabilities.to_vec(),
        amounts: targets.iter().map(|t| vec![*t; probabilities.len()]).collect(),
        parameters: rule
            .countries()
            .iter()
            .zip(targets)
            .map(|(c, t)| (format!("lump_{c}"), *t))
            .collect(),
    })
}

/// Bilateral PPA at a fixed price on the base country's export flow. The
/// counterparty pays the negation of the base country's settlement.
pub fn ppa(obs: &LineObservables, base: &str, target: f64) -> Result<CompensationSchedule> {
    obs.check()?;
    let mech = Mechanism::Ppa(base.to_string()).to_string();
    if obs.from_country == obs.to_country {
        return Err(Error::Unsupported("PPA needs a cross-border line".into()));
    }
    let (sign, counter) = if base == obs.from_country {
        (1.0, obs.to_country.clone())
    } else if base == obs.to_country {
        (-1.0, obs.from_country.clone())
    } else {
        return Err(Error::Unsupported(format!(
            "PPA base '{base}' is not an endpoint of line '{}'",
            obs.line_id
        )));
    };
    let own_price = if sign > 0.0 { &obs.price_from } else { &obs.price_to };
    let ns = obs.n_scenarios();
    let vol: Vec<f64> = (0..ns).map(|s| sign * obs.weight * obs.flow[s].iter().sum::<f64>()).collect();
    let spot: Vec<f64> = (0..ns)
        .map(|s| {
            let v: f64 = obs.flow[s].iter().zip(&own_price[s]).map(|(f, p)| sign * f * p).sum();
            obs.weight * v
        })
        .collect();
    let e_vol = expectation(&vol, &obs.probabilities);
    if e_vol == 0.0 || !e_vol.is_finite() {
        return Err(Error::Calibration {
            mechanism: mech,
            reason: "expected flow of the base country is zero".into(),
        });
    }
    let price = (target + expectation(&spot, &obs.probabilities)) / e_vol;
    let c_base: Vec<f64> = (0..ns).map(|s| price * vol[s] - spot[s]).collect();
    let c_counter = c_base.iter().map(|c| -c).collect();
    Ok(CompensationSchedule {
        mechanism: mech,
        countries: vec![base.to_string(), counter],
        probabilities: obs.probabilities.clone(),
        amounts: vec![c_base, c_counter],
        parameters: vec![("ppa_price".into(), price)],
    })
}

fn proportional(
    mechanism: Mechanism,
    prefix: &str,
    rule: &ShareRule,
    targets: &[f64],
    driver: Vec<f64>,
    probabilities: &[f64],
) -> Result<CompensationSchedule> {
    check_targets(rule, targets)?;
    let e = expectation(&driver, probabilities);
    if e == 0.0 || !e.is_finite() {
        return Err(Error::Calibration {
            mechanism: mechanism.to_string(),
            reason: format!("expected {prefix} driver is zero"),
        });
    }
    let coeffs: Vec<f64> = targets.iter().map(|t| t / e).collect();
    Ok(CompensationSchedule {
        mechanism: mechanism.to_string(),
        countries: rule.countries().to_vec(),
        probabilities: probabilities.to_vec(),
        amounts: coeffs.iter().map(|a| driver.iter().map(|d| a * d).collect()).collect(),
        parameters: rule
            .countries()
            .iter()
            .zip(&coeffs)
            .map(|(c, a)| (format!("{prefix}_{c}"), *a))
            .collect(),
    })
}

/// `C_i^ω = α_i·w·Σ_t f`.
pub fn flow_mech(rule: &ShareRule, targets: &[f64], obs: &LineObservables) -> Result<CompensationSchedule> {
    obs.check()?;
    proportional(Mechanism::Flow, "alpha", rule, targets, obs.total_flow(), &obs.probabilities)
}

/// `C_i^ω = β_i·w·Σ_t f·π̄`.
pub fn value_mech(rule: &ShareRule, targets: &[f64], obs: &LineObservables) -> Result<CompensationSchedule> {
    obs.check()?;
    proportional(Mechanism::Value, "beta", rule, targets, obs.flow_value(), &obs.probabilities)
}

/// `C_i^ω = λ_i·Σ_j ΔTW_j^ω − ΔTW_i^ω` over the participants.
pub fn ideal_mech(delta: &DeltaWelfare, rule: &ShareRule) -> Result<CompensationSchedule> {
    let idx = rule.locate(delta)?;
    let ns = delta.n_scenarios();
    let total: Vec<f64> = (0..ns).map(|s| idx.iter().map(|&i| delta.delta[i][s]).sum()).collect();
    Ok(CompensationSchedule {
        mechanism: Mechanism::Ideal.to_string(),
        countries: rule.countries().to_vec(),
        probabilities: delta.probabilities.clone(),
        amounts: idx
            .iter()
            .zip(rule.shares())
            .map(|(&i, l)| (0..ns).map(|s| l * total[s] - delta.delta[i][s]).collect())
            .collect(),
        parameters: rule
            .countries()
            .iter()
            .zip(rule.shares())
            .map(|(c, l)| (format!("lambda_{c}"), *l))
            .collect(),
    })
}

/// Calibrates one mechanism against the targets implied by `rule`.
pub fn calibrate(
    mechanism: &Mechanism,
    delta: &DeltaWelfare,
    rule: &ShareRule,
    obs: &LineObservables,
) -> Result<CompensationSchedule> {
    let t = targets(delta, rule)?;
    match mechanism {
        Mechanism::None => Ok(no_compensation(rule, &delta.probabilities)),
        Mechanism::LumpSum => lump_sum(rule, &t, &delta.probabilities),
        Mechanism::Ppa(base) => {
            if rule.countries().len() != 2 {
                return Err(Error::Unsupported("PPA is defined for bilateral share rules only".into()));
            }
            let i = rule
                .countries()
                .iter()
                .position(|c| c == base)
                .ok_or_else(|| Error::Config(format!("PPA base '{base}' is not a participant")))?;
            let other = &rule.countries()[1 - i];
            let ends = [&obs.from_country, &obs.to_country];
            if !ends.contains(&base) || !ends.contains(&other) {
                return Err(Error::Unsupported("PPA participants must be the two ends of the line".into()));
            }
            ppa(obs, base, t[i])
        }
        Mechanism::Flow => flow_mech(rule, &t, obs),
        Mechanism::Value => value_mech(rule, &t, obs),
        Mechanism::Ideal => ideal_mech(delta, rule),
    }
}

/// `NTW_i^ω = ΔTW_i^ω + C_i^ω` for the schedule's countries.
#[derive(Debug, Clone, PartialEq)]
pub struct NetWelfare {
    pub mechanism: String,
    pub countries: Vec<String>,
    pub probabilities: Vec<f64>,
    pub ntw: Vec<Vec<f64>>,
}

pub fn apply(delta: &DeltaWelfare, schedule: &CompensationSchedule) -> Result<NetWelfare> {
    if delta.probabilities != schedule.probabilities {
        return Err(Error::Mismatch("schedule and welfare delta use different scenario sets".into()));
    }
    let ntw = schedule
        .countries
        .iter()
        .zip(&schedule.amounts)
        .map(|(c, a)| {
            let i = delta
                .country_index(c)
                .ok_or_else(|| Error::Mismatch(format!("country '{c}' is missing from the welfare delta")))?;
            Ok(delta.delta[i].iter().zip(a).map(|(d, c)| d + c).collect())
        })
        .collect::<Result<_>>()?;
    Ok(NetWelfare {
        mechanism: schedule.mechanism.clone(),
        countries: schedule.countries.clone(),
        probabilities: schedule.probabilities.clone(),
        ntw,
    })
}

pub fn write_compensation_csv(path: &Path, schedules: &[CompensationSchedule]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["mechanism", "country", "scenario", "amount"].map(String::from))?;
    for sch in schedules {
        for (c, amounts) in sch.countries.iter().zip(&sch.amounts) {
            for (s, a) in amounts.iter().enumerate() {
                write_row(&mut wtr, path, &[sch.mechanism.clone(), c.clone(), s.to_string(), fmt_f64(*a)])?;
            }
        }
    }
    finish(wtr, path)
}

pub fn write_parameters_csv(path: &Path, schedules: &[CompensationSchedule]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["mechanism", "param", "value"].map(String::from))?;
    for sch in schedules {
        for (k, v) in &sch.parameters {
            write_row(&mut wtr, path, &[sch.mechanism.clone(), k.clone(), fmt_f64(*v)])?;
        }
    }
    finish(wtr, path)
}

const OBS_HEADER: [&str; 9] = [
    "line", "from_country", "to_country", "scenario", "period", "weight", "flow", "price_from", "price_to",
];

/// Writes one row per (scenario, period).
pub fn write_line_obs_csv(path: &Path, obs: &LineObservables) -> Result<()> {
    obs.check()?;
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &OBS_HEADER.map(String::from))?;
    for s in 0..obs.n_scenarios() {
        for t in 0..obs.flow[s].len() {
            write_row(
                &mut wtr,
                path,
                &[
                    obs.line_id.clone(),
                    obs.from_country.clone(),
                    obs.to_country.clone(),
                    s.to_string(),
                    t.to_string(),
                    fmt_f64(obs.weight),
                    fmt_f64(obs.flow[s][t]),
                    fmt_f64(obs.price_from[s][t]),
                    fmt_f64(obs.price_to[s][t]),
                ],
            )?;
        }
    }
    finish(wtr, path)
}

/// Reads `line_obs.csv`. The `weight` column may be omitted (one hour per
/// period).
pub fn read_line_obs_csv(path: &Path, probabilities: &[f64]) -> Result<LineObservables> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let headers = rdr
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| {
        col(name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row: 1,
            column: name.to_string(),
            message: "missing column".into(),
        })
    };
    let (c_line, c_from, c_to) = (need("line")?, need("from_country")?, need("to_country")?);
    let (c_s, c_t, c_f) = (need("scenario")?, need("period")?, need("flow")?);
    let (c_pf, c_pt) = (need("price_from")?, need("price_to")?);
    let c_w = col("weight");
    let ns = probabilities.len();
    let mut obs = LineObservables {
        line_id: String::new(),
        from_country: String::new(),
        to_country: String::new(),
        probabilities: probabilities.to_vec(),
        weight: 1.0,
        flow: vec![Vec::new(); ns],
        price_from: vec![Vec::new(); ns],
        price_to: vec![Vec::new(); ns],
    };
    let records = read_records(path)?;
    if records.is_empty() {
        return Err(Error::InsufficientData(format!("{}: no observations", path.display())));
    }
    for (k, (row, rec)) in records.iter().enumerate() {
        let text = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        if k == 0 {
            obs.line_id = text(c_line);
            obs.from_country = text(c_from);
            obs.to_country = text(c_to);
            if let Some(c) = c_w {
                obs.weight = parse_field(path, *row, rec, c, "weight")?;
            }
        }
        let bad = |column: &str, message: String| Error::Parse {
            path: path.to_path_buf(),
            row: *row,
            column: column.to_string(),
            message,
        };
        if text(c_line) != obs.line_id || text(c_from) != obs.from_country || text(c_to) != obs.to_country {
            return Err(bad("line", "all rows must describe the same line".into()));
        }
        let s: usize = parse_field(path, *row, rec, c_s, "scenario")?;
        let t: usize = parse_field(path, *row, rec, c_t, "period")?;
        if s >= ns {
            return Err(bad("scenario", format!("scenario {s} has no probability")));
        }
        if t != obs.flow[s].len() {
            return Err(bad("period", format!("expected period {} next", obs.flow[s].len())));
        }
        obs.flow[s].push(parse_field(path, *row, rec, c_f, "flow")?);
        obs.price_from[s].push(parse_field(path, *row, rec, c_pf, "price_from")?);
        obs.price_to[s].push(parse_field(path, *row, rec, c_pt, "price_to")?);
    }
    if obs.flow.iter().any(Vec::is_empty) {
        return Err(Error::InsufficientData(format!("{}: some scenarios have no rows", path.display())));
    }
    Ok(obs)
}

//! CSV ingestion of networks and scenario sets.
//!
//! A data directory holds the network tables (`nodes.csv`, `lines.csv`,
//! `generators.csv`, `gen_costs.csv`, `gen_energy_limits.csv`,
//! `renewables.csv`) plus one of two scenario sources:
//!
//! * `timeseries.csv`: hourly history, sampled into week blocks using the
//!   `n_scenarios`, `hours_per_season`, `seed`, `year_range` and `elasticity`
//!   config keys;
//! * explicit scenario tables: `scenarios.csv` (scenario,probability),
//!   `periods.csv` (period,season), `demand_curves.csv`
//!   (scenario,node_id,period,slope,intercept) and, when renewables exist,
//!   `ren_profiles.csv` (ren_id,scenario,period,factor).

pub mod config;
pub mod demand;
pub mod sampling;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;

use crate::error::{Error, Result};
use crate::model::{validate, DemandCurve, Generator, Line, Network, Node, Renewable, ScenarioSet, Season};

pub use config::KeyValueConfig;
pub use demand::{build_demand_curve, DEFAULT_ELASTICITY};
pub use sampling::{sample_blocks, sample_scenarios, SamplingConfig, SeasonWindow, TimeSeriesTable};

/// Parsed CSV file with header lookup and located parse errors.
struct CsvTable {
    path: PathBuf,
    headers: HashMap<String, usize>,
    header_names: Vec<String>,
    records: Vec<(usize, csv::StringRecord)>,
}

impl CsvTable {
    fn read(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let header_names: Vec<String> = rdr
            .headers()
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?
            .iter()
            .map(str::to_string)
            .collect();
        let headers = header_names.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            records.push((line, rec));
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            header_names,
            records,
        })
    }

    fn require_columns(&self, cols: &[&str]) -> Result<()> {
        for c in cols {
            if !self.headers.contains_key(*c) {
                return Err(Error::Parse {
                    path: self.path.clone(),
                    row: 1,
                    column: (*c).to_string(),
                    message: "missing column".into(),
                });
            }
        }
        Ok(())
    }

    fn err(&self, row: usize, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn str<'a>(&self, rec: &'a (usize, csv::StringRecord), col: &str) -> Result<&'a str> {
        let idx = self.headers[col];
        rec.1.get(idx).ok_or_else(|| self.err(rec.0, col, "missing field"))
    }

    fn opt_str<'a>(&self, rec: &'a (usize, csv::StringRecord), col: &str) -> Option<&'a str> {
        self.headers.get(col).and_then(|&i| rec.1.get(i)).filter(|s| !s.is_empty())
    }

    fn f64(&self, rec: &(usize, csv::StringRecord), col: &str) -> Result<f64> {
        let s = self.str(rec, col)?;
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(rec.0, col, format!("cannot parse '{s}' as a number")))?;
        if v.is_nan() {
            return Err(self.err(rec.0, col, "NaN is not allowed"));
        }
        Ok(v)
    }

    fn usize(&self, rec: &(usize, csv::StringRecord), col: &str) -> Result<usize> {
        let s = self.str(rec, col)?;
        s.parse()
            .map_err(|_| self.err(rec.0, col, format!("cannot parse '{s}' as a nonnegative integer")))
    }

    fn flag(&self, rec: &(usize, csv::StringRecord), col: &str) -> Result<bool> {
        match self.str(rec, col)? {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            s => Err(self.err(rec.0, col, format!("expected 0 or 1, got '{s}'"))),
        }
    }
}

fn optional(dir: &Path, name: &str) -> Result<Option<CsvTable>> {
    let p = dir.join(name);
    if p.exists() {
        CsvTable::read(&p).map(Some)
    } else {
        Ok(None)
    }
}

fn required(dir: &Path, name: &str) -> Result<CsvTable> {
    let p = dir.join(name);
    if !p.exists() {
        return Err(Error::Io {
            path: p,
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "required input file is missing"),
        });
    }
    CsvTable::read(&p)
}

/// Loads and validates a network with its scenario set from `dir`.
pub fn load_network(dir: &Path, config: &KeyValueConfig) -> Result<(Network, ScenarioSet)> {
    let nodes = read_nodes(dir)?;
    let node_ids: HashMap<&str, ()> = nodes.iter().map(|n| (n.id.as_str(), ())).collect();
    let lines = read_lines(dir, &node_ids)?;
    let mut generators = read_generators(dir, &node_ids)?;
    let mut renewables = read_renewables(dir, &node_ids)?;

    let node_order: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let scenarios = if dir.join("timeseries.csv").exists() {
        let table = read_timeseries(&dir.join("timeseries.csv"))?;
        let cfg = sampling_config(config)?;
        let blocks = sampling::sample_blocks(&table, &cfg)?;
        let set = sampling::scenario_set_from_blocks(&table, &cfg, &blocks, &node_order)?;
        for r in renewables.iter_mut() {
            r.profile = sampling::profile_from_blocks(&table, &r.id, &blocks, cfg.hours_per_season)?;
        }
        set
    } else {
        let set = read_explicit_scenarios(dir, &node_order)?;
        read_profiles(dir, &mut renewables, &set)?;
        set
    };

    let season_labels: Vec<String> = scenarios.season_labels().map(str::to_string).collect();
    read_gen_costs(dir, &mut generators, &season_labels)?;
    read_energy_limits(dir, &mut generators, &season_labels, scenarios.n_scenarios())?;

    let mut scenarios = scenarios;
    if let Some(w) = config.get("period_weight") {
        scenarios.period_weight = match w {
            "annual" => ScenarioSet::annual_weight(scenarios.n_periods),
            v => v
                .parse()
                .map_err(|_| Error::Config(format!("period_weight must be a number or 'annual', got '{v}'")))?,
        };
    }

    let network = Network::new(nodes, lines, generators, renewables);
    let report = validate(&network, &scenarios);
    if !report.is_ok() {
        return Err(Error::Invalid(report.violations));
    }
    Ok((network, scenarios))
}

pub fn sampling_config(config: &KeyValueConfig) -> Result<SamplingConfig> {
    let d = SamplingConfig::default();
    let year_range = match config.get("year_range") {
        None => d.year_range,
        Some(v) => {
            let parse = |s: &str| {
                s.trim()
                    .parse::<i32>()
                    .map_err(|_| Error::Config(format!("invalid year_range '{v}'")))
            };
            match v.split_once('-') {
                Some((a, b)) => (parse(a)?, parse(b)?),
                None => {
                    let y = parse(v)?;
                    (y, y)
                }
            }
        }
    };
    Ok(SamplingConfig {
        n_scenarios: config.get_or("n_scenarios", d.n_scenarios)?,
        hours_per_season: config.get_or("hours_per_season", d.hours_per_season)?,
        seasons: d.seasons,
        seed: config.get_or("seed", d.seed)?,
        year_range,
        elasticity: config.get_or("elasticity", d.elasticity)?,
    })
}

fn read_nodes(dir: &Path) -> Result<Vec<Node>> {
    let t = required(dir, "nodes.csv")?;
    t.require_columns(&["node_id", "country"])?;
    t.records
        .iter()
        .map(|r| Ok(Node::new(t.str(r, "node_id")?, t.str(r, "country")?)))
        .collect()
}

fn check_node(t: &CsvTable, r: &(usize, csv::StringRecord), col: &str, nodes: &HashMap<&str, ()>) -> Result<String> {
    let id = t.str(r, col)?;
    if !nodes.contains_key(id) {
        return Err(t.err(r.0, col, format!("unknown node id '{id}'")));
    }
    Ok(id.to_string())
}

fn read_lines(dir: &Path, nodes: &HashMap<&str, ()>) -> Result<Vec<Line>> {
    let t = required(dir, "lines.csv")?;
    t.require_columns(&["line_id", "from", "to", "f_max_mw", "inv_cost_eur_per_mw_yr", "expandable"])?;
    t.records
        .iter()
        .map(|r| {
            Ok(Line {
                id: t.str(r, "line_id")?.to_string(),
                from_node: check_node(&t, r, "from", nodes)?,
                to_node: check_node(&t, r, "to", nodes)?,
                f_max: t.f64(r, "f_max_mw")?,
                inv_cost: t.f64(r, "inv_cost_eur_per_mw_yr")?,
                expandable: t.flag(r, "expandable")?,
            })
        })
        .collect()
}

fn read_generators(dir: &Path, nodes: &HashMap<&str, ()>) -> Result<Vec<Generator>> {
    let Some(t) = optional(dir, "generators.csv")? else {
        return Ok(Vec::new());
    };
    t.require_columns(&["gen_id", "node_id", "g_max_mw", "inv_cost_eur_per_mw_yr", "expandable"])?;
    t.records
        .iter()
        .map(|r| {
            let mut g = Generator::new(t.str(r, "gen_id")?, check_node(&t, r, "node_id", nodes)?, t.f64(r, "g_max_mw")?);
            g.inv_cost = t.f64(r, "inv_cost_eur_per_mw_yr")?;
            g.expandable = t.flag(r, "expandable")?;
            if t.opt_str(r, "cost_slope_eur_per_mwh_per_mw").is_some() {
                g.cost_slope = t.f64(r, "cost_slope_eur_per_mwh_per_mw")?;
            }
            Ok(g)
        })
        .collect()
}

fn gen_position(t: &CsvTable, r: &(usize, csv::StringRecord), gens: &[Generator]) -> Result<usize> {
    let id = t.str(r, "gen_id")?;
    gens.iter()
        .position(|g| g.id == id)
        .ok_or_else(|| t.err(r.0, "gen_id", format!("unknown generator id '{id}'")))
}

fn season_list<'a>(t: &CsvTable, r: &(usize, csv::StringRecord), seasons: &'a [String]) -> Result<Vec<&'a str>> {
    let s = t.str(r, "season")?;
    if s == "*" {
        return Ok(seasons.iter().map(String::as_str).collect());
    }
    seasons
        .iter()
        .find(|l| l.as_str() == s)
        .map(|l| vec![l.as_str()])
        .ok_or_else(|| t.err(r.0, "season", format!("unknown season '{s}'")))
}

fn read_gen_costs(dir: &Path, gens: &mut [Generator], seasons: &[String]) -> Result<()> {
    let Some(t) = optional(dir, "gen_costs.csv")? else {
        return Ok(());
    };
    t.require_columns(&["gen_id", "season", "marg_cost_eur_per_mwh"])?;
    for r in &t.records {
        let g = gen_position(&t, r, gens)?;
        let cost = t.f64(r, "marg_cost_eur_per_mwh")?;
        for s in season_list(&t, r, seasons)? {
            gens[g].marg_cost.insert(s.to_string(), cost);
        }
    }
    Ok(())
}

fn read_energy_limits(dir: &Path, gens: &mut [Generator], seasons: &[String], n_scenarios: usize) -> Result<()> {
    let Some(t) = optional(dir, "gen_energy_limits.csv")? else {
        return Ok(());
    };
    t.require_columns(&["gen_id", "scenario", "season", "q_max_mwh"])?;
    for r in &t.records {
        let g = gen_position(&t, r, gens)?;
        let q = t.f64(r, "q_max_mwh")?;
        let scenarios: Vec<usize> = match t.str(r, "scenario")? {
            "*" => (0..n_scenarios).collect(),
            _ => {
                let w = t.usize(r, "scenario")?;
                if w >= n_scenarios {
                    return Err(t.err(r.0, "scenario", format!("scenario {w} out of range 0..{n_scenarios}")));
                }
                vec![w]
            }
        };
        for s in season_list(&t, r, seasons)? {
            for &w in &scenarios {
                gens[g].energy_limits.insert((w, s.to_string()), q);
            }
        }
    }
    Ok(())
}

fn read_renewables(dir: &Path, nodes: &HashMap<&str, ()>) -> Result<Vec<Renewable>> {
    let Some(t) = optional(dir, "renewables.csv")? else {
        return Ok(Vec::new());
    };
    t.require_columns(&["ren_id", "node_id", "g_r_mw", "inv_cost_eur_per_mw_yr", "expandable"])?;
    t.records
        .iter()
        .map(|r| {
            Ok(Renewable {
                id: t.str(r, "ren_id")?.to_string(),
                node: check_node(&t, r, "node_id", nodes)?,
                g_r: t.f64(r, "g_r_mw")?,
                inv_cost: t.f64(r, "inv_cost_eur_per_mw_yr")?,
                profile: Vec::new(),
                expandable: t.flag(r, "expandable")?,
            })
        })
        .collect()
}

fn read_explicit_scenarios(dir: &Path, node_order: &[String]) -> Result<ScenarioSet> {
    let st = required(dir, "scenarios.csv")?;
    st.require_columns(&["scenario", "probability"])?;
    let mut probs: BTreeMap<usize, f64> = BTreeMap::new();
    for r in &st.records {
        let w = st.usize(r, "scenario")?;
        if probs.insert(w, st.f64(r, "probability")?).is_some() {
            return Err(st.err(r.0, "scenario", format!("duplicate scenario {w}")));
        }
    }
    let n_sc = probs.len();
    if probs.keys().copied().ne(0..n_sc) {
        return Err(st.err(1, "scenario", "scenarios must be numbered 0..n-1"));
    }

    let pt = required(dir, "periods.csv")?;
    pt.require_columns(&["period", "season"])?;
    let mut seasons: Vec<Season> = Vec::new();
    let mut n_periods = 0usize;
    for r in &pt.records {
        let t = pt.usize(r, "period")?;
        let label = pt.str(r, "season")?;
        n_periods = n_periods.max(t + 1);
        match seasons.iter_mut().find(|s| s.label == label) {
            Some(s) => s.periods.push(t),
            None => seasons.push(Season {
                label: label.to_string(),
                periods: vec![t],
            }),
        }
    }

    let dt = required(dir, "demand_curves.csv")?;
    dt.require_columns(&["scenario", "node_id", "period", "slope", "intercept"])?;
    let mut demand: Vec<Vec<Vec<Option<DemandCurve>>>> = vec![vec![vec![None; n_periods]; node_order.len()]; n_sc];
    for r in &dt.records {
        let w = dt.usize(r, "scenario")?;
        let t = dt.usize(r, "period")?;
        let node = dt.str(r, "node_id")?;
        let n = node_order
            .iter()
            .position(|id| id == node)
            .ok_or_else(|| dt.err(r.0, "node_id", format!("unknown node id '{node}'")))?;
        if w >= n_sc {
            return Err(dt.err(r.0, "scenario", format!("scenario {w} not in scenarios.csv")));
        }
        if t >= n_periods {
            return Err(dt.err(r.0, "period", format!("period {t} not in periods.csv")));
        }
        let cell = &mut demand[w][n][t];
        if cell.is_some() {
            return Err(dt.err(r.0, "period", "duplicate demand curve"));
        }
        *cell = Some(DemandCurve::new(dt.f64(r, "slope")?, dt.f64(r, "intercept")?));
    }
    let demand = demand
        .into_iter()
        .enumerate()
        .map(|(w, per_node)| {
            per_node
                .into_iter()
                .enumerate()
                .map(|(n, series)| {
                    series
                        .into_iter()
                        .enumerate()
                        .map(|(t, c)| {
                            c.ok_or_else(|| {
                                dt.err(
                                    0,
                                    "period",
                                    format!("missing demand curve for scenario {w}, node '{}', period {t}", node_order[n]),
                                )
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScenarioSet {
        probabilities: probs.into_values().collect(),
        seasons,
        n_periods,
        demand,
        period_weight: 1.0,
    })
}

fn read_profiles(dir: &Path, renewables: &mut [Renewable], sc: &ScenarioSet) -> Result<()> {
    if renewables.is_empty() {
        return Ok(());
    }
    let t = required(dir, "ren_profiles.csv")?;
    t.require_columns(&["ren_id", "scenario", "period", "factor"])?;
    let mut filled: Vec<Vec<Vec<bool>>> = renewables
        .iter()
        .map(|_| vec![vec![false; sc.n_periods]; sc.n_scenarios()])
        .collect();
    for r in renewables.iter_mut() {
        r.profile = vec![vec![0.0; sc.n_periods]; sc.n_scenarios()];
    }
    for rec in &t.records {
        let id = t.str(rec, "ren_id")?;
        let k = renewables
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| t.err(rec.0, "ren_id", format!("unknown renewable id '{id}'")))?;
        let w = t.usize(rec, "scenario")?;
        let p = t.usize(rec, "period")?;
        if w >= sc.n_scenarios() || p >= sc.n_periods {
            return Err(t.err(rec.0, "period", format!("scenario {w} / period {p} out of range")));
        }
        renewables[k].profile[w][p] = t.f64(rec, "factor")?;
        filled[k][w][p] = true;
    }
    for (k, r) in renewables.iter().enumerate() {
        if filled[k].iter().any(|row| row.iter().any(|f| !f)) {
            return Err(t.err(0, "factor", format!("renewable '{}' has an incomplete profile", r.id)));
        }
    }
    Ok(())
}

/// Reads `timeseries.csv`: `timestamp_iso8601,node_id,price_eur_mwh,demand_mw`
/// followed by one factor column per renewable id. Factor cells may be left
/// empty on rows of nodes that do not host that renewable.
pub fn read_timeseries(path: &Path) -> Result<TimeSeriesTable> {
    let t = CsvTable::read(path)?;
    let base = ["timestamp_iso8601", "node_id", "price_eur_mwh", "demand_mw"];
    t.require_columns(&base)?;
    let factor_cols: Vec<String> = t
        .header_names
        .iter()
        .filter(|h| !base.contains(&h.as_str()))
        .cloned()
        .collect();

    let mut nodes: Vec<String> = Vec::new();
    let mut by_ts: BTreeMap<NaiveDateTime, Vec<(usize, f64, f64, Vec<Option<f64>>)>> = BTreeMap::new();
    for r in &t.records {
        let raw = t.str(r, "timestamp_iso8601")?;
        let ts = parse_timestamp(raw).ok_or_else(|| t.err(r.0, "timestamp_iso8601", format!("invalid timestamp '{raw}'")))?;
        let node = t.str(r, "node_id")?;
        let n = match nodes.iter().position(|x| x == node) {
            Some(n) => n,
            None => {
                nodes.push(node.to_string());
                nodes.len() - 1
            }
        };
        let mut factors = Vec::with_capacity(factor_cols.len());
        for c in &factor_cols {
            factors.push(match t.opt_str(r, c) {
                None => None,
                Some(_) => Some(t.f64(r, c)?),
            });
        }
        let entry = by_ts.entry(ts).or_default();
        if entry.iter().any(|e| e.0 == n) {
            return Err(t.err(r.0, "node_id", format!("duplicate row for node '{node}' at {raw}")));
        }
        entry.push((n, t.f64(r, "price_eur_mwh")?, t.f64(r, "demand_mw")?, factors));
    }

    let h = by_ts.len();
    let mut timestamps = Vec::with_capacity(h);
    let mut price = Vec::with_capacity(h);
    let mut demand = Vec::with_capacity(h);
    let mut factors: BTreeMap<String, Vec<f64>> = factor_cols.iter().map(|c| (c.clone(), vec![f64::NAN; h])).collect();
    for (i, (ts, rows)) in by_ts.into_iter().enumerate() {
        if rows.len() != nodes.len() {
            return Err(Error::InsufficientData(format!(
                "{}: {} has rows for {} of {} nodes",
                path.display(),
                ts,
                rows.len(),
                nodes.len()
            )));
        }
        let mut p = vec![0.0; nodes.len()];
        let mut d = vec![0.0; nodes.len()];
        for (n, pr, de, fs) in rows {
            p[n] = pr;
            d[n] = de;
            for (c, v) in factor_cols.iter().zip(fs) {
                if let Some(v) = v {
                    factors.get_mut(c).expect("column")[i] = v;
                }
            }
        }
        timestamps.push(ts);
        price.push(p);
        demand.push(d);
    }
    let table = TimeSeriesTable {
        timestamps,
        nodes,
        price,
        demand,
        factors,
    };
    table.check()?;
    Ok(table)
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    fn three_node_dir() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        let p = d.path();
        write(p, "nodes.csv", "node_id,country\nn1,C1\nn2,C2\nn3,C3\n");
        write(
            p,
            "lines.csv",
            "line_id,from,to,f_max_mw,inv_cost_eur_per_mw_yr,expandable\nl12,n1,n2,inf,0,0\nl23,n2,n3,0,0,1\n",
        );
        write(
            p,
            "generators.csv",
            "gen_id,node_id,g_max_mw,inv_cost_eur_per_mw_yr,expandable,cost_slope_eur_per_mwh_per_mw\ns1,n1,inf,0,0,1\n",
        );
        write(p, "gen_costs.csv", "gen_id,season,marg_cost_eur_per_mwh\ns1,*,0\n");
        write(p, "scenarios.csv", "scenario,probability\n0,1\n");
        write(p, "periods.csv", "period,season\n0,all\n");
        write(
            p,
            "demand_curves.csv",
            "scenario,node_id,period,slope,intercept\n0,n1,0,-1,0\n0,n2,0,-1,6\n0,n3,0,-1,6\n",
        );
        d
    }

    #[test]
    fn loads_explicit_three_node_instance() {
        let d = three_node_dir();
        let (net, sc) = load_network(d.path(), &KeyValueConfig::default()).unwrap();
        assert_eq!(net.nodes.len(), 3);
        assert_eq!(net.lines.len(), 2);
        assert!(net.lines[0].f_max.is_infinite());
        assert_eq!(net.generators[0].cost_slope, 1.0);
        assert_eq!(sc.period_weight, 1.0);
        assert_eq!(sc.demand[0][1][0], DemandCurve::new(-1.0, 6.0));
    }

    #[test]
    fn unknown_generator_node_names_id_and_row() {
        let d = three_node_dir();
        write(
            d.path(),
            "generators.csv",
            "gen_id,node_id,g_max_mw,inv_cost_eur_per_mw_yr,expandable\ns1,n1,10,0,0\ns2,nowhere,10,0,0\n",
        );
        let err = load_network(d.path(), &KeyValueConfig::default()).unwrap_err();
        match err {
            Error::Parse { row, column, message, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "node_id");
                assert!(message.contains("nowhere"));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn bad_number_reports_location() {
        let d = three_node_dir();
        write(
            d.path(),
            "lines.csv",
            "line_id,from,to,f_max_mw,inv_cost_eur_per_mw_yr,expandable\nl12,n1,n2,lots,0,0\n",
        );
        let err = load_network(d.path(), &KeyValueConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, ref column, .. } if column == "f_max_mw"), "{err}");
    }

    #[test]
    fn validation_failures_are_returned() {
        let d = three_node_dir();
        write(d.path(), "scenarios.csv", "scenario,probability\n0,0.6\n");
        let err = load_network(d.path(), &KeyValueConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Invalid(ref v) if !v.is_empty()));
    }

    #[test]
    fn period_weight_override() {
        let d = three_node_dir();
        let mut cfg = KeyValueConfig::default();
        cfg.set("period_weight", "annual");
        let (_, sc) = load_network(d.path(), &cfg).unwrap();
        assert_eq!(sc.period_weight, 8760.0);
    }

    #[test]
    fn timeseries_mode_samples_blocks() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path();
        write(p, "nodes.csv", "node_id,country\na,A\nb,B\n");
        write(
            p,
            "lines.csv",
            "line_id,from,to,f_max_mw,inv_cost_eur_per_mw_yr,expandable\nab,a,b,10,100,1\n",
        );
        write(p, "renewables.csv", "ren_id,node_id,g_r_mw,inv_cost_eur_per_mw_yr,expandable\nw,a,5,0,0\n");
        let mut ts = String::from("timestamp_iso8601,node_id,price_eur_mwh,demand_mw,w\n");
        for month in [1, 4, 7, 10] {
            for h in 0..6 {
                ts.push_str(&format!("2017-{month:02}-03T{h:02}:00:00,a,{},100,0.{h}\n", 30 + h));
                ts.push_str(&format!("2017-{month:02}-03T{h:02}:00:00,b,{},80,\n", 20 + h));
            }
        }
        write(p, "timeseries.csv", &ts);
        let cfg = KeyValueConfig::parse("n_scenarios=3\nhours_per_season=4\nseed=5\nyear_range=2017\n").unwrap();
        let (net, sc) = load_network(p, &cfg).unwrap();
        assert_eq!(sc.n_scenarios(), 3);
        assert_eq!(sc.n_periods, 16);
        assert_eq!(sc.period_weight, 8760.0 / 16.0);
        assert_eq!(net.renewables[0].profile.len(), 3);
        assert_eq!(net.renewables[0].profile[0].len(), 16);
    }
}

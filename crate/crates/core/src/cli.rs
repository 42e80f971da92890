//! Command-line front end: ingest, solve both plans, account welfare,
//! calibrate mechanisms and report risk.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::analytic::{self, LinearCurve, TwoNodeInput};
use crate::compensation::{self, CompensationSchedule, LineObservables, Mechanism, ShareRule};
use crate::equilibrium::{self, DispatchSolution, ExpansionMask, ToleranceSet};
use crate::error::{Error, Result};
use crate::ingest::{load_network, KeyValueConfig};
use crate::model::{Network, ScenarioSet};
use crate::risk::{self, LossMode};
use crate::welfare::{self, AllocationRule, DeltaWelfare};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "tepcomp", version, about = "Transmission expansion welfare and compensation analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate an instance.
    Validate(RunArgs),
    /// Closed-form reference cases.
    #[command(subcommand)]
    Analytic(AnalyticCase),
    /// Solve the plans without and with the candidate line and write welfare deltas.
    Compare(RunArgs),
    /// Calibrate mechanisms on the deltas of a previous `compare` run.
    Compensate(RunArgs),
    /// `compare` followed by `compensate`.
    Report(RunArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Candidate line id.
    #[arg(long)]
    pub line: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CVaR level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated list, e.g. `none,lump_sum,ppa:NO,flow,value,ideal`.
    #[arg(long)]
    pub mechanisms: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Compute CVaR on −NTW instead of the floored loss.
    #[arg(long)]
    pub cvar_on_ntw: bool,
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCase {
    /// Two nodes with linear curves given as `intercept,slope`.
    TwoNode {
        #[arg(long, default_value = "10,-1", value_parser = parse_curve)]
        d1: LinearCurve,
        #[arg(long, default_value = "2,2", value_parser = parse_curve)]
        s1: LinearCurve,
        #[arg(long, default_value = "10,-2", value_parser = parse_curve)]
        d2: LinearCurve,
        #[arg(long, default_value = "1,1", value_parser = parse_curve)]
        s2: LinearCurve,
        /// Fixed line capacity, MW.
        #[arg(long, conflicts_with = "cost")]
        capacity: Option<f64>,
        /// Marginal line cost; the optimal capacity is reported.
        #[arg(long)]
        cost: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Supply node feeding two demand nodes, before and after the second line.
    ThreeNode {
        #[arg(long, default_value = "0,1", value_parser = parse_curve)]
        s1: LinearCurve,
        #[arg(long, default_value = "6,-1", value_parser = parse_curve)]
        d2: LinearCurve,
        #[arg(long, default_value = "6,-1", value_parser = parse_curve)]
        d3: LinearCurve,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_curve(s: &str) -> std::result::Result<LinearCurve, String> {
    let (a, b) = s.split_once(',').ok_or("expected intercept,slope")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("invalid number '{v}'"));
    Ok(LinearCurve::new(num(a)?, num(b)?))
}

/// Settings of one run after applying command-line overrides.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Effective key/value settings; hashed into the manifest.
    pub raw: KeyValueConfig,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub line: Option<String>,
    pub deny_lines: Vec<String>,
    pub participants: Vec<String>,
    pub shares: Vec<f64>,
    /// `None` selects every mechanism applicable to the candidate line.
    pub mechanisms: Option<Vec<Mechanism>>,
    pub alpha: f64,
    pub loss_mode: LossMode,
    pub tolerances: ToleranceSet,
    pub allocation: AllocationRule,
}

impl RunConfig {
    pub fn load(args: &RunArgs) -> Result<Self> {
        let mut raw = KeyValueConfig::read(&args.config)?;
        if let Some(l) = &args.line {
            raw.set("line", l.clone());
        }
        if let Some(s) = args.seed {
            raw.set("seed", s.to_string());
        }
        if let Some(a) = args.alpha {
            raw.set("alpha", a.to_string());
        }
        if let Some(m) = &args.mechanisms {
            raw.set("mechanisms", m.clone());
        }
        if args.cvar_on_ntw {
            raw.set("loss_mode", "negative_ntw");
        }
        let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
        let data_dir = match raw.get("data_dir") {
            Some(d) => base.join(d),
            None => base,
        };
        let out_dir = match &args.out {
            Some(o) => o.clone(),
            None => PathBuf::from(raw.get("out").unwrap_or("out")),
        };
        Self::from_raw(raw, data_dir, out_dir)
    }

    pub fn from_raw(raw: KeyValueConfig, data_dir: PathBuf, out_dir: PathBuf) -> Result<Self> {
        let mechanisms = match raw.get("mechanisms") {
            None => None,
            Some(_) => {
                let list = raw.get_list("mechanisms");
                if list.is_empty() {
                    return Err(Error::Config("the mechanism list is empty".into()));
                }
                Some(list.iter().map(|m| m.parse()).collect::<Result<Vec<Mechanism>>>()?)
            }
        };
        let alpha = raw.get_or("alpha", risk::DEFAULT_ALPHA)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let loss_mode = match raw.get("loss_mode").unwrap_or("floored") {
            "floored" => LossMode::Floored,
            "negative_ntw" => LossMode::NegativeNtw,
            v => return Err(Error::Config(format!("unknown loss_mode '{v}'"))),
        };
        let d = ToleranceSet::default();
        let tolerances = ToleranceSet {
            kkt: raw.get_or("tol_kkt", d.kkt)?,
            feasibility: raw.get_or("tol_feasibility", d.feasibility)?,
            ipm: raw.get_or("tol_ipm", d.ipm)?,
            max_iter: raw.get_or("max_iter", d.max_iter)?,
            start_seed: raw.get_parsed("solver_seed")?,
        };
        let mut allocation = AllocationRule {
            default_from_share: raw.get_or("allocation_from_share", 0.5)?,
            ..AllocationRule::default()
        };
        for (k, v) in raw.entries() {
            let parse = || {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("cannot parse value '{v}' of key '{k}'")))
            };
            if let Some(line) = k.strip_prefix("rent_from_share.") {
                allocation.rent_from_share.insert(line.to_string(), parse()?);
            } else if let Some(line) = k.strip_prefix("cost_from_share.") {
                allocation.cost_from_share.insert(line.to_string(), parse()?);
            }
        }
        let shares = raw
            .get_list("shares")
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid share '{s}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            line: raw.get("line").map(str::to_string),
            deny_lines: raw.get_list("deny_lines"),
            participants: raw.get_list("participants"),
            shares,
            mechanisms,
            alpha,
            loss_mode,
            tolerances,
            allocation,
            data_dir,
            out_dir,
            raw,
        })
    }

    pub fn candidate(&self, network: &Network) -> Result<String> {
        let id = self
            .line
            .clone()
            .ok_or_else(|| Error::Config("no candidate line given (use --line or the 'line' key)".into()))?;
        let l = network
            .line_index(&id)
            .ok_or_else(|| Error::Config(format!("candidate line '{id}' does not exist")))?;
        if !network.lines[l].expandable {
            return Err(Error::Config(format!("candidate line '{id}' is not expandable")));
        }
        Ok(id)
    }

    /// Participants and shares; defaults to the two ends of the line with
    /// equal shares.
    pub fn share_rule(&self, obs: &LineObservables) -> Result<ShareRule> {
        let countries = if self.participants.is_empty() {
            if obs.from_country == obs.to_country {
                return Err(Error::Config("the candidate line does not cross a border; list participants".into()));
            }
            vec![obs.from_country.clone(), obs.to_country.clone()]
        } else {
            self.participants.clone()
        };
        if self.shares.is_empty() {
            ShareRule::equal(countries)
        } else {
            ShareRule::new(countries, self.shares.clone())
        }
    }

    pub fn mechanisms(&self, rule: &ShareRule) -> Vec<Mechanism> {
        match &self.mechanisms {
            Some(m) => m.clone(),
            None => {
                let mut m = vec![Mechanism::None, Mechanism::LumpSum];
                if rule.countries().len() == 2 {
                    m.extend(rule.countries().iter().map(|c| Mechanism::Ppa(c.clone())));
                }
                m.extend([Mechanism::Flow, Mechanism::Value, Mechanism::Ideal]);
                m
            }
        }
    }

    pub fn config_hash(&self) -> String {
        Sha256::digest(self.raw.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Reproduction record: hash, seed, tolerances, version and the
    /// effective settings. No timestamps, so reruns are byte-identical.
    pub fn write_manifest(&self, command: &str) -> Result<()> {
        let t = &self.tolerances;
        let mut text = format!(
            "tool=tepcomp\nversion={VERSION}\ncommand={command}\nconfig_sha256={}\nseed={}\nsolver_seed={}\n\
             tol_kkt={}\ntol_feasibility={}\ntol_ipm={}\nmax_iter={}\nalpha={}\n",
            self.config_hash(),
            self.raw.get("seed").unwrap_or("default"),
            t.start_seed.map_or_else(|| "none".to_string(), |s| s.to_string()),
            t.kkt,
            t.feasibility,
            t.ipm,
            t.max_iter,
            self.alpha,
        );
        for line in self.raw.canonical().lines() {
            text.push_str("config.");
            text.push_str(line);
            text.push('\n');
        }
        let path = self.out_dir.join(format!("manifest_{command}.txt"));
        fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Results of `compare`.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub network: Network,
    pub scenarios: ScenarioSet,
    pub without: DispatchSolution,
    pub with: DispatchSolution,
    pub account_without: welfare::WelfareAccount,
    pub account_with: welfare::WelfareAccount,
    pub delta: DeltaWelfare,
    pub observables: LineObservables,
}

/// Solves both plans concurrently and accounts their welfare.
pub fn compare(cfg: &RunConfig) -> Result<Comparison> {
    let (network, scenarios) = load_network(&cfg.data_dir, &cfg.raw)?;
    let line = cfg.candidate(&network)?;
    let mut base = ExpansionMask::allow_all(&network);
    for id in &cfg.deny_lines {
        base.set_line(&network, id, false)?;
    }
    let mut closed = base.clone();
    closed.set_line(&network, &line, false)?;
    let mut open = base;
    if !cfg.deny_lines.contains(&line) {
        open.set_line(&network, &line, true)?;
    }
    let run = |mask: &ExpansionMask| -> Result<DispatchSolution> {
        let problem = equilibrium::assemble(&network, &scenarios, mask)?;
        equilibrium::solve(&problem, &cfg.tolerances)
    };
    let (without, with) = std::thread::scope(|s| {
        let h = s.spawn(|| run(&closed));
        let with = run(&open);
        (h.join().expect("solver thread panicked"), with)
    });
    let (without, with) = (without?, with?);
    let account_without = welfare::account(&network, &scenarios, &without, &cfg.allocation)?;
    let account_with = welfare::account(&network, &scenarios, &with, &cfg.allocation)?;
    let delta = welfare::delta(&account_with, &account_without)?;
    let observables = LineObservables::from_solution(&network, &scenarios, &with, &line)?;
    Ok(Comparison {
        network,
        scenarios,
        without,
        with,
        account_without,
        account_with,
        delta,
        observables,
    })
}

fn write_plan(dir: &Path, network: &Network, sol: &DispatchSolution, acc: &welfare::WelfareAccount) -> Result<()> {
    create_dir(dir)?;
    equilibrium::write_solution_csv(&dir.join("solution.csv"), network, sol)?;
    equilibrium::write_prices_csv(&dir.join("prices.csv"), network, sol)?;
    welfare::write_welfare_csv(&dir.join("welfare.csv"), acc)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Comparison> {
    let c = compare(cfg)?;
    let out = &cfg.out_dir;
    create_dir(out)?;
    write_plan(&out.join("without"), &c.network, &c.without, &c.account_without)?;
    write_plan(&out.join("with"), &c.network, &c.with, &c.account_with)?;
    welfare::write_delta_csv(&out.join("delta.csv"), &c.delta)?;
    welfare::write_probabilities_csv(&out.join("scenarios.csv"), &c.delta.probabilities)?;
    compensation::write_line_obs_csv(&out.join("line_obs.csv"), &c.observables)?;
    cfg.write_manifest("compare")?;
    Ok(c)
}

/// Output of `compensate`.
#[derive(Debug, Clone)]
pub struct CompensationReport {
    pub schedules: Vec<CompensationSchedule>,
    pub risk: Vec<risk::RiskRow>,
    pub quantiles: Vec<risk::QuantileRow>,
    pub correlations: Vec<risk::CorrelationRow>,
    /// Mechanisms that could not be calibrated, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Calibrates every requested mechanism; failures are collected rather than
/// fatal unless nothing can be calibrated.
pub fn compensate(cfg: &RunConfig, delta: &DeltaWelfare, obs: &LineObservables) -> Result<CompensationReport> {
    let rule = cfg.share_rule(obs)?;
    let mechanisms = cfg.mechanisms(&rule);
    let mut report = CompensationReport {
        schedules: Vec::new(),
        risk: Vec::new(),
        quantiles: Vec::new(),
        correlations: risk::correlation_table(delta, obs)?,
        skipped: Vec::new(),
    };
    for m in &mechanisms {
        match compensation::calibrate(m, delta, &rule, obs) {
            Ok(s) => {
                let net = compensation::apply(delta, &s)?;
                report.risk.extend(risk::summary(&s, &net, cfg.alpha, cfg.loss_mode)?);
                report.quantiles.extend(risk::quantiles(&net)?);
                report.schedules.push(s);
            }
            Err(e) => report.skipped.push((m.to_string(), e.to_string())),
        }
    }
    if report.schedules.is_empty() {
        let reason = report
            .skipped
            .iter()
            .map(|(m, e)| format!("{m}: {e}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Calibration {
            mechanism: "all requested mechanisms".into(),
            reason,
        });
    }
    Ok(report)
}

fn write_ntw_csv(path: &Path, delta: &DeltaWelfare, schedules: &[CompensationSchedule]) -> Result<()> {
    use crate::equilibrium::export::{csv_writer, finish, fmt_f64, write_row};
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["mechanism", "country", "scenario", "ntw"].map(String::from))?;
    for s in schedules {
        let net = compensation::apply(delta, s)?;
        for (c, row) in net.countries.iter().zip(&net.ntw) {
            for (w, v) in row.iter().enumerate() {
                write_row(&mut wtr, path, &[s.mechanism.clone(), c.clone(), w.to_string(), fmt_f64(*v)])?;
            }
        }
    }
    finish(wtr, path)
}

pub fn cmd_compensate(cfg: &RunConfig) -> Result<CompensationReport> {
    let out = &cfg.out_dir;
    let probabilities = welfare::read_probabilities_csv(&out.join("scenarios.csv"))?;
    let delta = welfare::read_delta_csv(&out.join("delta.csv"), &probabilities)?;
    let obs = compensation::read_line_obs_csv(&out.join("line_obs.csv"), &probabilities)?;
    let report = compensate(cfg, &delta, &obs)?;
    for (m, e) in &report.skipped {
        eprintln!("warning: mechanism {m} skipped: {e}");
    }
    compensation::write_compensation_csv(&out.join("compensation.csv"), &report.schedules)?;
    compensation::write_parameters_csv(&out.join("parameters.csv"), &report.schedules)?;
    risk::write_risk_table_csv(&out.join("risk_table.csv"), &report.risk, cfg.alpha)?;
    risk::write_correlations_csv(&out.join("correlations.csv"), &report.correlations)?;
    risk::write_quantiles_csv(&out.join("quantiles.csv"), &report.quantiles)?;
    write_ntw_csv(&out.join("ntw.csv"), &delta, &report.schedules)?;
    cfg.write_manifest("compensate")?;
    Ok(report)
}

fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    let (network, scenarios) = load_network(&cfg.data_dir, &cfg.raw)?;
    if cfg.line.is_some() {
        cfg.candidate(&network)?;
    }
    println!(
        "ok: {} nodes, {} lines, {} generators, {} renewables, {} countries, {} scenarios x {} periods",
        network.nodes.len(),
        network.lines.len(),
        network.generators.len(),
        network.renewables.len(),
        network.countries().len(),
        scenarios.n_scenarios(),
        scenarios.n_periods
    );
    Ok(())
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| Error::Io { path, source })?;
    }
    Ok(())
}

fn cmd_analytic(case: &AnalyticCase) -> Result<()> {
    match case {
        AnalyticCase::TwoNode {
            d1,
            s1,
            d2,
            s2,
            capacity,
            cost,
            out,
        } => {
            let input = match (capacity, cost) {
                (_, Some(c)) => TwoNodeInput::MarginalCost(*c),
                (Some(x), None) => TwoNodeInput::Capacity(*x),
                (None, None) => TwoNodeInput::Capacity(f64::INFINITY),
            };
            let r = analytic::solve_two_node(*d1, *s1, *d2, *s2, input)?;
            let rows = [
                ("autarky_price_1", r.autarky[0]),
                ("autarky_price_2", r.autarky[1]),
                ("common_price", r.common_price),
                ("unconstrained_flow_2_to_1", r.unconstrained_flow),
                ("capacity", r.capacity),
                ("price_1", r.prices[0]),
                ("price_2", r.prices[1]),
                ("flow_2_to_1", r.flow),
                ("welfare_gain_1", r.welfare_gain[0]),
                ("welfare_gain_2", r.welfare_gain[1]),
                ("congestion_rent", r.congestion_rent),
            ];
            let mut text = String::from("quantity,value\n");
            for (k, v) in rows {
                text.push_str(&format!("{k},{v}\n"));
            }
            if let Some(x) = r.optimal_capacity {
                text.push_str(&format!("optimal_capacity,{x}\n"));
            }
            emit(out.as_deref(), "two_node.csv", &text)
        }
        AnalyticCase::ThreeNode { s1, d2, d3, out } => {
            let r = analytic::solve_three_node(*s1, *d2, *d3)?;
            let mut text = String::from("state,node,price,cs,ps,tw\n");
            for (name, st) in [("old", &r.old), ("new", &r.new)] {
                for n in 0..3 {
                    text.push_str(&format!("{name},{},{},{},{},{}\n", n + 1, st.price, st.cs[n], st.ps[n], st.tw[n]));
                }
                text.push_str(&format!("{name},system,{},,,{}\n", st.price, st.system));
            }
            for (n, d) in r.delta_tw().iter().enumerate() {
                text.push_str(&format!("delta,{},,,,{d}\n", n + 1));
            }
            emit(out.as_deref(), "three_node.csv", &text)
        }
    }
}

fn print_delta(delta: &DeltaWelfare) {
    println!("country,expected_delta_tw");
    for (c, e) in delta.countries.iter().zip(&delta.expected) {
        println!("{c},{e}");
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate(a) => cmd_validate(&RunConfig::load(a)?),
        Command::Analytic(case) => cmd_analytic(case),
        Command::Compare(a) => {
            let c = cmd_compare(&RunConfig::load(a)?)?;
            print_delta(&c.delta);
            Ok(())
        }
        Command::Compensate(a) => cmd_compensate(&RunConfig::load(a)?).map(|_| ()),
        Command::Report(a) => {
            let cfg = RunConfig::load(a)?;
            let c = cmd_compare(&cfg)?;
            print_delta(&c.delta);
            cmd_compensate(&cfg).map(|_| ())
        }
    }
}

/// Parses arguments, runs the command and maps the outcome to the exit code:
/// 0 success, 1 input error, 2 numerical failure.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

//! One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.
//! Runs without the libtest harness so the lines are never captured.

mod common;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tepcomp::cli::{self, CompensationReport, RunArgs, RunConfig};
use tepcomp::compensation::{self, ShareRule};
use tepcomp::equilibrium::{self, congestion_rent, verify_kkt, ExpansionMask, ToleranceSet};
use tepcomp::risk;
use tepcomp::welfare::{read_delta_csv, read_probabilities_csv, DeltaWelfare};

use common::{brute_force_welfare, fixture, random_instance, two_node, Shape};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn read_csv(path: &Path) -> Vec<HashMap<String, String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let headers = rdr.headers().unwrap().clone();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            headers.iter().map(String::from).zip(r.iter().map(String::from)).collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tepcomp")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Per-country TW of a single-scenario plan.
fn country_tw(path: &Path) -> HashMap<String, f64> {
    read_csv(path)
        .into_iter()
        .map(|r| (r["country"].clone(), num(&r, "tw")))
        .collect()
}

fn criterion_1(tmp: &Path) -> Outcome {
    let out = tmp.join("c1");
    let cfg = fixture("three_node").join("config.txt");
    let start = Instant::now();
    let (code, err) = run_cli(&["compare", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let elapsed = start.elapsed();
    check(code == 0, format!("compare exited with {code}: {err}"))?;
    let old = country_tw(&out.join("without/welfare.csv"));
    let new = country_tw(&out.join("with/welfare.csv"));
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-6;
    for (c, o, n) in [("C1", 4.5, 8.0), ("C2", 4.5, 2.0), ("C3", 0.0, 2.0)] {
        check(close(old[c], o), format!("old TW {c} = {}", old[c]))?;
        check(close(new[c], n), format!("new TW {c} = {}", new[c]))?;
    }
    check(close(old.values().sum(), 9.0), "old system TW")?;
    check(close(new.values().sum(), 12.0), "new system TW")?;
    let delta: HashMap<String, f64> = read_csv(&out.join("delta.csv"))
        .into_iter()
        .map(|r| (r["country"].clone(), num(&r, "delta_tw")))
        .collect();
    for (c, d) in [("C1", 3.5), ("C2", -2.5), ("C3", 2.0)] {
        check(close(delta[c], d), format!("delta TW {c} = {}", delta[c]))?;
    }
    check(elapsed < Duration::from_secs(1), format!("runtime {elapsed:?}"))?;
    Ok(format!("TW old (4.5, 4.5, 0), new (8, 2, 2), delta (3.5, -2.5, 2) in {elapsed:.0?}"))
}

fn criterion_2() -> Outcome {
    let gap = 10.0 / 3.0;
    let mut details = Vec::new();
    for c in [0.0, 1.0, 1.3, 4.0] {
        let (net, sc) = two_node(c);
        let problem = equilibrium::assemble(&net, &sc, &ExpansionMask::allow_all(&net)).map_err(|e| e.to_string())?;
        let sol = equilibrium::solve(&problem, &ToleranceSet::default()).map_err(|e| e.to_string())?;
        let x = sol.x[0];
        let spread = sol.price[0][0][0] - sol.price[0][1][0];
        if c >= gap {
            check(x.abs() <= 1e-9, format!("C = {c}: x = {x}, expected 0"))?;
        } else {
            check(x > 0.0, format!("C = {c}: no expansion"))?;
            check((spread - c).abs() <= 1e-5, format!("C = {c}: price spread {spread}"))?;
        }
        let rent = congestion_rent(&net, &sol, "l21").map_err(|e| e.to_string())?.expected;
        check((rent - c * x).abs() <= 1e-5, format!("C = {c}: rent {rent} vs C x {}", c * x))?;
        details.push(format!("C={c}: x={x:.4}"));
    }
    Ok(details.join(", "))
}

fn criterion_3(tmp: &Path) -> Outcome {
    let dir = tmp.join("c3");
    std::fs::create_dir_all(&dir).unwrap();
    for f in ["config.txt", "scenarios.csv", "delta.csv", "line_obs.csv"] {
        std::fs::copy(fixture("ppa_two_scenario").join(f), dir.join(f)).unwrap();
    }
    let cfg = dir.join("config.txt");
    let (code, err) = run_cli(&["compensate", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    check(code == 0, format!("compensate exited with {code}: {err}"))?;
    let params: HashMap<String, f64> = read_csv(&dir.join("parameters.csv"))
        .into_iter()
        .map(|r| (r["mechanism"].clone(), num(&r, "value")))
        .collect();
    check(params["ppa:A"] == 3.0, format!("PPA_A price {}", params["ppa:A"]))?;
    check(params["ppa:B"] == 4.5, format!("PPA_B price {}", params["ppa:B"]))?;
    let mut own = HashMap::new();
    for r in read_csv(&dir.join("compensation.csv")) {
        let base = r["mechanism"].trim_start_matches("ppa:").to_string();
        if base == r["country"] {
            own.entry(base).or_insert_with(Vec::new).push(num(&r, "amount"));
        }
    }
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12);
    check(close(&own["A"], &[20.0, 20.0]), format!("C_A {:?}", own["A"]))?;
    check(close(&own["B"], &[-25.0, -15.0]), format!("C_B {:?}", own["B"]))?;
    let sums: Vec<f64> = (0..2).map(|s| own["A"][s] + own["B"][s]).collect();
    check(close(&sums, &[-5.0, 5.0]), format!("sums {sums:?}"))?;
    Ok("PPA prices 3 and 4.5; C_A (20, 20), C_B (-25, -15); opposite PPAs leave (-5, +5)".into())
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut brute = 0;
    for i in 0..20 {
        let shape = if i < 6 {
            Shape {
                nodes: rng.gen_range(2..=3),
                scenarios: 1,
                periods: 1,
                rich: false,
            }
        } else {
            Shape {
                nodes: rng.gen_range(2..=5),
                scenarios: rng.gen_range(1..=4),
                periods: rng.gen_range(1..=6),
                rich: true,
            }
        };
        let (net, sc) = random_instance(&mut rng, &shape);
        let problem = equilibrium::assemble(&net, &sc, &ExpansionMask::allow_all(&net))
            .map_err(|e| format!("instance {i}: {e}"))?;
        let sol = equilibrium::solve(&problem, &ToleranceSet::default()).map_err(|e| format!("instance {i}: {e}"))?;
        let kkt = verify_kkt(&net, &sc, &sol).map_err(|e| format!("instance {i}: {e}"))?.max_relative();
        check(kkt <= 1e-6, format!("instance {i}: KKT residual {kkt:e}"))?;
        worst = worst.max(kkt);
        if i < 6 {
            let bf = brute_force_welfare(&net, &sc);
            let gap = (bf - sol.objective).abs();
            check(gap <= 1e-2, format!("instance {i}: objective {} vs grid {bf}", sol.objective))?;
            worst_gap = worst_gap.max(gap);
            brute += 1;
        }
    }
    Ok(format!(
        "20 instances, max KKT residual {worst:.1e}; {brute} grid-checked, max objective gap {worst_gap:.1e}"
    ))
}

struct Run {
    name: &'static str,
    delta: DeltaWelfare,
    rule: ShareRule,
    report: CompensationReport,
}

fn config(path: PathBuf) -> RunConfig {
    RunConfig::load(&RunArgs {
        config: path,
        ..Default::default()
    })
    .unwrap()
}

fn run_fixture(name: &'static str) -> Run {
    let cfg = config(fixture(name).join("config.txt"));
    let cmp = cli::compare(&cfg).unwrap();
    let report = cli::compensate(&cfg, &cmp.delta, &cmp.observables).unwrap();
    let rule = cfg.share_rule(&cmp.observables).unwrap();
    Run {
        name,
        delta: cmp.delta,
        rule,
        report,
    }
}

fn run_ppa_fixture() -> Run {
    let dir = fixture("ppa_two_scenario");
    let cfg = config(dir.join("config.txt"));
    let probs = read_probabilities_csv(&dir.join("scenarios.csv")).unwrap();
    let delta = read_delta_csv(&dir.join("delta.csv"), &probs).unwrap();
    let obs = compensation::read_line_obs_csv(&dir.join("line_obs.csv"), &probs).unwrap();
    let report = cli::compensate(&cfg, &delta, &obs).unwrap();
    let rule = cfg.share_rule(&obs).unwrap();
    Run {
        name: "ppa_two_scenario",
        delta,
        rule,
        report,
    }
}

fn criterion_5(runs: &[Run], synthetic: &Run) -> Outcome {
    let mut count = 0;
    for run in runs.iter().chain([synthetic]) {
        let t = compensation::targets(&run.delta, &run.rule).map_err(|e| e.to_string())?;
        let target: HashMap<&str, f64> = run.rule.countries().iter().map(String::as_str).zip(t).collect();
        check(run.report.skipped.is_empty(), format!("{}: skipped {:?}", run.name, run.report.skipped))?;
        for s in &run.report.schedules {
            if s.mechanism == "none" {
                continue;
            }
            for (c, e) in s.countries.iter().zip(s.expected()) {
                let t = target[c.as_str()];
                check(
                    (e - t).abs() <= 1e-9 * t.abs().max(1.0),
                    format!("{} {} {c}: E[C] {e} vs target {t}", run.name, s.mechanism),
                )?;
            }
            if !s.mechanism.starts_with("ppa:") {
                let imbalance = s.max_imbalance();
                check(imbalance <= 1e-6, format!("{} {}: imbalance {imbalance:e}", run.name, s.mechanism))?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} calibrated schedules across {} fixtures", runs.len() + 1))
}

fn criterion_6(synthetic: &Run) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(2..=5);
        let ns = rng.gen_range(2..=8);
        let raw: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.1..1.0)).collect();
        let probs: Vec<f64> = raw.iter().map(|r| r / raw.iter().sum::<f64>()).collect();
        let countries: Vec<String> = (0..n).map(|i| format!("C{i}")).collect();
        let values: Vec<Vec<f64>> = (0..n).map(|_| (0..ns).map(|_| rng.gen_range(-1e3..1e3)).collect()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut shares: Vec<f64> = w.iter().map(|x| x / w.iter().sum::<f64>()).collect();
        let head: f64 = shares[..n - 1].iter().sum();
        shares[n - 1] = 1.0 - head;
        let delta = DeltaWelfare::new(countries.clone(), probs.clone(), values.clone()).map_err(|e| e.to_string())?;
        let rule = ShareRule::new(countries, shares.clone()).map_err(|e| e.to_string())?;
        let sched = compensation::ideal_mech(&delta, &rule).map_err(|e| e.to_string())?;
        let net = compensation::apply(&delta, &sched).map_err(|e| e.to_string())?;
        let total: Vec<f64> = (0..ns).map(|s| values.iter().map(|v| v[s]).sum()).collect();
        let sd = risk::std_dev(&total, &probs);
        for (i, l) in shares.iter().enumerate() {
            let got = risk::std_dev(&net.ntw[i], &probs);
            let rel = (got - l * sd).abs() / (l * sd).max(1e-300);
            check(rel <= 1e-9, format!("std(NTW_{i}) {got} vs {}", l * sd))?;
            worst = worst.max(rel);
        }
    }
    let rows: Vec<_> = synthetic.report.risk.iter().filter(|r| r.mechanism == "ideal").collect();
    check(rows.len() == 2, "expected two ideal rows")?;
    let (a, b) = (rows[0], rows[1]);
    let same = |x: f64, y: f64| (x - y).abs() <= 1e-9 * x.abs().max(1.0);
    check(
        same(a.std_c, b.std_c)
            && same(a.std_ntw, b.std_ntw)
            && same(a.p_loss, b.p_loss)
            && same(a.e_loss, b.e_loss)
            && same(a.cvar_loss, b.cvar_loss),
        format!("ideal rows differ: {a:?} vs {b:?}"),
    )?;
    Ok(format!(
        "200 random deltas, max relative error {worst:.1e}; ideal rows {} and {} identical (std NTW {:.4e})",
        a.country, b.country, a.std_ntw
    ))
}

fn criterion_7() -> Outcome {
    let u = [0.2; 5];
    let cv = |l: &[f64], p: &[f64], a: f64| risk::cvar(l, p, a).map_err(|e| e.to_string());
    check((cv(&[10.0; 5], &u, 0.8)? - 10.0).abs() <= 1e-12, "constant losses")?;
    check((cv(&[0.0, 0.0, 0.0, 0.0, 100.0], &u, 0.8)? - 100.0).abs() <= 1e-12, "single tail atom")?;
    check((cv(&[0.0, 0.0, 0.0, 50.0, 100.0], &u, 0.9)? - 100.0).abs() <= 1e-12, "tail inside an atom")?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let n = rng.gen_range(1..=12);
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let p: Vec<f64> = raw.iter().map(|r| r / raw.iter().sum::<f64>()).collect();
        let a = rng.gen_range(0.05..0.95);
        let base = cv(&l, &p, a)?;
        let tol = 1e-9 * (1.0 + base.abs());
        let c = rng.gen_range(0.0..50.0);
        let shifted: Vec<f64> = l.iter().map(|x| x + c).collect();
        check((cv(&shifted, &p, a)? - base - c).abs() <= tol * 2.0, "translation")?;
        let k = rng.gen_range(0.0..5.0);
        let scaled: Vec<f64> = l.iter().map(|x| k * x).collect();
        check((cv(&scaled, &p, a)? - k * base).abs() <= tol * (1.0 + k), "positive homogeneity")?;
        let a2 = (a + rng.gen_range(0.0..0.04)).min(0.99);
        check(cv(&l, &p, a2)? >= base - tol, "monotone in alpha")?;
        check(base >= risk::mean(&l, &p) - tol, "CVaR below mean")?;
    }
    for _ in 0..200 {
        let n = 10;
        let k = rng.gen_range(1..n);
        let a = 1.0 - k as f64 / n as f64;
        let mut l: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..100.0)).collect();
        let got = cv(&l, &[0.1; 10], a)?;
        l.sort_by(|x, y| y.total_cmp(x));
        let oracle = l[..k].iter().sum::<f64>() / k as f64;
        check((got - oracle).abs() <= 1e-9 * (1.0 + oracle), format!("sort-average {got} vs {oracle}"))?;
    }
    Ok("worked examples, 500 coherence draws and 200 sort-and-average draws".into())
}

fn criterion_8(synthetic: &Run) -> Outcome {
    let rows = &synthetic.report.risk;
    let std_ntw = |m: &str, c: &str| {
        rows.iter()
            .find(|r| r.mechanism == m && r.country == c)
            .map(|r| r.std_ntw)
    };
    let corr = |x: &str, y: &str| {
        synthetic
            .report
            .correlations
            .iter()
            .find(|r| (r.x == x && r.y == y) || (r.x == y && r.y == x))
            .and_then(|r| r.value)
    };
    let mut notes = Vec::new();
    for c in synthetic.rule.countries() {
        let ideal = std_ntw("ideal", c).ok_or("missing ideal row")?;
        for r in rows.iter().filter(|r| &r.country == c) {
            check(ideal <= r.std_ntw * (1.0 + 1e-12), format!("(a) {c}: ideal {ideal:e} > {} {:e}", r.mechanism, r.std_ntw))?;
        }
        let series = format!("delta_tw:{c}");
        let (cf, cv) = (corr(&series, "flow"), corr(&series, "flow_value"));
        let (cf, cv) = (cf.ok_or("flow correlation undefined")?, cv.ok_or("value correlation undefined")?);
        let (flow, value) = (std_ntw("flow", c).ok_or("missing flow row")?, std_ntw("value", c).ok_or("missing value row")?);
        if cv.abs() >= cf.abs() {
            check(value <= flow, format!("(b) {c}: value {value:e} > flow {flow:e}"))?;
            notes.push(format!("(b) applies to {c}"));
        }
        let lump = rows
            .iter()
            .find(|r| r.mechanism == "lump_sum" && &r.country == c)
            .ok_or("missing lump_sum row")?;
        check(lump.std_c == 0.0, format!("(c) {c}: lump-sum std(C) = {:e}", lump.std_c))?;
    }
    Ok(format!("(a) and (c) hold for {:?}; {}", synthetic.rule.countries(), notes.join(", ")))
}

fn main() {
    let suite = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let synthetic = run_fixture("synthetic_ne");
    let runs = vec![
        run_fixture("three_node"),
        run_fixture("two_node"),
        run_ppa_fixture(),
    ];

    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "three-node exactness", criterion_1(tmp.path())),
        (2, "two-node optimality", criterion_2()),
        (3, "PPA worked example", criterion_3(tmp.path())),
        (4, "KKT verification", criterion_4()),
        (5, "mechanism calibration identity", criterion_5(&runs, &synthetic)),
        (6, "ideal-mechanism variance law", criterion_6(&synthetic)),
        (7, "CVaR suite", criterion_7()),
        (8, "synthetic case-study orderings", criterion_8(&synthetic)),
    ];
    let elapsed = suite.elapsed();
    let mut failed = Vec::new();
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(why) => {
                println!("criterion {n} ({name}): FAIL - {why}");
                failed.push(*n);
            }
        }
    }
    println!("suite runtime {elapsed:.1?} (budget 5 min)");
    if elapsed >= Duration::from_secs(300) {
        println!("runtime budget exceeded");
        std::process::exit(1);
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

//! Risk measures over scenario ensembles: dispersion, loss probability,
//! expected loss, CVaR and weighted correlations.

use std::path::Path;

use crate::compensation::{CompensationSchedule, LineObservables, NetWelfare};
use crate::equilibrium::export::{csv_writer, finish, fmt_f64, write_row};
use crate::error::{Error, Result};
use crate::welfare::{expectation, DeltaWelfare};

pub const DEFAULT_ALPHA: f64 = 0.8;

/// `L^ω = max(0, −NTW^ω)`.
pub fn loss(ntw: &[f64]) -> Vec<f64> {
    ntw.iter().map(|v| (-v).max(0.0)).collect()
}

fn check_weights(x: &[f64], p: &[f64]) -> Result<()> {
    if x.len() != p.len() || x.is_empty() {
        return Err(Error::Dimension(format!("{} values against {} probabilities", x.len(), p.len())));
    }
    if p.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Domain("probabilities must be nonnegative".into()));
    }
    Ok(())
}

/// `min_η η + (1−α)⁻¹·E[max(0, X − η)]`. The objective is convex and
/// piecewise linear with kinks at the atoms, so the minimum is attained at
/// one of them.
pub fn cvar(x: &[f64], p: &[f64], alpha: f64) -> Result<f64> {
    check_weights(x, p)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} is outside (0, 1)")));
    }
    let tail = |eta: f64| -> f64 {
        let excess: f64 = x.iter().zip(p).map(|(v, w)| w * (v - eta).max(0.0)).sum();
        eta + excess / (1.0 - alpha)
    };
    Ok(x.iter()
        .zip(p)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, _)| tail(*v))
        .fold(f64::INFINITY, f64::min))
}

pub fn mean(x: &[f64], p: &[f64]) -> f64 {
    expectation(x, p)
}

/// Population standard deviation under the weights `p`.
pub fn std_dev(x: &[f64], p: &[f64]) -> f64 {
    // Probabilities that do not sum to exactly one would leave a residue.
    if x.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(x, p);
    x.iter().zip(p).map(|(v, w)| w * (v - m).powi(2)).sum::<f64>().sqrt()
}

/// Weighted Pearson coefficient.
pub fn correlation(x: &[f64], y: &[f64], p: &[f64]) -> Result<f64> {
    check_weights(x, p)?;
    check_weights(y, p)?;
    let (mx, my) = (mean(x, p), mean(y, p));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for ((a, b), w) in x.iter().zip(y).zip(p) {
        sxy += w * (a - mx) * (b - my);
        sxx += w * (a - mx).powi(2);
        syy += w * (b - my).powi(2);
    }
    let tiny = |s: f64, m: f64, v: &[f64]| {
        let scale = v.iter().map(|a| a.abs()).fold(m.abs(), f64::max);
        s <= (1e-12 * scale).powi(2)
    };
    if tiny(sxx, mx, x) || tiny(syy, my, y) {
        return Err(Error::Degenerate("correlation is undefined for a series with zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Smallest value whose cumulative weight reaches `q`.
pub fn quantile(x: &[f64], p: &[f64], q: f64) -> Result<f64> {
    check_weights(x, p)?;
    let mut atoms: Vec<(f64, f64)> = x.iter().copied().zip(p.iter().copied()).filter(|a| a.1 > 0.0).collect();
    if atoms.is_empty() {
        return Err(Error::InsufficientData("no scenario has positive probability".into()));
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let mut cum = 0.0;
    for (v, w) in &atoms {
        cum += w / total;
        if cum >= q - 1e-12 {
            return Ok(*v);
        }
    }
    Ok(atoms.last().expect("nonempty").0)
}

/// Which variable the CVaR column is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossMode {
    /// Losses with gains counted as zero.
    #[default]
    Floored,
    /// `−NTW` directly, so gains offset losses in the tail average.
    NegativeNtw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskRow {
    pub mechanism: String,
    pub country: String,
    pub std_c: f64,
    pub std_ntw: f64,
    pub p_loss: f64,
    pub e_loss: f64,
    pub cvar_loss: f64,
}

/// One row per country of the schedule.
pub fn summary(schedule: &CompensationSchedule, net: &NetWelfare, alpha: f64, mode: LossMode) -> Result<Vec<RiskRow>> {
    if schedule.countries != net.countries || schedule.probabilities != net.probabilities {
        return Err(Error::Mismatch("schedule and net welfare describe different ensembles".into()));
    }
    let p = &net.probabilities;
    schedule
        .countries
        .iter()
        .enumerate()
        .map(|(i, country)| {
            let ntw = &net.ntw[i];
            let l = loss(ntw);
            let tail = match mode {
                LossMode::Floored => l.clone(),
                LossMode::NegativeNtw => ntw.iter().map(|v| -v).collect(),
            };
            Ok(RiskRow {
                mechanism: schedule.mechanism.clone(),
                country: country.clone(),
                std_c: std_dev(&schedule.amounts[i], p),
                std_ntw: std_dev(ntw, p),
                p_loss: ntw.iter().zip(p).filter(|(v, _)| **v < 0.0).fold(0.0, |acc, (_, w)| acc + w),
                e_loss: mean(&l, p),
                cvar_loss: cvar(&tail, p, alpha)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRow {
    pub mechanism: String,
    pub country: String,
    /// min, q1, median, q3, max
    pub values: [f64; 5],
}

/// Five-number summary of NTW per country.
pub fn quantiles(net: &NetWelfare) -> Result<Vec<QuantileRow>> {
    net.countries
        .iter()
        .zip(&net.ntw)
        .map(|(c, x)| {
            let mut values = [0.0; 5];
            for (v, q) in values.iter_mut().zip([0.0, 0.25, 0.5, 0.75, 1.0]) {
                *v = quantile(x, &net.probabilities, q)?;
            }
            Ok(QuantileRow {
                mechanism: net.mechanism.clone(),
                country: c.clone(),
                values,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub x: String,
    pub y: String,
    /// `None` when either series has zero variance.
    pub value: Option<f64>,
}

/// Pairwise correlations between each country's ΔTW and the line's flow and
/// flow value, and between the countries' ΔTW.
pub fn correlation_table(delta: &DeltaWelfare, obs: &LineObservables) -> Result<Vec<CorrelationRow>> {
    if delta.probabilities != obs.probabilities {
        return Err(Error::Mismatch("welfare delta and line observables use different scenario sets".into()));
    }
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    for (c, d) in delta.countries.iter().zip(&delta.delta) {
        series.push((format!("delta_tw:{c}"), d.clone()));
    }
    series.push(("flow".into(), obs.total_flow()));
    series.push(("flow_value".into(), obs.flow_value()));
    let mut out = Vec::new();
    for i in 0..series.len() {
        for j in i + 1..series.len() {
            let value = match correlation(&series[i].1, &series[j].1, &delta.probabilities) {
                Ok(v) => Some(v),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            };
            out.push(CorrelationRow {
                x: series[i].0.clone(),
                y: series[j].0.clone(),
                value,
            });
        }
    }
    Ok(out)
}

fn cvar_column(alpha: f64) -> String {
    let pct = alpha * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("cvar{}_loss", pct.round() as i64)
    } else {
        "cvar_loss".into()
    }
}

pub fn write_risk_table_csv(path: &Path, rows: &[RiskRow], alpha: f64) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    let mut header: Vec<String> = ["mechanism", "country", "std_c", "std_ntw", "p_loss", "e_loss"]
        .map(String::from)
        .to_vec();
    header.push(cvar_column(alpha));
    write_row(&mut wtr, path, &header)?;
    for r in rows {
        write_row(
            &mut wtr,
            path,
            &[
                r.mechanism.clone(),
                r.country.clone(),
                fmt_f64(r.std_c),
                fmt_f64(r.std_ntw),
                fmt_f64(r.p_loss),
                fmt_f64(r.e_loss),
                fmt_f64(r.cvar_loss),
            ],
        )?;
    }
    finish(wtr, path)
}

pub fn write_quantiles_csv(path: &Path, rows: &[QuantileRow]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["mechanism", "country", "min", "q1", "median", "q3", "max"].map(String::from))?;
    for r in rows {
        let mut rec = vec![r.mechanism.clone(), r.country.clone()];
        rec.extend(r.values.iter().map(|v| fmt_f64(*v)));
        write_row(&mut wtr, path, &rec)?;
    }
    finish(wtr, path)
}

/// `x,y,correlation`; undefined coefficients are left empty.
pub fn write_correlations_csv(path: &Path, rows: &[CorrelationRow]) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["x", "y", "correlation"].map(String::from))?;
    for r in rows {
        let v = r.value.map_or_else(String::new, fmt_f64);
        write_row(&mut wtr, path, &[r.x.clone(), r.y.clone(), v])?;
    }
    finish(wtr, path)
}

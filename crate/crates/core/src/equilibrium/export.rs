//! CSV export of dispatch solutions. Values are written with 17 significant
//! digits so that reading them back reproduces the same bits.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Network;

use super::DispatchSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    /// `d[node]`, `q[generator]`, `f[line]`, `y[generator]`, `y_r[renewable]` or `x[line]`.
    pub var_name: String,
    pub scenario: Option<usize>,
    pub period: Option<usize>,
    pub value: f64,
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_row<W: std::io::Write>(wtr: &mut csv::Writer<W>, path: &Path, row: &[String]) -> Result<()> {
    wtr.write_record(row).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn finish<W: std::io::Write>(mut wtr: csv::Writer<W>, path: &Path) -> Result<()> {
    wtr.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_records(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

pub(crate) fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, rec: &csv::StringRecord, i: usize, column: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: format!("cannot parse '{raw}'"),
    })
}

/// Flat record list in the order written by [`write_solution_csv`].
pub fn solution_records(network: &Network, sol: &DispatchSolution) -> Vec<SolutionRecord> {
    let mut out = Vec::new();
    let nt = sol.n_periods();
    let op = |out: &mut Vec<SolutionRecord>, kind: &str, ids: Vec<&str>, grid: &Vec<Vec<Vec<f64>>>| {
        for (w, per) in grid.iter().enumerate() {
            for (k, id) in ids.iter().enumerate() {
                for t in 0..nt {
                    out.push(SolutionRecord {
                        var_name: format!("{kind}[{id}]"),
                        scenario: Some(w),
                        period: Some(t),
                        value: per[k][t],
                    });
                }
            }
        }
    };
    op(&mut out, "d", network.nodes.iter().map(|n| n.id.as_str()).collect(), &sol.d);
    op(&mut out, "q", network.generators.iter().map(|g| g.id.as_str()).collect(), &sol.q);
    op(&mut out, "f", network.lines.iter().map(|l| l.id.as_str()).collect(), &sol.f);
    let inv = |out: &mut Vec<SolutionRecord>, kind: &str, ids: Vec<&str>, v: &[f64]| {
        for (id, &value) in ids.iter().zip(v) {
            out.push(SolutionRecord {
                var_name: format!("{kind}[{id}]"),
                scenario: None,
                period: None,
                value,
            });
        }
    };
    inv(&mut out, "y", network.generators.iter().map(|g| g.id.as_str()).collect(), &sol.y);
    inv(&mut out, "y_r", network.renewables.iter().map(|r| r.id.as_str()).collect(), &sol.y_r);
    inv(&mut out, "x", network.lines.iter().map(|l| l.id.as_str()).collect(), &sol.x);
    out
}

/// Writes `var_name,scenario,period,value`; investment rows leave scenario
/// and period empty.
pub fn write_solution_csv(path: &Path, network: &Network, sol: &DispatchSolution) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["var_name".into(), "scenario".into(), "period".into(), "value".into()])?;
    let opt = |v: Option<usize>| v.map_or_else(String::new, |v| v.to_string());
    for r in solution_records(network, sol) {
        write_row(&mut wtr, path, &[r.var_name, opt(r.scenario), opt(r.period), fmt_f64(r.value)])?;
    }
    finish(wtr, path)
}

pub fn read_solution_csv(path: &Path) -> Result<Vec<SolutionRecord>> {
    let opt = |row: usize, rec: &csv::StringRecord, i: usize, col: &str| -> Result<Option<usize>> {
        match rec.get(i).map(str::trim) {
            None | Some("") => Ok(None),
            Some(_) => parse_field(path, row, rec, i, col).map(Some),
        }
    };
    read_records(path)?
        .iter()
        .map(|(row, rec)| {
            Ok(SolutionRecord {
                var_name: rec.get(0).unwrap_or("").to_string(),
                scenario: opt(*row, rec, 1, "scenario")?,
                period: opt(*row, rec, 2, "period")?,
                value: parse_field(path, *row, rec, 3, "value")?,
            })
        })
        .collect()
}

/// Writes `scenario,node,period,price_eur_mwh`.
pub fn write_prices_csv(path: &Path, network: &Network, sol: &DispatchSolution) -> Result<()> {
    let mut wtr = csv_writer(path)?;
    write_row(&mut wtr, path, &["scenario".into(), "node".into(), "period".into(), "price_eur_mwh".into()])?;
    for (w, per_node) in sol.price.iter().enumerate() {
        for (n, series) in per_node.iter().enumerate() {
            for (t, &p) in series.iter().enumerate() {
                write_row(
                    &mut wtr,
                    path,
                    &[w.to_string(), network.nodes[n].id.clone(), t.to_string(), fmt_f64(p)],
                )?;
            }
        }
    }
    finish(wtr, path)
}

/// Reads prices back into `[scenario][node][period]` using the network's
/// node order.
pub fn read_prices_csv(path: &Path, network: &Network) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut cells: Vec<(usize, usize, usize, f64)> = Vec::new();
    for (row, rec) in read_records(path)? {
        let node = rec.get(1).unwrap_or("");
        let n = network.node_index(node).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            row,
            column: "node".into(),
            message: format!("unknown node id '{node}'"),
        })?;
        cells.push((
            parse_field(path, row, &rec, 0, "scenario")?,
            n,
            parse_field(path, row, &rec, 2, "period")?,
            parse_field(path, row, &rec, 3, "price_eur_mwh")?,
        ));
    }
    let ns = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let nt = cells.iter().map(|c| c.2 + 1).max().unwrap_or(0);
    let mut out = vec![vec![vec![f64::NAN; nt]; network.nodes.len()]; ns];
    for (w, n, t, p) in cells {
        out[w][n][t] = p;
    }
    if out.iter().flatten().flatten().any(|p| p.is_nan()) {
        return Err(Error::InsufficientData(format!("{}: price table is incomplete", path.display())));
    }
    Ok(out)
}

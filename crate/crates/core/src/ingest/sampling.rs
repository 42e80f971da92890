//! Block sampling of week-long (by default) scenario windows from hourly data.
//!
//! Every scenario draws one block of consecutive hours per season; all nodes
//! share the same calendar hours within a block so the coupled market sees
//! simultaneous conditions.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ingest::demand::{build_demand_curve, DEFAULT_ELASTICITY};
use crate::model::{DemandCurve, ScenarioSet, Season};

/// Hourly observations for a set of nodes. All vectors are indexed by hour
/// position in `timestamps`, then by node position in `nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    pub timestamps: Vec<NaiveDateTime>,
    pub nodes: Vec<String>,
    pub price: Vec<Vec<f64>>,
    pub demand: Vec<Vec<f64>>,
    /// Renewable availability factor per hour, keyed by renewable id.
    pub factors: BTreeMap<String, Vec<f64>>,
}

impl TimeSeriesTable {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn node_position(&self, node: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == node)
    }

    /// Timestamps must be on the hour and strictly increasing. Gaps between
    /// hours are allowed; sampled blocks never straddle one.
    pub fn check(&self) -> Result<()> {
        for (i, ts) in self.timestamps.iter().enumerate() {
            if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
                return Err(Error::Degenerate(format!("timestamp {ts} is not on the hour")));
            }
            if i > 0 && *ts <= self.timestamps[i - 1] {
                return Err(Error::Degenerate(format!(
                    "timestamps not strictly increasing at {ts}"
                )));
            }
        }
        let h = self.timestamps.len();
        if self.price.len() != h || self.demand.len() != h {
            return Err(Error::Dimension("price/demand rows do not match timestamps".into()));
        }
        for (name, f) in &self.factors {
            if f.len() != h {
                return Err(Error::Dimension(format!("factor series '{name}' has wrong length")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonWindow {
    pub label: String,
    /// Calendar months (1-12) belonging to the season.
    pub months: Vec<u32>,
}

impl SeasonWindow {
    pub fn contains(&self, ts: &NaiveDateTime) -> bool {
        self.months.contains(&ts.month())
    }
}

/// Meteorological seasons: Dec-Feb, Mar-May, Jun-Aug, Sep-Nov.
pub fn default_seasons() -> Vec<SeasonWindow> {
    [
        ("winter", vec![12, 1, 2]),
        ("spring", vec![3, 4, 5]),
        ("summer", vec![6, 7, 8]),
        ("autumn", vec![9, 10, 11]),
    ]
    .into_iter()
    .map(|(label, months)| SeasonWindow {
        label: label.to_string(),
        months,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub n_scenarios: usize,
    pub hours_per_season: usize,
    pub seasons: Vec<SeasonWindow>,
    pub seed: u64,
    /// Inclusive range of calendar years to draw from.
    pub year_range: (i32, i32),
    pub elasticity: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_scenarios: 30,
            hours_per_season: 168,
            seasons: default_seasons(),
            seed: 0,
            year_range: (2013, 2017),
            elasticity: DEFAULT_ELASTICITY,
        }
    }
}

impl SamplingConfig {
    fn check(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(Error::Config("n_scenarios must be at least 1".into()));
        }
        if self.hours_per_season == 0 {
            return Err(Error::Config("hours_per_season must be at least 1".into()));
        }
        if self.seasons.is_empty() {
            return Err(Error::Config("at least one season is required".into()));
        }
        if self.year_range.0 > self.year_range.1 {
            return Err(Error::Config(format!(
                "year range {}-{} is empty",
                self.year_range.0, self.year_range.1
            )));
        }
        Ok(())
    }
}

/// Hour positions where a block of `len` consecutive hours may start inside
/// the given season and year range.
pub fn candidate_starts(table: &TimeSeriesTable, season: &SeasonWindow, len: usize, years: (i32, i32)) -> Vec<usize> {
    let ok = |i: usize| {
        let ts = &table.timestamps[i];
        season.contains(ts) && (years.0..=years.1).contains(&ts.year())
    };
    // run[i] = length of the run of consecutive in-window hours starting at i.
    let h = table.len();
    let mut run = vec![0usize; h + 1];
    for i in (0..h).rev() {
        if !ok(i) {
            run[i] = 0;
        } else if i + 1 < h && ok(i + 1) && table.timestamps[i + 1] - table.timestamps[i] == Duration::hours(1) {
            run[i] = run[i + 1] + 1;
        } else {
            run[i] = 1;
        }
    }
    (0..h).filter(|&i| run[i] >= len).collect()
}

/// Draws block starts, `[scenario][season]`, as hour positions in the table.
pub fn sample_blocks(table: &TimeSeriesTable, cfg: &SamplingConfig) -> Result<Vec<Vec<usize>>> {
    cfg.check()?;
    table.check()?;
    let candidates: Vec<Vec<usize>> = cfg
        .seasons
        .iter()
        .map(|s| candidate_starts(table, s, cfg.hours_per_season, cfg.year_range))
        .collect();
    for (s, c) in cfg.seasons.iter().zip(&candidates) {
        if c.is_empty() {
            return Err(Error::InsufficientData(format!(
                "season '{}' has no run of {} consecutive hours in {}-{}",
                s.label, cfg.hours_per_season, cfg.year_range.0, cfg.year_range.1
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok((0..cfg.n_scenarios)
        .map(|_| candidates.iter().map(|c| c[rng.gen_range(0..c.len())]).collect())
        .collect())
}

/// Hour positions of every period of a scenario, in period order.
pub fn block_hours(starts: &[usize], hours_per_season: usize) -> Vec<usize> {
    starts
        .iter()
        .flat_map(|&s| s..s + hours_per_season)
        .collect()
}

/// Builds the scenario set for the given blocks. `node_order` lists the
/// network's node ids; every one must appear in the table.
pub fn scenario_set_from_blocks(
    table: &TimeSeriesTable,
    cfg: &SamplingConfig,
    blocks: &[Vec<usize>],
    node_order: &[String],
) -> Result<ScenarioSet> {
    let positions: Vec<usize> = node_order
        .iter()
        .map(|id| {
            table
                .node_position(id)
                .ok_or_else(|| Error::InsufficientData(format!("time series has no data for node '{id}'")))
        })
        .collect::<Result<_>>()?;
    let l = cfg.hours_per_season;
    let n_periods = l * cfg.seasons.len();
    let seasons = cfg
        .seasons
        .iter()
        .enumerate()
        .map(|(s, w)| Season {
            label: w.label.clone(),
            periods: (s * l..(s + 1) * l).collect(),
        })
        .collect();
    let mut demand = Vec::with_capacity(blocks.len());
    for starts in blocks {
        let hours = block_hours(starts, l);
        let mut per_node: Vec<Vec<DemandCurve>> = Vec::with_capacity(positions.len());
        for &p in &positions {
            let series = hours
                .iter()
                .map(|&h| {
                    build_demand_curve(table.price[h][p], table.demand[h][p], cfg.elasticity).map_err(|e| {
                        Error::Degenerate(format!(
                            "node '{}' at {}: {e}",
                            table.nodes[p], table.timestamps[h]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            per_node.push(series);
        }
        demand.push(per_node);
    }
    let n = blocks.len();
    Ok(ScenarioSet {
        probabilities: vec![1.0 / n as f64; n],
        seasons,
        n_periods,
        demand,
        period_weight: ScenarioSet::annual_weight(n_periods),
    })
}

/// Renewable availability `[scenario][period]` for the given blocks.
pub fn profile_from_blocks(table: &TimeSeriesTable, ren_id: &str, blocks: &[Vec<usize>], hours_per_season: usize) -> Result<Vec<Vec<f64>>> {
    let series = table
        .factors
        .get(ren_id)
        .ok_or_else(|| Error::InsufficientData(format!("time series has no factor column for renewable '{ren_id}'")))?;
    blocks
        .iter()
        .map(|starts| {
            block_hours(starts, hours_per_season)
                .into_iter()
                .map(|h| {
                    let v = series[h];
                    if v.is_nan() {
                        Err(Error::InsufficientData(format!(
                            "renewable '{ren_id}' has no factor at {}",
                            table.timestamps[h]
                        )))
                    } else {
                        Ok(v)
                    }
                })
                .collect()
        })
        .collect()
}

/// Samples a scenario set with uniform probabilities. Deterministic in `cfg.seed`.
pub fn sample_scenarios(table: &TimeSeriesTable, cfg: &SamplingConfig) -> Result<ScenarioSet> {
    let blocks = sample_blocks(table, cfg)?;
    scenario_set_from_blocks(table, cfg, &blocks, &table.nodes)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::NaiveDate;

    /// Hourly synthetic table over whole years for two nodes.
    pub(crate) fn synthetic_table(first_year: i32, years: i32) -> TimeSeriesTable {
        let start = NaiveDate::from_ymd_opt(first_year, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let end = NaiveDate::from_ymd_opt(first_year + years, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let hours = (end - start).num_hours() as usize;
        let timestamps: Vec<_> = (0..hours).map(|h| start + Duration::hours(h as i64)).collect();
        let price = (0..hours).map(|h| vec![30.0 + (h % 24) as f64, 40.0 - (h % 7) as f64]).collect();
        let demand = (0..hours).map(|h| vec![1000.0 + (h % 13) as f64, 500.0 + (h % 5) as f64]).collect();
        let mut factors = BTreeMap::new();
        factors.insert("wind".to_string(), (0..hours).map(|h| ((h % 10) as f64) / 10.0).collect());
        TimeSeriesTable {
            timestamps,
            nodes: vec!["a".into(), "b".into()],
            price,
            demand,
            factors,
        }
    }

    #[test]
    fn five_years_gives_672_hour_scenarios() {
        let table = synthetic_table(2013, 5);
        let cfg = SamplingConfig {
            n_scenarios: 30,
            seed: 3,
            ..Default::default()
        };
        let sc = sample_scenarios(&table, &cfg).unwrap();
        assert_eq!(sc.n_scenarios(), 30);
        assert_eq!(sc.n_periods, 672);
        assert!(sc.demand.iter().all(|w| w.iter().all(|n| n.len() == 672)));
        assert!((sc.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_deterministic() {
        let table = synthetic_table(2016, 1);
        let cfg = SamplingConfig {
            n_scenarios: 1,
            seed: 11,
            year_range: (2016, 2016),
            ..Default::default()
        };
        assert_eq!(sample_scenarios(&table, &cfg).unwrap(), sample_scenarios(&table, &cfg).unwrap());
    }

    #[test]
    fn blocks_lie_in_their_season_and_are_consecutive() {
        let table = synthetic_table(2017, 1);
        let cfg = SamplingConfig {
            n_scenarios: 3,
            seed: 7,
            year_range: (2017, 2017),
            ..Default::default()
        };
        let blocks = sample_blocks(&table, &cfg).unwrap();
        for starts in &blocks {
            for (s, &start) in starts.iter().enumerate() {
                for k in 0..cfg.hours_per_season {
                    let ts = table.timestamps[start + k];
                    assert!(cfg.seasons[s].contains(&ts), "{ts} not in {}", cfg.seasons[s].label);
                    if k > 0 {
                        assert_eq!(ts - table.timestamps[start + k - 1], Duration::hours(1));
                    }
                }
            }
        }
    }

    #[test]
    fn different_seeds_differ() {
        let table = synthetic_table(2017, 1);
        let mk = |seed| SamplingConfig {
            n_scenarios: 4,
            seed,
            year_range: (2017, 2017),
            ..Default::default()
        };
        assert_ne!(sample_blocks(&table, &mk(1)).unwrap(), sample_blocks(&table, &mk(2)).unwrap());
    }

    #[test]
    fn short_season_is_an_error() {
        let mut table = synthetic_table(2017, 1);
        // Keep only January.
        let keep = 24 * 31;
        table.timestamps.truncate(keep);
        table.price.truncate(keep);
        table.demand.truncate(keep);
        for f in table.factors.values_mut() {
            f.truncate(keep);
        }
        let cfg = SamplingConfig {
            n_scenarios: 2,
            year_range: (2017, 2017),
            ..Default::default()
        };
        assert!(matches!(sample_blocks(&table, &cfg), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn gaps_break_blocks() {
        let mut table = synthetic_table(2017, 1);
        // Remove one hour in the middle of a 3-hour window.
        table.timestamps.remove(1);
        table.price.remove(1);
        table.demand.remove(1);
        table.factors.get_mut("wind").unwrap().remove(1);
        let jan = SeasonWindow {
            label: "w".into(),
            months: vec![1],
        };
        let c = candidate_starts(&table, &jan, 3, (2017, 2017));
        assert!(!c.contains(&0));
        assert!(c.contains(&1));
    }

    #[test]
    fn profiles_follow_blocks() {
        let table = synthetic_table(2017, 1);
        let blocks = vec![vec![5usize, 100]];
        let p = profile_from_blocks(&table, "wind", &blocks, 2).unwrap();
        assert_eq!(p, vec![vec![0.5, 0.6, 0.0, 0.1]]);
        assert!(profile_from_blocks(&table, "solar", &blocks, 2).is_err());
    }
}

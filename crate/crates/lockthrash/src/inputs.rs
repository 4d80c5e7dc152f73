//! CSV readers for the offline analyses.
//!
//! * co-run table: header `background,<target>...`, one row per background,
//!   plus a row named `solo`;
//! * metrics: either precomputed scores `metric,correlation,instability` or
//!   long-form measurements `metric,background,target,value` where the
//!   `solo` background holds the metric's solo value;
//! * profiles: `func,time_per_cycle`.

use std::collections::BTreeMap;
use std::io::Read;

use lockthrash_core::metrics::{degradation_of, CoRunTable, MetricVector};
use lockthrash_core::scalval::Profile;
use serde::Deserialize;

use crate::error::CliError;

const SOLO: &str = "solo";

/// Solo values and co-run matrix of one metric, filled cell by cell.
type Partial = (Vec<Option<f64>>, Vec<Vec<Option<f64>>>);

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| config_err(format!("bad number '{s}' in {what}")))
}

pub fn read_corun<R: Read>(input: R) -> Result<CoRunTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let names: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(config_err("co-run table has no targets"));
    }
    let mut solo = None;
    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let label = rec.get(0).unwrap_or_default().to_string();
        let values = rec
            .iter()
            .skip(1)
            .map(|s| parse_f64(s, "co-run table"))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != names.len() {
            return Err(config_err(format!("row '{label}' has {} values", values.len())));
        }
        if label.eq_ignore_ascii_case(SOLO) {
            solo = Some(values);
        } else if rows.insert(label.clone(), values).is_some() {
            return Err(config_err(format!("duplicate background '{label}'")));
        }
    }
    let solo = solo.ok_or_else(|| config_err("co-run table has no 'solo' row"))?;
    let corun = names
        .iter()
        .map(|n| {
            rows.remove(n)
                .ok_or_else(|| config_err(format!("no background row for '{n}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(extra) = rows.keys().next() {
        return Err(config_err(format!("background '{extra}' is not a target")));
    }
    let table = CoRunTable { names, solo, corun };
    table.validate()?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScoreRow {
    pub metric: String,
    pub correlation: f64,
    pub instability: f64,
    /// Optional ratio as published alongside the scores, kept for comparison.
    #[serde(default)]
    pub printed_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsInput {
    Scores(Vec<ScoreRow>),
    Measurements(Vec<MetricVector>),
}

#[derive(Debug, Deserialize)]
struct Measurement {
    metric: String,
    background: String,
    target: String,
    value: f64,
}

/// Reads either metrics form, telling them apart by the header. Measurement
/// vectors are ordered by `names`.
pub fn read_metrics<R: Read>(input: R, names: &[String]) -> Result<MetricsInput, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let has = |h: &str| headers.iter().any(|x| x == h);
    if has("correlation") && has("instability") {
        let rows = rdr.deserialize().collect::<Result<Vec<ScoreRow>, _>>()?;
        if rows.is_empty() {
            return Err(config_err("metrics file has no rows"));
        }
        return Ok(MetricsInput::Scores(rows));
    }
    if !(has("metric") && has("background") && has("target") && has("value")) {
        return Err(config_err(
            "metrics header must be metric,correlation,instability or metric,background,target,value",
        ));
    }
    let index = |n: &str| names.iter().position(|x| x == n);
    let mut order: Vec<String> = Vec::new();
    let mut by_metric: BTreeMap<String, Partial> = BTreeMap::new();
    let n = names.len();
    for m in rdr.deserialize::<Measurement>() {
        let m = m?;
        let j = index(&m.target).ok_or_else(|| config_err(format!("unknown target '{}'", m.target)))?;
        if !by_metric.contains_key(&m.metric) {
            order.push(m.metric.clone());
        }
        let (solo, corun) = by_metric
            .entry(m.metric.clone())
            .or_insert_with(|| (vec![None; n], vec![vec![None; n]; n]));
        if m.background.eq_ignore_ascii_case(SOLO) {
            solo[j] = Some(m.value);
        } else {
            let i = index(&m.background)
                .ok_or_else(|| config_err(format!("unknown background '{}'", m.background)))?;
            corun[i][j] = Some(m.value);
        }
    }
    if order.is_empty() {
        return Err(config_err("metrics file has no rows"));
    }
    let mut out = Vec::new();
    for name in order {
        let (solo, corun) = by_metric.remove(&name).unwrap();
        let missing = || config_err(format!("metric '{name}' is missing measurements"));
        let values = solo.into_iter().collect::<Option<Vec<f64>>>().ok_or_else(missing)?;
        let corun = corun
            .into_iter()
            .map(|row| row.into_iter().collect::<Option<Vec<f64>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(missing)?;
        let degradation = degradation_of(&values, &corun)?;
        out.push(MetricVector { name, values, degradation });
    }
    Ok(MetricsInput::Measurements(out))
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    func: String,
    time_per_cycle: f64,
}

/// Reads a profile. The file carries no core count or throughput, so the
/// caller supplies them.
pub fn read_profile<R: Read>(input: R, core_count: usize, throughput: f64) -> Result<Profile, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut entries = Vec::new();
    for row in rdr.deserialize::<ProfileRow>() {
        let row = row?;
        if !(row.time_per_cycle >= 0.0) {
            return Err(config_err(format!("negative time for '{}'", row.func)));
        }
        entries.push((row.func, row.time_per_cycle));
    }
    Ok(Profile {
        core_count,
        throughput,
        entries,
    })
}

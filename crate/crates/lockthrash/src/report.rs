//! Row schema shared by simulator runs, sweep aggregates and the MVA
//! baseline, and the CSV/JSON writers.

use std::io::Write;
use std::str::FromStr;

use lockthrash_core::mva::MvaRow;
use lockthrash_core::{EventKind, SimResult};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!("unknown format '{s}'"))),
        }
    }
}

/// One output row. `source` is `sim` for a single run, `mean` for the
/// per-core-count aggregate of a sweep and `mva` for the analytic baseline.
/// Columns that do not apply to a source are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub source: String,
    pub config: String,
    pub policy: String,
    pub cores: usize,
    pub seed: Option<u64>,
    pub throughput: f64,
    pub aggregate_throughput: f64,
    pub speedup: Option<f64>,
    pub lock_wait_mean: Option<f64>,
    pub lock_wait_max: Option<f64>,
    /// Per-core fractions joined with `;`.
    pub lock_wait_per_core: Option<String>,
    pub completions: Option<u64>,
    pub events_instruction: Option<u64>,
    pub events_store: Option<u64>,
    pub events_enter_c: Option<u64>,
    pub events_lock_miss: Option<u64>,
    pub events_cache_miss: Option<u64>,
    pub events_spin: Option<u64>,
    pub events_exit_c: Option<u64>,
    pub events_enter_nc: Option<u64>,
    pub broadcast_misses: Option<u64>,
    pub lock_queue_mean: Option<f64>,
    pub lock_queue_max: Option<u32>,
    pub bank_queue_mean: Option<f64>,
    pub bank_queue_max: Option<u32>,
    pub error: Option<String>,
}

/// Column order of [`RunRecord`] in CSV output.
pub const COLUMNS: [&str; 26] = [
    "source",
    "config",
    "policy",
    "cores",
    "seed",
    "throughput",
    "aggregate_throughput",
    "speedup",
    "lock_wait_mean",
    "lock_wait_max",
    "lock_wait_per_core",
    "completions",
    "events_instruction",
    "events_store",
    "events_enter_c",
    "events_lock_miss",
    "events_cache_miss",
    "events_spin",
    "events_exit_c",
    "events_enter_nc",
    "broadcast_misses",
    "lock_queue_mean",
    "lock_queue_max",
    "bank_queue_mean",
    "bank_queue_max",
    "error",
];

impl RunRecord {
    fn blank(source: &str, config: &str, policy: &str, cores: usize) -> Self {
        RunRecord {
            source: source.into(),
            config: config.into(),
            policy: policy.into(),
            cores,
            seed: None,
            throughput: 0.0,
            aggregate_throughput: 0.0,
            speedup: None,
            lock_wait_mean: None,
            lock_wait_max: None,
            lock_wait_per_core: None,
            completions: None,
            events_instruction: None,
            events_store: None,
            events_enter_c: None,
            events_lock_miss: None,
            events_cache_miss: None,
            events_spin: None,
            events_exit_c: None,
            events_enter_nc: None,
            broadcast_misses: None,
            lock_queue_mean: None,
            lock_queue_max: None,
            bank_queue_mean: None,
            bank_queue_max: None,
            error: None,
        }
    }

    pub fn from_sim(config: &str, policy: &str, seed: u64, r: &SimResult, speedup: Option<f64>) -> Self {
        let c = &r.event_counts;
        RunRecord {
            seed: Some(seed),
            throughput: r.throughput,
            aggregate_throughput: r.aggregate_throughput,
            speedup,
            lock_wait_mean: Some(r.mean_lock_wait()),
            lock_wait_max: Some(r.lock_wait_fraction.iter().cloned().fold(0.0, f64::max)),
            lock_wait_per_core: Some(
                r.lock_wait_fraction
                    .iter()
                    .map(|f| format!("{f:.6}"))
                    .collect::<Vec<_>>()
                    .join(";"),
            ),
            completions: Some(r.completions),
            events_instruction: Some(c.get(EventKind::Instruction)),
            events_store: Some(c.get(EventKind::Store)),
            events_enter_c: Some(c.get(EventKind::EnterC)),
            events_lock_miss: Some(c.get(EventKind::LockMiss)),
            events_cache_miss: Some(c.get(EventKind::CacheMiss)),
            events_spin: Some(c.get(EventKind::Spin)),
            events_exit_c: Some(c.get(EventKind::ExitC)),
            events_enter_nc: Some(c.get(EventKind::EnterNc)),
            broadcast_misses: Some(c.broadcast_misses),
            lock_queue_mean: Some(r.lock_queue_mean()),
            lock_queue_max: Some(r.lock_queue_max()),
            bank_queue_mean: Some(r.bank_queue_mean()),
            bank_queue_max: Some(r.bank_queue_max()),
            ..Self::blank("sim", config, policy, r.cores_used)
        }
    }

    pub fn failed(config: &str, policy: &str, cores: usize, seed: u64, error: String) -> Self {
        RunRecord {
            seed: Some(seed),
            error: Some(error),
            ..Self::blank("sim", config, policy, cores)
        }
    }

    pub fn aggregate(config: &str, policy: &str, cores: usize, throughput: f64, speedup: f64, lock_wait: f64) -> Self {
        RunRecord {
            throughput: throughput / cores as f64,
            aggregate_throughput: throughput,
            speedup: Some(speedup),
            lock_wait_mean: Some(lock_wait),
            ..Self::blank("mean", config, policy, cores)
        }
    }

    pub fn from_mva(config: &str, row: &MvaRow) -> Self {
        RunRecord {
            throughput: row.throughput / row.customers as f64,
            aggregate_throughput: row.throughput,
            speedup: Some(row.speedup),
            lock_queue_mean: Some(row.queue_lengths.iter().sum()),
            ..Self::blank("mva", config, "", row.customers)
        }
    }
}

pub fn write_records<W: Write>(records: &[RunRecord], format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(COLUMNS)?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(records, out)?,
    }
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Writes arbitrary serializable rows as CSV with a header.
pub fn write_csv_rows<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_struct_fields() {
        let r = RunRecord::aggregate("c1", "ticket", 4, 0.5, 1.0, 0.25);
        let mut buf = Vec::new();
        let mut w = csv::Writer::from_writer(&mut buf);
        w.serialize(&r).unwrap();
        drop(w);
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, COLUMNS.join(","));
    }

    #[test]
    fn format_parse() {
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}

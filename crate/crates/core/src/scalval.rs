//! Scalability values: how much more time per unit of work each function
//! takes on many cores than on one.
//!
//! Profiles are normalised by the computation cycle `n / throughput_n`, the
//! wall time one core needs to finish one unit of work when `n` run. A
//! perfectly scalable function keeps the same time per cycle.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::SimResult;
use crate::error::InputError;
use crate::event::EventKind;

pub fn computation_cycle(n: usize, throughput: f64) -> Result<f64, InputError> {
    if !(throughput > 0.0) {
        return Err(InputError::NonPositive("throughput"));
    }
    Ok(n as f64 / throughput)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub core_count: usize,
    pub throughput: f64,
    /// `(function, time per computation cycle)`.
    pub entries: Vec<(String, f64)>,
}

impl Profile {
    /// Converts a simulator run into a profile with one entry per event
    /// kind: core-cycles spent in that kind per completed critical section.
    pub fn from_sim(result: &SimResult) -> Result<Profile, InputError> {
        if result.completions == 0 {
            return Err(InputError::NonPositive("completions"));
        }
        let per = result.completions as f64;
        let entries = EventKind::ALL
            .iter()
            .map(|k| (k.name().to_string(), result.kind_cycles[k.index()] as f64 / per))
            .collect();
        Ok(Profile {
            core_count: result.cores_used,
            throughput: result.aggregate_throughput,
            entries,
        })
    }

    /// Time of `func`, or 0 if it never ran.
    pub fn time_of(&self, func: &str) -> f64 {
        self.entries
            .iter()
            .find(|(f, _)| f == func)
            .map_or(0.0, |&(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub func: String,
    pub ts: f64,
    pub tm: f64,
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityReport {
    /// Sorted by value, largest first.
    pub rows: Vec<ScalabilityRow>,
}

/// Per-function `Tm − Ts`, weighted by share of the positive total.
pub fn scalability_values(single: &Profile, multi: &Profile) -> ScalabilityReport {
    let mut funcs: Vec<&str> = Vec::new();
    for (f, _) in single.entries.iter().chain(&multi.entries) {
        if !funcs.contains(&f.as_str()) {
            funcs.push(f);
        }
    }
    let mut rows: Vec<ScalabilityRow> = funcs
        .into_iter()
        .map(|f| {
            let ts = single.time_of(f);
            let tm = multi.time_of(f);
            ScalabilityRow {
                func: f.to_string(),
                ts,
                tm,
                value: tm - ts,
                weight: 0.0,
            }
        })
        .collect();
    let positive: f64 = rows.iter().map(|r| r.value).filter(|&v| v > 0.0).sum();
    if positive > 0.0 {
        for r in rows.iter_mut().filter(|r| r.value > 0.0) {
            r.weight = r.value / positive;
        }
    }
    rows.sort_by(|a, b| b.value.total_cmp(&a.value));
    ScalabilityReport { rows }
}

/// Sum of the `k` largest weights.
pub fn top_coverage(report: &ScalabilityReport, k: usize) -> f64 {
    report.rows.iter().take(k).map(|r| r.weight).sum()
}

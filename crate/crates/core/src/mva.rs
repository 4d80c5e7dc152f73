//! Exact mean value analysis of the closed lock model.
//!
//! Cores are customers. Non-critical work is a delay center with think time
//! `Z`; each lock is a single-server queueing center. The model saturates at
//! the bottleneck but never predicts a decline, which is the point of
//! comparing it with the simulator.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::WorkloadConfig;
use crate::error::InputError;
use crate::Cycles;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub service_time: f64,
    pub visit_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueuingModel {
    pub customers: usize,
    pub think_time: f64,
    pub centers: Vec<Center>,
}

impl QueuingModel {
    pub fn validate(&self) -> Result<(), InputError> {
        if self.customers == 0 {
            return Err(InputError::NonPositive("customers"));
        }
        if !(self.think_time >= 0.0 && self.think_time.is_finite()) {
            return Err(InputError::OutOfRange("think time"));
        }
        if self.centers.is_empty() {
            return Err(InputError::Empty("centers"));
        }
        for c in &self.centers {
            if !(c.service_time >= 0.0 && c.service_time.is_finite()) {
                return Err(InputError::OutOfRange("service time"));
            }
            if !(c.visit_ratio > 0.0 && c.visit_ratio.is_finite()) {
                return Err(InputError::NonPositive("visit ratio"));
            }
        }
        if self.centers.iter().all(|c| c.service_time == 0.0) {
            return Err(InputError::NonPositive("service times"));
        }
        Ok(())
    }

    /// Total demand `Σ v_k s_k` of one cycle at the queueing centers.
    pub fn demand(&self) -> f64 {
        self.centers
            .iter()
            .map(|c| c.visit_ratio * c.service_time)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvaRow {
    pub customers: usize,
    pub throughput: f64,
    pub speedup: f64,
    /// Mean residence time per cycle at the queueing centers.
    pub response_time: f64,
    pub queue_lengths: Vec<f64>,
}

/// Solves the model for 1..=customers.
pub fn mva_solve(model: &QueuingModel) -> Result<Vec<MvaRow>, InputError> {
    model.validate()?;
    let k = model.centers.len();
    let mut q = vec![0.0; k];
    let mut rows: Vec<MvaRow> = Vec::with_capacity(model.customers);
    let mut r = vec![0.0; k];
    for n in 1..=model.customers {
        for (rk, (c, qk)) in r.iter_mut().zip(model.centers.iter().zip(&q)) {
            *rk = c.service_time * (1.0 + qk);
        }
        let response: f64 = model
            .centers
            .iter()
            .zip(&r)
            .map(|(c, rk)| c.visit_ratio * rk)
            .sum();
        let x = n as f64 / (model.think_time + response);
        for (qk, (c, rk)) in q.iter_mut().zip(model.centers.iter().zip(&r)) {
            *qk = x * c.visit_ratio * rk;
        }
        let base = rows.first().map_or(x, |row| row.throughput);
        rows.push(MvaRow {
            customers: n,
            throughput: x,
            speedup: x / base,
            response_time: response,
            queue_lengths: q.clone(),
        });
    }
    Ok(rows)
}

/// Expected cycles of one pass through a section body.
fn body_cycles(interval: Cycles, misses: u32, latency: Cycles) -> f64 {
    ((misses as u64 + 1) * interval + misses as u64 * latency) as f64
}

/// Maps a workload onto the closed network: non-critical sections become the
/// think time, each lock one center whose service time is the expected body
/// of the sections it guards. Lock acquire and release traffic is not part
/// of the model.
pub fn workload_to_model(workload: &WorkloadConfig, mem_latency: Cycles, customers: usize) -> QueuingModel {
    let think_time = workload
        .non_critical
        .iter()
        .map(|s| s.probability * body_cycles(s.miss_interval, s.miss_count, mem_latency))
        .sum();
    let mut ids: Vec<u32> = Vec::new();
    let mut centers: Vec<Center> = Vec::new();
    for cs in &workload.critical {
        let t = body_cycles(cs.miss_interval, cs.miss_count, mem_latency);
        let idx = match ids.iter().position(|&id| id == cs.lock_id) {
            Some(i) => i,
            None => {
                ids.push(cs.lock_id);
                centers.push(Center {
                    service_time: 0.0,
                    visit_ratio: 0.0,
                });
                centers.len() - 1
            }
        };
        // Accumulate p·t in service_time for now.
        centers[idx].visit_ratio += cs.probability;
        centers[idx].service_time += cs.probability * t;
    }
    for c in &mut centers {
        if c.visit_ratio > 0.0 {
            c.service_time /= c.visit_ratio;
        }
    }
    // Zero-probability locks are never visited.
    centers.retain(|c| c.visit_ratio > 0.0);
    QueuingModel {
        customers,
        think_time,
        centers,
    }
}

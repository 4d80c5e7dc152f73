//! Core-count sweeps, run in parallel and assembled in plan order.

use lockthrash_core::{run, Cycles, LockPolicy, RunParams, SimResult};
use rayon::prelude::*;

use crate::error::CliError;
use crate::files::ExperimentConfig;
use crate::policy_arg::format_policy;
use crate::report::RunRecord;

/// Default run length for sweeps and figure reproductions.
pub const SWEEP_MAX_TICKS: Cycles = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub config_name: String,
    pub config: ExperimentConfig,
    /// Strictly ascending.
    pub cores: Vec<usize>,
    pub seeds: Vec<u64>,
    pub policy: LockPolicy,
    pub max_ticks: Cycles,
}

impl ExperimentPlan {
    pub fn new(config_name: impl Into<String>, config: ExperimentConfig) -> Self {
        let max = config.platform.total_cores();
        ExperimentPlan {
            config_name: config_name.into(),
            config,
            cores: (1..=max).collect(),
            seeds: vec![0, 1, 2],
            policy: LockPolicy::Ticket,
            max_ticks: SWEEP_MAX_TICKS,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.cores.is_empty() {
            return Err(CliError::Usage("no core counts to sweep".into()));
        }
        if self.cores.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage("core counts must be ascending and unique".into()));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Usage("at least one seed is required".into()));
        }
        let max = self.config.platform.total_cores();
        if self.cores[0] == 0 || self.cores[self.cores.len() - 1] > max {
            return Err(CliError::Config(format!("core counts must lie in 1..={max}")));
        }
        self.config.validate()
    }

    fn params(&self, cores: usize, seed: u64) -> RunParams {
        RunParams::new(cores)
            .policy(self.policy)
            .seed(seed)
            .max_ticks(self.max_ticks)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub cores: usize,
    pub seed: u64,
    pub result: Result<SimResult, String>,
    /// Against the one-core run with the same seed.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub cores: usize,
    pub throughput: f64,
    pub speedup: f64,
    pub lock_wait: f64,
    /// Share of handled events that were `SPIN` or `LOCK_MISS`.
    pub lock_event_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub config_name: String,
    pub policy: LockPolicy,
    pub points: Vec<SweepPoint>,
    pub aggregates: Vec<Aggregate>,
}

impl SweepTable {
    pub fn records(&self) -> Vec<RunRecord> {
        let policy = format_policy(&self.policy);
        let mut out = Vec::new();
        for agg in &self.aggregates {
            for p in self.points.iter().filter(|p| p.cores == agg.cores) {
                out.push(match &p.result {
                    Ok(r) => RunRecord::from_sim(&self.config_name, &policy, p.seed, r, p.speedup),
                    Err(e) => RunRecord::failed(&self.config_name, &policy, p.cores, p.seed, e.clone()),
                });
            }
            out.push(RunRecord::aggregate(
                &self.config_name,
                &policy,
                agg.cores,
                agg.throughput,
                agg.speedup,
                agg.lock_wait,
            ));
        }
        out
    }

    pub fn errors(&self) -> impl Iterator<Item = &str> {
        self.points.iter().filter_map(|p| p.result.as_ref().err().map(String::as_str))
    }

    /// Core count with the highest mean speedup; ties go to fewer cores.
    pub fn peak(&self) -> Option<usize> {
        peak(&self.aggregates)
    }

    pub fn aggregate(&self, cores: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.cores == cores)
    }
}

pub fn peak(aggregates: &[Aggregate]) -> Option<usize> {
    let mut best: Option<&Aggregate> = None;
    for a in aggregates {
        if best.is_none_or(|b| a.speedup > b.speedup) {
            best = Some(a);
        }
    }
    best.map(|a| a.cores)
}

/// Runs every `(cores, seed)` point of the plan. Failed runs are reported in
/// their row rather than aborting the sweep.
pub fn sweep(plan: &ExperimentPlan) -> Result<SweepTable, CliError> {
    plan.validate()?;
    let platform = &plan.config.platform;
    let workload = &plan.config.workload;

    let mut jobs: Vec<(usize, u64)> = Vec::new();
    if plan.cores[0] != 1 {
        jobs.extend(plan.seeds.iter().map(|&s| (1, s)));
    }
    for &c in &plan.cores {
        jobs.extend(plan.seeds.iter().map(|&s| (c, s)));
    }
    let results: Vec<Result<SimResult, String>> = jobs
        .par_iter()
        .map(|&(c, s)| run(platform, workload, &plan.params(c, s)).map_err(|e| e.to_string()))
        .collect();

    let base = |seed: u64| -> Option<f64> {
        jobs.iter()
            .zip(&results)
            .find(|((c, s), _)| *c == 1 && *s == seed)
            .and_then(|(_, r)| r.as_ref().ok())
            .map(|r| r.aggregate_throughput)
    };
    let skip = if plan.cores[0] != 1 { plan.seeds.len() } else { 0 };
    let points: Vec<SweepPoint> = jobs
        .iter()
        .zip(results.iter())
        .skip(skip)
        .map(|(&(cores, seed), result)| {
            let speedup = match (result, base(seed)) {
                (Ok(r), Some(b)) if b > 0.0 => Some(r.aggregate_throughput / b),
                _ => None,
            };
            SweepPoint {
                cores,
                seed,
                result: result.clone(),
                speedup,
            }
        })
        .collect();

    let aggregates = plan
        .cores
        .iter()
        .map(|&cores| {
            let ok: Vec<&SweepPoint> = points
                .iter()
                .filter(|p| p.cores == cores && p.result.is_ok())
                .collect();
            let n = ok.len().max(1) as f64;
            let res = |p: &&SweepPoint| p.result.as_ref().ok().cloned().unwrap();
            Aggregate {
                cores,
                throughput: ok.iter().map(|p| res(p).aggregate_throughput).sum::<f64>() / n,
                speedup: ok.iter().filter_map(|p| p.speedup).sum::<f64>() / n,
                lock_wait: ok.iter().map(|p| res(p).mean_lock_wait()).sum::<f64>() / n,
                lock_event_share: ok.iter().map(|p| res(p).event_counts.lock_share()).sum::<f64>() / n,
            }
        })
        .collect();

    Ok(SweepTable {
        config_name: plan.config_name.clone(),
        policy: plan.policy,
        points,
        aggregates,
    })
}

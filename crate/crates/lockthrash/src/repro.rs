//! Data behind the thrashing figures: speedup curves per config, event mix
//! per core count, platform shape and memory latency sensitivity. Output is
//! plot-ready CSV with one curve per column.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lockthrash_core::{Cycles, EventKind};

use crate::error::CliError;
use crate::files::{bundled_platform, ExperimentConfig};
use crate::sweep::{sweep, ExperimentPlan, SweepTable, SWEEP_MAX_TICKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureName {
    /// Speedup and lock-wait curves of c1..c4.
    Fig3_8,
    /// Event mix per core count of c1..c4.
    Fig3_9,
    /// c1 and c3 on platforms p1, p2, p3.
    Fig3_12,
    /// c3 and c4 at memory latency 1, 5 and 10.
    Fig3_13,
}

impl FigureName {
    pub const ALL: [FigureName; 4] = [Self::Fig3_8, Self::Fig3_9, Self::Fig3_12, Self::Fig3_13];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig3_8 => "fig3_8",
            Self::Fig3_9 => "fig3_9",
            Self::Fig3_12 => "fig3_12",
            Self::Fig3_13 => "fig3_13",
        }
    }
}

impl FromStr for FigureName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown figure '{s}' (expected fig3_8, fig3_9, fig3_12 or fig3_13)")))
    }
}

pub const LATENCIES: [Cycles; 3] = [1, 5, 10];
pub const PLATFORMS: [&str; 3] = ["p1", "p2", "p3"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReproOptions {
    pub seeds: Vec<u64>,
    pub max_ticks: Cycles,
    /// Largest core count; the bundled platforms have 32.
    pub max_cores: usize,
}

impl Default for ReproOptions {
    fn default() -> Self {
        ReproOptions {
            seeds: vec![0, 1, 2],
            max_ticks: SWEEP_MAX_TICKS,
            max_cores: 32,
        }
    }
}

impl ReproOptions {
    pub fn plan(&self, name: &str, config: ExperimentConfig) -> ExperimentPlan {
        ExperimentPlan {
            cores: (1..=self.max_cores).collect(),
            seeds: self.seeds.clone(),
            max_ticks: self.max_ticks,
            ..ExperimentPlan::new(name, config)
        }
    }
}

/// A CSV table whose first column is the core count.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CurveTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: FigureName,
    pub tables: Vec<CurveTable>,
    /// Sweeps the tables were built from, labelled by curve.
    pub sweeps: Vec<(String, SweepTable)>,
}

impl Figure {
    pub fn table(&self, file: &str) -> Option<&CurveTable> {
        self.tables.iter().find(|t| t.file == file)
    }

    pub fn sweep(&self, label: &str) -> Option<&SweepTable> {
        self.sweeps.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }

    /// Writes every table into `dir` and returns the paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for t in &self.tables {
            let path = dir.join(&t.file);
            fs::write(&path, t.to_csv()?)?;
            out.push(path);
        }
        Ok(out)
    }
}

fn cores_of(sweeps: &[(String, SweepTable)]) -> Vec<usize> {
    sweeps
        .first()
        .map(|(_, s)| s.aggregates.iter().map(|a| a.cores).collect())
        .unwrap_or_default()
}

/// One column per sweep holding `value(aggregate)`.
pub fn curve_table<F>(file: &str, sweeps: &[(String, SweepTable)], value: F) -> CurveTable
where
    F: Fn(&crate::sweep::Aggregate) -> f64,
{
    let mut columns = vec!["cores".to_string()];
    columns.extend(sweeps.iter().map(|(l, _)| l.clone()));
    let rows = cores_of(sweeps)
        .into_iter()
        .map(|c| {
            let mut row = vec![c as f64];
            row.extend(
                sweeps
                    .iter()
                    .map(|(_, s)| s.aggregate(c).map_or(f64::NAN, &value)),
            );
            row
        })
        .collect();
    CurveTable {
        file: file.to_string(),
        columns,
        rows,
    }
}

/// Share of handled events per kind, averaged over seeds, one column per kind.
pub fn event_mix_table(file: &str, sweep: &SweepTable) -> CurveTable {
    let mut columns = vec!["cores".to_string()];
    columns.extend(EventKind::ALL.iter().map(|k| k.name().to_string()));
    columns.push("lock_share".into());
    let rows = sweep
        .aggregates
        .iter()
        .map(|a| {
            let runs: Vec<_> = sweep
                .points
                .iter()
                .filter(|p| p.cores == a.cores)
                .filter_map(|p| p.result.as_ref().ok())
                .collect();
            let n = runs.len().max(1) as f64;
            let mut row = vec![a.cores as f64];
            for k in EventKind::ALL {
                row.push(
                    runs.iter()
                        .map(|r| r.event_counts.get(k) as f64 / r.event_counts.total().max(1) as f64)
                        .sum::<f64>()
                        / n,
                );
            }
            row.push(a.lock_event_share);
            row
        })
        .collect();
    CurveTable {
        file: file.to_string(),
        columns,
        rows,
    }
}

fn bundled(name: &str) -> ExperimentConfig {
    ExperimentConfig::bundled(name).expect("bundled config")
}

fn run_all(opts: &ReproOptions, specs: Vec<(String, ExperimentConfig)>) -> Result<Vec<(String, SweepTable)>, CliError> {
    specs
        .into_iter()
        .map(|(label, config)| {
            let table = sweep(&opts.plan(&label, config))?;
            if let Some(e) = table.errors().next() {
                return Err(CliError::Invariant(format!("{label}: {e}")));
            }
            Ok((label, table))
        })
        .collect()
}

/// The four bundled configs on the default platform.
pub fn base_sweeps(opts: &ReproOptions) -> Result<Vec<(String, SweepTable)>, CliError> {
    run_all(
        opts,
        ["c1", "c2", "c3", "c4"]
            .into_iter()
            .map(|c| (c.to_string(), bundled(c)))
            .collect(),
    )
}

/// `config` on each bundled platform, labelled `p1`, `p2`, `p3`.
pub fn platform_sweeps(opts: &ReproOptions, config: &str) -> Result<Vec<(String, SweepTable)>, CliError> {
    let base = bundled(config);
    run_all(
        opts,
        PLATFORMS
            .iter()
            .map(|p| {
                let platform = bundled_platform(p).expect("bundled platform");
                (p.to_string(), ExperimentConfig { platform, ..base.clone() })
            })
            .collect(),
    )
}

/// `config` at each latency, labelled `lat1`, `lat5`, `lat10`.
pub fn latency_sweeps(opts: &ReproOptions, config: &str, latencies: &[Cycles]) -> Result<Vec<(String, SweepTable)>, CliError> {
    let base = bundled(config);
    run_all(
        opts,
        latencies
            .iter()
            .map(|&l| {
                let platform = base.platform.clone().with_latency(l);
                (format!("lat{l}"), ExperimentConfig { platform, ..base.clone() })
            })
            .collect(),
    )
}

pub fn figure(name: FigureName, opts: &ReproOptions) -> Result<Figure, CliError> {
    let mut tables = Vec::new();
    let mut sweeps = Vec::new();
    match name {
        FigureName::Fig3_8 => {
            let s = base_sweeps(opts)?;
            tables.push(curve_table("fig3_8_speedup.csv", &s, |a| a.speedup));
            tables.push(curve_table("fig3_8_lock_wait.csv", &s, |a| a.lock_wait));
            sweeps = s;
        }
        FigureName::Fig3_9 => {
            let s = base_sweeps(opts)?;
            for (label, t) in &s {
                tables.push(event_mix_table(&format!("fig3_9_{label}.csv"), t));
            }
            sweeps = s;
        }
        FigureName::Fig3_12 => {
            for config in ["c1", "c3"] {
                let s = platform_sweeps(opts, config)?;
                tables.push(curve_table(&format!("fig3_12_{config}.csv"), &s, |a| a.speedup));
                sweeps.extend(s.into_iter().map(|(l, t)| (format!("{config}_{l}"), t)));
            }
        }
        FigureName::Fig3_13 => {
            for config in ["c3", "c4"] {
                let s = latency_sweeps(opts, config, &LATENCIES)?;
                tables.push(curve_table(&format!("fig3_13_{config}.csv"), &s, |a| a.speedup));
                sweeps.extend(s.into_iter().map(|(l, t)| (format!("{config}_{l}"), t)));
            }
        }
    }
    Ok(Figure { name, tables, sweeps })
}

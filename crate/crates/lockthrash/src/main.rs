use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lockthrash::error::{CliError, EXIT_OK, EXIT_USAGE};
use lockthrash::files::{resolve_platform, ExperimentConfig};
use lockthrash::inputs::{read_corun, read_metrics, read_profile, MetricsInput};
use lockthrash::policy_arg::{format_policy, parse_policy};
use lockthrash::report::{write_csv_rows, write_json, write_records, Format, RunRecord};
use lockthrash::repro::{figure, FigureName, ReproOptions};
use lockthrash::sweep::{sweep, ExperimentPlan, SWEEP_MAX_TICKS};
use lockthrash_core::metrics::{degradation, intensity_sensitivity, rank_scores, select_metric};
use lockthrash_core::mva::{mva_solve, workload_to_model};
use lockthrash_core::scalval::{scalability_values, top_coverage, Profile};
use lockthrash_core::ssc::{exhaustive_optimal, search_optimal, SearchOutcome};
use lockthrash_core::{run, run_logged, Cycles, LockPolicy, RunParams};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lockthrash", version, about = "Lock-thrashing simulator and analysis toolkit")]
struct Cli {
    /// Base seed; multi-seed commands use seed, seed+1, ...
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format.
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Output file (directory for `repro`). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn parse_policy_arg(s: &str) -> Result<LockPolicy, String> {
    parse_policy(s).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct Setup {
    /// Bundled config (c1..c4) or a TOML file.
    #[arg(long)]
    config: String,
    /// Replace the config's platform with a bundled one (p1..p3) or a TOML file.
    #[arg(long)]
    platform: Option<String>,
    /// Override the memory latency.
    #[arg(long)]
    latency: Option<Cycles>,
}

impl Setup {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut config = ExperimentConfig::resolve(&self.config)?;
        if let Some(p) = &self.platform {
            config.platform = resolve_platform(p)?;
        }
        if let Some(l) = self.latency {
            config.platform = config.platform.with_latency(l);
        }
        config.validate()?;
        Ok(config)
    }

    fn label(&self) -> String {
        Path::new(&self.config)
            .file_stem()
            .map_or_else(|| self.config.clone(), |s| s.to_string_lossy().into_owned())
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation.
    Simulate {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        cores: usize,
        /// ticket, requester[:T:W], blocking[:C] or localspin:N.
        #[arg(long, default_value = "ticket", value_parser = parse_policy_arg)]
        policy: LockPolicy,
        #[arg(long, default_value_t = SWEEP_MAX_TICKS)]
        max_ticks: Cycles,
        /// Stop after this many handled events.
        #[arg(long)]
        event_limit: Option<u64>,
        /// Write the event log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write the per-event-kind time breakdown as a scalval profile.
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Sweep core counts over several seeds.
    Sweep {
        #[command(flatten)]
        setup: Setup,
        /// `1..32`, `1,2,4` or a single count. Defaults to every core.
        #[arg(long)]
        cores: Option<String>,
        /// Number of seeds per point.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value = "ticket", value_parser = parse_policy_arg)]
        policy: LockPolicy,
        #[arg(long, default_value_t = SWEEP_MAX_TICKS)]
        max_ticks: Cycles,
    },
    /// Exact mean-value analysis of the closed-network lock model.
    BaselineMva {
        #[command(flatten)]
        setup: Setup,
        /// Largest customer count. Defaults to the platform's cores.
        #[arg(long)]
        cores: Option<usize>,
    },
    /// Search for the core-set size that maximises n(1 - mean lock wait).
    SscSearch {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        max_cores: usize,
        /// Evaluate every size instead of the doubling search.
        #[arg(long)]
        exhaustive: bool,
        /// Oracle samples per size, each with its own seed.
        #[arg(long, default_value_t = 1)]
        samples: usize,
        #[arg(long, default_value = "ticket", value_parser = parse_policy_arg)]
        policy: LockPolicy,
        #[arg(long, default_value_t = SWEEP_MAX_TICKS)]
        max_ticks: Cycles,
    },
    /// Degradation, intensity/sensitivity and metric selection from co-run data.
    ContentionMetrics {
        #[arg(long)]
        corun: PathBuf,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Rank functions by scalability value from two profiles.
    Scalval {
        #[arg(long)]
        single: PathBuf,
        #[arg(long)]
        multi: PathBuf,
        /// Core count of the multi-core profile.
        #[arg(long, default_value_t = 2)]
        multi_cores: usize,
        /// Keep only the first K rows.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Regenerate figure data as CSV files in `--out` (default: current directory).
    Repro {
        /// fig3_8, fig3_9, fig3_12 or fig3_13.
        figure: String,
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        #[arg(long, default_value_t = SWEEP_MAX_TICKS)]
        max_ticks: Cycles,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lockthrash: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(cli: &Cli, rows: &[T]) -> Result<(), CliError> {
    let mut w = output(&cli.out)?;
    match cli.format {
        Format::Csv => write_csv_rows(rows, &mut w)?,
        Format::Json => write_json(rows, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn seed_list(base: u64, count: u64) -> Result<Vec<u64>, CliError> {
    if count == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    Ok((0..count).map(|i| base.wrapping_add(i)).collect())
}

fn parse_cores(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad core list '{s}'"));
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        return Ok((num(a)?..=num(b)?).collect());
    }
    s.split(',').map(num).collect()
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate {
            setup,
            cores,
            policy,
            max_ticks,
            event_limit,
            log,
            profile_out,
        } => {
            let config = setup.load()?;
            let mut params = RunParams::new(*cores).policy(*policy).seed(cli.seed).max_ticks(*max_ticks);
            if let Some(l) = event_limit {
                params = params.event_limit(*l);
            }
            let result = match log {
                Some(path) => {
                    let (result, records) = run_logged(&config.platform, &config.workload, &params)?;
                    let mut w = BufWriter::new(File::create(path)?);
                    for r in &records {
                        serde_json::to_writer(&mut w, r)?;
                        writeln!(w)?;
                    }
                    w.flush()?;
                    result
                }
                None => run(&config.platform, &config.workload, &params)?,
            };
            if let Some(path) = profile_out {
                let profile = Profile::from_sim(&result)?;
                let rows: Vec<ProfileRow> = profile
                    .entries
                    .iter()
                    .map(|(f, t)| ProfileRow { func: f, time_per_cycle: *t })
                    .collect();
                write_csv_rows(&rows, File::create(path)?)?;
            }
            let record = RunRecord::from_sim(&setup.label(), &format_policy(policy), cli.seed, &result, None);
            let mut w = output(&cli.out)?;
            write_records(&[record], cli.format, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Sweep {
            setup,
            cores,
            seeds,
            policy,
            max_ticks,
        } => {
            let config = setup.load()?;
            let mut plan = ExperimentPlan::new(setup.label(), config);
            if let Some(c) = cores {
                plan.cores = parse_cores(c)?;
            }
            plan.seeds = seed_list(cli.seed, *seeds)?;
            plan.policy = *policy;
            plan.max_ticks = *max_ticks;
            let table = sweep(&plan)?;
            let mut w = output(&cli.out)?;
            write_records(&table.records(), cli.format, &mut w)?;
            w.flush()?;
            let failures: Vec<&str> = table.errors().collect();
            match failures.first() {
                Some(first) => Err(CliError::Invariant(format!(
                    "{} of {} runs failed; first: {first}",
                    failures.len(),
                    table.points.len()
                ))),
                None => Ok(()),
            }
        }
        Command::BaselineMva { setup, cores } => {
            let config = setup.load()?;
            let n = cores.unwrap_or_else(|| config.platform.total_cores());
            let model = workload_to_model(&config.workload, config.platform.mem_latency, n);
            let rows = mva_solve(&model)?;
            let records: Vec<RunRecord> = rows.iter().map(|r| RunRecord::from_mva(&setup.label(), r)).collect();
            let mut w = output(&cli.out)?;
            write_records(&records, cli.format, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::SscSearch {
            setup,
            max_cores,
            exhaustive,
            samples,
            policy,
            max_ticks,
        } => {
            let config = setup.load()?;
            let mut calls = 0u64;
            let oracle = |n: usize| {
                let seed = cli.seed.wrapping_add(calls % (*samples).max(1) as u64);
                calls += 1;
                let params = RunParams::new(n).policy(*policy).seed(seed).max_ticks(*max_ticks);
                run(&config.platform, &config.workload, &params).map(|r| r.mean_lock_wait())
            };
            let outcome = if *exhaustive {
                exhaustive_optimal(oracle, *max_cores, *samples)?
            } else {
                search_optimal(oracle, *max_cores, *samples)?
            };
            emit_ssc(cli, &outcome)
        }
        Command::ContentionMetrics { corun, metrics } => {
            let table = read_corun(File::open(corun).map_err(|e| open_err(corun, e))?)?;
            let d = degradation(&table)?;
            let (intensity, sensitivity) = intensity_sensitivity(&d);
            let selection = match metrics {
                None => None,
                Some(path) => {
                    let file = File::open(path).map_err(|e| open_err(path, e))?;
                    Some(match read_metrics(file, &table.names)? {
                        MetricsInput::Scores(rows) => {
                            rank_scores(rows.into_iter().map(|r| (r.metric, r.correlation, r.instability)))?
                        }
                        MetricsInput::Measurements(v) => select_metric(&intensity, &v)?,
                    })
                }
            };
            match cli.format {
                Format::Json => {
                    let report = ContentionReport {
                        names: &table.names,
                        degradation: &d,
                        intensity: &intensity,
                        sensitivity: &sensitivity,
                        winner: selection.as_ref().map(|s| s.winner().name.as_str()),
                        scores: selection.as_ref().map(|s| s.scores.as_slice()),
                    };
                    let mut w = output(&cli.out)?;
                    write_json(&report, &mut w)?;
                    w.flush()?;
                    Ok(())
                }
                Format::Csv => {
                    let mut rows = Vec::new();
                    for (i, bg) in table.names.iter().enumerate() {
                        for (j, tg) in table.names.iter().enumerate() {
                            rows.push(Cell::new("degradation", bg, tg, d[i][j]));
                        }
                    }
                    for (name, (i, s)) in table.names.iter().zip(intensity.iter().zip(&sensitivity)) {
                        rows.push(Cell::new("intensity", name, "", *i));
                        rows.push(Cell::new("sensitivity", name, "", *s));
                    }
                    if let Some(sel) = &selection {
                        for (k, s) in sel.scores.iter().enumerate() {
                            rows.push(Cell::new("metric", &s.name, "correlation", s.correlation));
                            rows.push(Cell::new("metric", &s.name, "instability", s.instability));
                            rows.push(Cell::new("metric", &s.name, "ratio", s.ratio));
                            rows.push(Cell::new("metric", &s.name, "selected", (k == sel.best) as u8 as f64));
                        }
                    }
                    emit(cli, &rows)
                }
            }
        }
        Command::Scalval {
            single,
            multi,
            multi_cores,
            top,
        } => {
            let s = read_profile(File::open(single).map_err(|e| open_err(single, e))?, 1, 1.0)?;
            let m = read_profile(File::open(multi).map_err(|e| open_err(multi, e))?, *multi_cores, 1.0)?;
            let report = scalability_values(&s, &m);
            let k = top.unwrap_or(report.rows.len());
            let mut cumulative = 0.0;
            let rows: Vec<ScalvalRow> = report
                .rows
                .iter()
                .take(k)
                .map(|r| {
                    cumulative += r.weight;
                    ScalvalRow {
                        func: &r.func,
                        ts: r.ts,
                        tm: r.tm,
                        value: r.value,
                        weight: r.weight,
                        cumulative_weight: cumulative,
                    }
                })
                .collect();
            debug_assert!((cumulative - top_coverage(&report, k)).abs() < 1e-9);
            emit(cli, &rows)
        }
        Command::Repro {
            figure: name,
            seeds,
            max_ticks,
        } => {
            let name: FigureName = name.parse()?;
            let opts = ReproOptions {
                seeds: seed_list(cli.seed, *seeds)?,
                max_ticks: *max_ticks,
                ..ReproOptions::default()
            };
            let fig = figure(name, &opts)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for path in fig.write(&dir)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn open_err(path: &Path, e: io::Error) -> CliError {
    CliError::Config(format!("cannot read {}: {e}", path.display()))
}

fn emit_ssc(cli: &Cli, outcome: &SearchOutcome) -> Result<(), CliError> {
    match cli.format {
        Format::Json => {
            let mut w = output(&cli.out)?;
            write_json(outcome, &mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Csv => {
            let mut rows: Vec<SscRow> = outcome
                .queries
                .iter()
                .map(|q| SscRow {
                    kind: "query",
                    n: q.n,
                    p_bar: Some(q.p_bar),
                    throughput: q.throughput,
                })
                .collect();
            rows.push(SscRow {
                kind: "best",
                n: outcome.best_n,
                p_bar: None,
                throughput: outcome.best_throughput,
            });
            emit(cli, &rows)
        }
    }
}

#[derive(Serialize)]
struct ProfileRow<'a> {
    func: &'a str,
    time_per_cycle: f64,
}

#[derive(Serialize)]
struct SscRow {
    kind: &'static str,
    n: usize,
    p_bar: Option<f64>,
    throughput: f64,
}

#[derive(Serialize)]
struct ScalvalRow<'a> {
    func: &'a str,
    ts: f64,
    tm: f64,
    value: f64,
    weight: f64,
    cumulative_weight: f64,
}

#[derive(Serialize)]
struct Cell<'a> {
    kind: &'static str,
    row: &'a str,
    col: &'a str,
    value: f64,
}

impl<'a> Cell<'a> {
    fn new(kind: &'static str, row: &'a str, col: &'a str, value: f64) -> Self {
        Cell { kind, row, col, value }
    }
}

#[derive(Serialize)]
struct ContentionReport<'a> {
    names: &'a [String],
    degradation: &'a [Vec<f64>],
    intensity: &'a [f64],
    sensitivity: &'a [f64],
    winner: Option<&'a str>,
    scores: Option<&'a [lockthrash_core::metrics::MetricScore]>,
}

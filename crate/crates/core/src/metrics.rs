//! Co-run degradation, intensity and sensitivity, and picking the heuristic
//! metric that best tracks intensity while staying stable under co-run.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::InputError;

/// Row-major square matrix: `rows[i][j]` is background `i`, target `j`.
pub type Matrix = Vec<Vec<f64>>;

/// Solo and pairwise co-run execution times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoRunTable {
    pub names: Vec<String>,
    pub solo: Vec<f64>,
    pub corun: Matrix,
}

impl CoRunTable {
    pub fn validate(&self) -> Result<(), InputError> {
        check_square(&self.corun, self.names.len())?;
        if self.solo.len() != self.names.len() {
            return Err(InputError::Shape(format!(
                "{} solo times for {} applications",
                self.solo.len(),
                self.names.len()
            )));
        }
        if self.solo.iter().any(|&t| !(t > 0.0)) {
            return Err(InputError::NonPositive("solo time"));
        }
        if self.corun.iter().flatten().any(|&t| !(t > 0.0)) {
            return Err(InputError::NonPositive("co-run time"));
        }
        Ok(())
    }
}

fn check_square(m: &Matrix, n: usize) -> Result<(), InputError> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(InputError::Shape(format!("expected a {n}x{n} matrix")));
    }
    Ok(())
}

/// `d[i][j] = (T[i][j] − T[j]) / T[j]`.
pub fn degradation(table: &CoRunTable) -> Result<Matrix, InputError> {
    table.validate()?;
    degradation_of(&table.solo, &table.corun)
}

/// Degradation of any per-application quantity measured solo and co-run.
pub fn degradation_of(solo: &[f64], corun: &Matrix) -> Result<Matrix, InputError> {
    check_square(corun, solo.len())?;
    if solo.iter().any(|&t| !(t > 0.0)) {
        return Err(InputError::NonPositive("solo value"));
    }
    Ok(corun
        .iter()
        .map(|row| row.iter().zip(solo).map(|(t, s)| (t - s) / s).collect())
        .collect())
}

pub fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn column(m: &Matrix, j: usize) -> Vec<f64> {
    m.iter().map(|row| row[j]).collect()
}

/// Row norms (intensity, how much `i` hurts others) and column norms
/// (sensitivity, how much `j` is hurt).
pub fn intensity_sensitivity(d: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let intensity = d.iter().map(|row| norm(row)).collect();
    let cols = d.first().map_or(0, Vec::len);
    let sensitivity = (0..cols).map(|j| norm(&column(d, j))).collect();
    (intensity, sensitivity)
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, InputError> {
    if a.len() != b.len() {
        return Err(InputError::Shape(format!("{} vs {} elements", a.len(), b.len())));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 {
        return Err(InputError::ZeroNorm("first vector".into()));
    }
    if nb == 0.0 {
        return Err(InputError::ZeroNorm("second vector".into()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, InputError> {
    if a.is_empty() {
        return Err(InputError::Empty("sample"));
    }
    let ma = a.iter().sum::<f64>() / a.len() as f64;
    let mb = b.iter().sum::<f64>() / b.len() as f64;
    let ca: Vec<f64> = a.iter().map(|x| x - ma).collect();
    let cb: Vec<f64> = b.iter().map(|x| x - mb).collect();
    cosine(&ca, &cb)
}

/// A candidate metric: its solo value per application and the degradation
/// matrix of its co-run values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub name: String,
    pub values: Vec<f64>,
    pub degradation: Matrix,
}

impl MetricVector {
    /// Mean over applications of the column norm of the degradation matrix.
    /// Smaller is more stable.
    pub fn instability(&self) -> f64 {
        let n = self.degradation.first().map_or(0, Vec::len);
        if n == 0 {
            return 0.0;
        }
        (0..n).map(|j| norm(&column(&self.degradation, j))).sum::<f64>() / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricScore {
    pub name: String,
    /// Cosine similarity with the intensity vector.
    pub correlation: f64,
    pub instability: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSelection {
    pub best: usize,
    pub scores: Vec<MetricScore>,
}

impl MetricSelection {
    pub fn winner(&self) -> &MetricScore {
        &self.scores[self.best]
    }
}

pub fn select_metric(intensity: &[f64], candidates: &[MetricVector]) -> Result<MetricSelection, InputError> {
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        check_square(&c.degradation, intensity.len())?;
        let correlation = cosine(intensity, &c.values)
            .map_err(|_| InputError::ZeroNorm(format!("metric {}", c.name)))?;
        scores.push((c.name.clone(), correlation, c.instability()));
    }
    rank_scores(scores)
}

/// Picks the best of precomputed `(name, correlation, instability)` scores.
/// Ties go to the earlier candidate.
pub fn rank_scores<I>(scores: I) -> Result<MetricSelection, InputError>
where
    I: IntoIterator<Item = (String, f64, f64)>,
{
    let mut out: Vec<MetricScore> = Vec::new();
    for (name, correlation, instability) in scores {
        if !(instability > 0.0) {
            return Err(InputError::ZeroNorm(format!("degradation of metric {name}")));
        }
        out.push(MetricScore {
            name,
            correlation,
            instability,
            ratio: correlation / instability,
        });
    }
    if out.is_empty() {
        return Err(InputError::Empty("candidate metrics"));
    }
    let mut best = 0;
    for (i, s) in out.iter().enumerate() {
        if s.ratio > out[best].ratio {
            best = i;
        }
    }
    Ok(MetricSelection { best, scores: out })
}

/// Cumulative access rate `Σ accesses / Σ instructions` over a history of
/// `(accesses, instructions)` slices.
pub fn running_access_rate(history: &[(f64, f64)]) -> Result<f64, InputError> {
    let (acc, ins) = history
        .iter()
        .fold((0.0, 0.0), |(a, i), &(x, y)| (a + x, i + y));
    if !(ins > 0.0) {
        return Err(InputError::NonPositive("instruction count"));
    }
    Ok(acc / ins)
}

/// Mean and variance of a workload's execution times. `runs[e][i]` is the
/// time of instance `i` in execution `e`. The variance is taken over the
/// per-execution means.
pub fn workload_stats(runs: &[Vec<f64>]) -> Result<(f64, f64), InputError> {
    let width = runs.first().map_or(0, Vec::len);
    if runs.is_empty() || width == 0 {
        return Err(InputError::Empty("execution times"));
    }
    if runs.iter().any(|r| r.len() != width) {
        return Err(InputError::Shape("executions have different instance counts".into()));
    }
    let m = runs.len() as f64;
    let n = width as f64;
    let c = runs.iter().flatten().sum::<f64>() / (m * n);
    let d = runs
        .iter()
        .map(|r| {
            let dev = r.iter().sum::<f64>() / n - c;
            dev * dev
        })
        .sum::<f64>()
        / m;
    Ok((c, d))
}

/// Among the first `maxcnt` candidate access rates, the one whose sum with
/// `current_rate` lands closest to `midpoint`. Ties go to the earlier one.
pub fn pick_complement(current_rate: f64, candidates: &[f64], midpoint: f64, maxcnt: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &rate) in candidates.iter().take(maxcnt).enumerate() {
        let delta = libm::fabs(current_rate + rate - midpoint);
        if best.is_none_or(|(_, d)| delta < d) {
            best = Some((i, delta));
        }
    }
    best.map(|(i, _)| i)
}

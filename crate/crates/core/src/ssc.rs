//! Sizing the set of cores that lock-heavy tasks are confined to.
//!
//! With `n` cores each waiting a fraction `p̄(n)` of the time, useful work
//! is `T(n) = n·(1 − p̄(n))`. The search doubles `n` while `T` keeps rising
//! and steps back once it falls, changing course only after two
//! consecutive comparisons agree.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, InputError};

pub fn throughput_model(n: usize, p_bar: f64) -> Result<f64, InputError> {
    if n == 0 {
        return Err(InputError::NonPositive("core count"));
    }
    if !(0.0..=1.0).contains(&p_bar) {
        return Err(InputError::OutOfRange("mean lock-wait fraction"));
    }
    Ok(n as f64 * (1.0 - p_bar))
}

/// One oracle evaluation, averaged over its samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub n: usize,
    pub p_bar: f64,
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best_n: usize,
    pub best_throughput: f64,
    pub queries: Vec<Query>,
}

/// Upper bound on queries issued by [`search_optimal`].
pub fn query_bound(max_n: usize) -> usize {
    let mut log2 = 0;
    while (1usize << log2) < max_n {
        log2 += 1;
    }
    2 * log2 + 2
}

fn query<F>(oracle: &mut F, n: usize, samples: usize) -> Result<Query, Error>
where
    F: FnMut(usize) -> Result<f64, Error>,
{
    let samples = samples.max(1);
    let mut sum = 0.0;
    for _ in 0..samples {
        sum += oracle(n)?;
    }
    let p_bar = sum / samples as f64;
    Ok(Query {
        n,
        p_bar,
        throughput: throughput_model(n, p_bar)?,
    })
}

/// Doubling search driven by `oracle(n) = p̄(n)`. Each query averages
/// `samples` oracle calls; a stateful oracle may vary its seed per call.
pub fn search_optimal<F>(mut oracle: F, max_n: usize, samples: usize) -> Result<SearchOutcome, Error>
where
    F: FnMut(usize) -> Result<f64, Error>,
{
    if max_n == 0 {
        return Err(InputError::NonPositive("max_n").into());
    }
    let budget = query_bound(max_n);
    let mut queries: Vec<Query> = Vec::new();

    let mut n = 1;
    let mut last_n = 1;
    let mut last_t = 0.0;
    // 1, 2: rising once or twice; -1: fell once.
    let mut climbing: i32 = 1;
    while queries.len() < budget {
        let q = query(&mut oracle, n, samples)?;
        queries.push(q);
        if q.throughput > last_t {
            if climbing < 0 {
                climbing = 1;
            } else if climbing == 2 {
                let next = (2 * n).min(max_n);
                if next <= n {
                    break;
                }
                last_n = n;
                last_t = q.throughput;
                n = next;
                climbing = 1;
            } else {
                climbing += 1;
            }
        } else if climbing > 0 {
            climbing = -1;
        } else {
            n = last_n;
            break;
        }
    }
    let best_throughput = queries
        .iter()
        .filter(|q| q.n == n)
        .map(|q| q.throughput)
        .sum::<f64>()
        / queries.iter().filter(|q| q.n == n).count().max(1) as f64;
    Ok(SearchOutcome {
        best_n: n,
        best_throughput,
        queries,
    })
}

/// Evaluates every `n` in `1..=max_n`; ties go to the smallest `n`.
pub fn exhaustive_optimal<F>(mut oracle: F, max_n: usize, samples: usize) -> Result<SearchOutcome, Error>
where
    F: FnMut(usize) -> Result<f64, Error>,
{
    if max_n == 0 {
        return Err(InputError::NonPositive("max_n").into());
    }
    let mut queries = Vec::with_capacity(max_n);
    let mut best = 0;
    for n in 1..=max_n {
        let q = query(&mut oracle, n, samples)?;
        if q.throughput > queries.get(best).map_or(f64::NEG_INFINITY, |b: &Query| b.throughput) {
            best = queries.len();
        }
        queries.push(q);
    }
    Ok(SearchOutcome {
        best_n: queries[best].n,
        best_throughput: queries[best].throughput,
        queries,
    })
}

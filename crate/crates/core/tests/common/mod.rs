#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use lockthrash_core::engine::LogRecord;
use lockthrash_core::{
    CriticalSectionSpec, Cycles, EventKind, PlatformConfig, SectionSpec, Topology, WorkloadConfig,
};

pub fn p1(latency: Cycles) -> PlatformConfig {
    PlatformConfig {
        chips: 8,
        cores_per_chip: 4,
        memory_banks: 8,
        mem_latency: latency,
        topology: Topology::Numa,
    }
}

fn nc(interval: Cycles, misses: u32, prob: f64) -> SectionSpec {
    SectionSpec {
        miss_interval: interval,
        miss_count: misses,
        probability: prob,
    }
}

fn cs(interval: Cycles, misses: u32, prob: f64, lock: u32) -> CriticalSectionSpec {
    CriticalSectionSpec {
        miss_interval: interval,
        miss_count: misses,
        probability: prob,
        lock_id: lock,
        lock_bank: 0,
    }
}

pub fn c1() -> WorkloadConfig {
    WorkloadConfig {
        non_critical: vec![nc(0, 0, 1.0)],
        critical: vec![cs(1, 1, 1.0, 0)],
    }
}

pub fn c2() -> WorkloadConfig {
    let third = 1.0 / 3.0;
    WorkloadConfig {
        non_critical: vec![
            nc(34, 7, 0.14),
            nc(44, 8, 0.18),
            nc(54, 9, 0.36),
            nc(44, 8, 0.18),
            nc(34, 7, 0.14),
        ],
        critical: vec![cs(20, 1, third, 0), cs(10, 1, third, 1), cs(20, 1, third, 2)],
    }
}

pub fn c3() -> WorkloadConfig {
    WorkloadConfig {
        non_critical: vec![nc(50, 1, 0.31), nc(100, 1, 0.38), nc(50, 1, 0.31)],
        critical: vec![cs(2, 1, 1.0, 0)],
    }
}

pub fn c4() -> WorkloadConfig {
    WorkloadConfig {
        non_critical: vec![
            nc(15, 1, 0.16),
            nc(30, 1, 0.21),
            nc(125, 1, 0.26),
            nc(30, 1, 0.21),
            nc(15, 1, 0.16),
        ],
        critical: vec![cs(4, 1, 0.25, 0), cs(5, 1, 0.25, 1), cs(3, 1, 0.25, 2), cs(2, 1, 0.25, 3)],
    }
}

pub fn all_configs() -> Vec<(&'static str, WorkloadConfig)> {
    vec![("c1", c1()), ("c2", c2()), ("c3", c3()), ("c4", c4())]
}

pub fn check_clock(log: &[LogRecord]) -> Result<(), String> {
    let mut last = 0;
    for r in log {
        if let LogRecord::Handled { time, .. } = *r {
            if time < last {
                return Err(format!("clock went from {last} to {time}"));
            }
            last = time;
        }
    }
    Ok(())
}

/// Per lock, holds never overlap: each acquire starts no earlier than the
/// previous release completed, and only the holder releases.
pub fn check_mutual_exclusion(log: &[LogRecord]) -> Result<(), String> {
    let mut holder: HashMap<u32, usize> = HashMap::new();
    let mut released_at: HashMap<u32, Cycles> = HashMap::new();
    for r in log {
        match *r {
            LogRecord::Acquire { lock, core, time } => {
                if let Some(h) = holder.get(&lock) {
                    return Err(format!("core {core} acquired lock {lock} held by {h}"));
                }
                let free = released_at.get(&lock).copied().unwrap_or(0);
                if time < free {
                    return Err(format!("lock {lock} acquired at {time} before release at {free}"));
                }
                holder.insert(lock, core);
            }
            LogRecord::Release { lock, core, time } => {
                if holder.remove(&lock) != Some(core) {
                    return Err(format!("core {core} released lock {lock} it did not hold"));
                }
                released_at.insert(lock, time);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Acquisition order per lock is a prefix of enqueue order.
pub fn check_fifo(log: &[LogRecord]) -> Result<(), String> {
    let mut queued: HashMap<u32, VecDeque<usize>> = HashMap::new();
    for r in log {
        match *r {
            LogRecord::Enqueue { lock, core, .. } => queued.entry(lock).or_default().push_back(core),
            LogRecord::Acquire { lock, core, .. } => {
                let next = queued.get_mut(&lock).and_then(|q| q.pop_front());
                if next != Some(core) {
                    return Err(format!("lock {lock}: core {core} acquired, expected {next:?}"));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Per core, ENTER_NC ≥ ENTER_C ≥ EXIT_C ≥ ENTER_NC − 1.
pub fn check_conservation(log: &[LogRecord], cores: usize) -> Result<(), String> {
    let mut counts = vec![[0i64; 3]; cores];
    for r in log {
        if let LogRecord::Handled { core, kind, .. } = *r {
            match kind {
                EventKind::EnterNc => counts[core][0] += 1,
                EventKind::EnterC => counts[core][1] += 1,
                EventKind::ExitC => counts[core][2] += 1,
                _ => {}
            }
        }
    }
    for (core, [nc, c, x]) in counts.into_iter().enumerate() {
        if !(nc >= c && c >= x && x >= nc - 1) {
            return Err(format!("core {core}: ENTER_NC {nc}, ENTER_C {c}, EXIT_C {x}"));
        }
    }
    Ok(())
}

/// Accesses to one bank never overlap and each lasts exactly `latency`.
pub fn check_banks(log: &[LogRecord], latency: Cycles) -> Result<(), String> {
    let mut last_end: HashMap<usize, Cycles> = HashMap::new();
    for r in log {
        if let LogRecord::BankAccess { bank, start, end, .. } = *r {
            if end != start + latency {
                return Err(format!("bank {bank}: access {start}..{end}"));
            }
            if let Some(&prev) = last_end.get(&bank) {
                if start < prev || end < prev + latency {
                    return Err(format!("bank {bank}: access at {start} overlaps one ending {prev}"));
                }
            }
            last_end.insert(bank, end);
        }
    }
    Ok(())
}

/// Every release that leaves waiters behind is followed by an acquire by the
/// next waiter, except possibly the last release of each lock.
pub fn check_liveness(log: &[LogRecord]) -> Result<(), String> {
    let mut queued: HashMap<u32, VecDeque<usize>> = HashMap::new();
    let mut owed: HashMap<u32, usize> = HashMap::new();
    for r in log {
        match *r {
            LogRecord::Enqueue { lock, core, .. } => queued.entry(lock).or_default().push_back(core),
            LogRecord::Acquire { lock, core, .. } => {
                owed.remove(&lock);
                let q = queued.get_mut(&lock).unwrap();
                q.retain(|&c| c != core);
            }
            LogRecord::Release { lock, .. } => {
                if let Some(c) = owed.get(&lock) {
                    return Err(format!("lock {lock}: core {c} never acquired before the next release"));
                }
                if let Some(&next) = queued.get(&lock).and_then(|q| q.front()) {
                    owed.insert(lock, next);
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// Between parking and being woken a core handles no `LOCK_MISS`.
pub fn check_parked_silence(log: &[LogRecord]) -> Result<usize, String> {
    let mut parked: HashMap<usize, bool> = HashMap::new();
    let mut parks = 0;
    for r in log {
        match *r {
            LogRecord::Enqueue { core, mode, .. } => {
                if mode == lockthrash_core::policy::WaitMode::Parked {
                    parked.insert(core, true);
                    parks += 1;
                }
            }
            LogRecord::Wake { core, .. } => {
                parked.remove(&core);
            }
            LogRecord::Handled {
                core,
                kind: EventKind::LockMiss,
                ..
            } => {
                if parked.contains_key(&core) {
                    return Err(format!("parked core {core} took a LOCK_MISS"));
                }
            }
            LogRecord::Acquire { core, .. } if parked.remove(&core).is_some() => {
                return Err(format!("core {core} acquired without being woken"));
            }
            _ => {}
        }
    }
    Ok(parks)
}

pub fn check_all(log: &[LogRecord], cores: usize, latency: Cycles) -> Result<(), String> {
    check_clock(log)?;
    check_mutual_exclusion(log)?;
    check_fifo(log)?;
    check_conservation(log, cores)?;
    check_banks(log, latency)?;
    check_liveness(log)?;
    check_parked_silence(log)?;
    Ok(())
}

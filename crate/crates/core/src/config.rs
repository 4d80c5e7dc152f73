//! Platform and workload descriptions.
//!
//! A workload is a probabilistic mix of non-critical and critical section
//! shapes. Each shape is "execute `miss_interval` cycles, miss, repeat", and
//! is picked afresh by probability every time a core enters that kind of
//! section.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::Cycles;

const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "UMA")]
    Uma,
    #[serde(rename = "NUMA")]
    Numa,
}

/// Hardware shape of the simulated machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformConfig {
    pub chips: usize,
    pub cores_per_chip: usize,
    pub memory_banks: usize,
    /// Cost of one memory access, in cycles.
    pub mem_latency: Cycles,
    pub topology: Topology,
}

impl PlatformConfig {
    pub fn total_cores(&self) -> usize {
        self.chips * self.cores_per_chip
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.chips == 0 || self.cores_per_chip == 0 {
            return Err(ConfigError::NoCores);
        }
        if self.memory_banks == 0 {
            return Err(ConfigError::NoBanks);
        }
        if self.topology == Topology::Uma && self.memory_banks != 1 {
            return Err(ConfigError::UmaBanks(self.memory_banks));
        }
        Ok(())
    }

    /// Same platform with a different memory latency.
    pub fn with_latency(mut self, mem_latency: Cycles) -> Self {
        self.mem_latency = mem_latency;
        self
    }
}

/// One non-critical section shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    /// Cycles executed between consecutive misses.
    #[serde(rename = "interval")]
    pub miss_interval: Cycles,
    #[serde(rename = "misses")]
    pub miss_count: u32,
    #[serde(rename = "prob")]
    pub probability: f64,
}

/// One critical section shape and the lock protecting it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSectionSpec {
    #[serde(rename = "interval")]
    pub miss_interval: Cycles,
    #[serde(rename = "misses")]
    pub miss_count: u32,
    #[serde(rename = "prob")]
    pub probability: f64,
    #[serde(rename = "lock")]
    pub lock_id: u32,
    /// Memory bank holding the lock word.
    #[serde(rename = "bank")]
    pub lock_bank: usize,
}

impl CriticalSectionSpec {
    /// The body shape, without the lock.
    pub fn body(&self) -> SectionSpec {
        SectionSpec {
            miss_interval: self.miss_interval,
            miss_count: self.miss_count,
            probability: self.probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    #[serde(rename = "noncritical")]
    pub non_critical: Vec<SectionSpec>,
    pub critical: Vec<CriticalSectionSpec>,
}

/// A lock as the engine sees it: dense index plus the bank of its word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LockSlot {
    pub id: u32,
    pub bank: usize,
}

impl WorkloadConfig {
    /// Checks probabilities and, given a platform, bank references.
    pub fn validate(&self, platform: Option<&PlatformConfig>) -> Result<(), ConfigError> {
        check_probabilities(
            "non-critical",
            self.non_critical.iter().map(|s| s.probability),
        )?;
        check_probabilities("critical", self.critical.iter().map(|s| s.probability))?;
        if let Some(platform) = platform {
            for (index, cs) in self.critical.iter().enumerate() {
                if cs.lock_bank >= platform.memory_banks {
                    return Err(ConfigError::BankOutOfRange {
                        index,
                        bank: cs.lock_bank,
                        banks: platform.memory_banks,
                    });
                }
            }
        }
        self.locks().map(|_| ())
    }

    /// Distinct locks in first-appearance order. Fails if one lock id is
    /// placed on two banks.
    pub fn locks(&self) -> Result<Vec<LockSlot>, ConfigError> {
        let mut slots: Vec<LockSlot> = Vec::new();
        for cs in &self.critical {
            match slots.iter().find(|s| s.id == cs.lock_id) {
                Some(slot) if slot.bank != cs.lock_bank => {
                    return Err(ConfigError::LockBankMismatch {
                        lock: cs.lock_id,
                        first: slot.bank,
                        second: cs.lock_bank,
                    })
                }
                Some(_) => {}
                None => slots.push(LockSlot {
                    id: cs.lock_id,
                    bank: cs.lock_bank,
                }),
            }
        }
        Ok(slots)
    }
}

fn check_probabilities(
    what: &'static str,
    probs: impl Iterator<Item = f64> + Clone,
) -> Result<(), ConfigError> {
    let mut sum = 0.0;
    let mut count = 0;
    for (index, value) in probs.enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(ConfigError::Probability { what, index, value });
        }
        sum += value;
        count += 1;
    }
    if count == 0 {
        return Err(ConfigError::EmptySections { what });
    }
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(ConfigError::ProbabilitySum { what, sum });
    }
    Ok(())
}

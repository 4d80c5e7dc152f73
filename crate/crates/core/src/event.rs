//! The event algebra and its expansion grammar.
//!
//! Atomic events (`INSTRUCTION`, `STORE`, `LOCK_MISS`, `CACHE_MISS`, `SPIN`)
//! cost time. Composite events (`ENTER_C`, `EXIT_C`, `ENTER_NC`) expand into
//! atomic ones and always end with the next composite, so a core cycles
//! forever:
//!
//! ```text
//! ENTER_C  = LOCK_MISS STORE SPIN (INSTRUCTION CACHE_MISS)* INSTRUCTION EXIT_C
//! EXIT_C   = LOCK_MISS STORE ENTER_NC
//! ENTER_NC = (INSTRUCTION CACHE_MISS)* INSTRUCTION ENTER_C
//! ```

use alloc::vec::Vec;
use core::fmt;
use core::iter;

use serde::{Deserialize, Serialize};

use crate::config::{CriticalSectionSpec, SectionSpec};
use crate::Cycles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Instruction,
    Store,
    EnterC,
    LockMiss,
    CacheMiss,
    Spin,
    ExitC,
    EnterNc,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::Instruction,
        EventKind::Store,
        EventKind::EnterC,
        EventKind::LockMiss,
        EventKind::CacheMiss,
        EventKind::Spin,
        EventKind::ExitC,
        EventKind::EnterNc,
    ];

    pub fn is_atomic(self) -> bool {
        !self.is_composite()
    }

    pub fn is_composite(self) -> bool {
        matches!(self, EventKind::EnterC | EventKind::ExitC | EventKind::EnterNc)
    }

    /// Position in [`EventKind::ALL`]; used to index per-kind counters.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Instruction => "INSTRUCTION",
            EventKind::Store => "STORE",
            EventKind::EnterC => "ENTER_C",
            EventKind::LockMiss => "LOCK_MISS",
            EventKind::CacheMiss => "CACHE_MISS",
            EventKind::Spin => "SPIN",
            EventKind::ExitC => "EXIT_C",
            EventKind::EnterNc => "ENTER_NC",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The lock an event touches, and the bank its word lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LockRef {
    pub lock: u32,
    pub bank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    /// Only meaningful for `INSTRUCTION`.
    pub duration: Cycles,
    /// Set for `LOCK_MISS`, `STORE`, `SPIN` and `EXIT_C`.
    pub lock: Option<LockRef>,
    /// A `LOCK_MISS` injected by a coherence broadcast rather than by the
    /// grammar.
    pub broadcast: bool,
}

impl Event {
    pub fn instruction(duration: Cycles) -> Self {
        Self::plain(EventKind::Instruction, duration)
    }

    pub fn cache_miss() -> Self {
        Self::plain(EventKind::CacheMiss, 0)
    }

    pub fn enter_c() -> Self {
        Self::plain(EventKind::EnterC, 0)
    }

    pub fn enter_nc() -> Self {
        Self::plain(EventKind::EnterNc, 0)
    }

    pub fn on_lock(kind: EventKind, lock: LockRef) -> Self {
        Event {
            kind,
            duration: 0,
            lock: Some(lock),
            broadcast: false,
        }
    }

    /// The `LOCK_MISS` a waiter takes when the lock word is written.
    pub fn broadcast_miss(lock: LockRef) -> Self {
        Event {
            broadcast: true,
            ..Self::on_lock(EventKind::LockMiss, lock)
        }
    }

    fn plain(kind: EventKind, duration: Cycles) -> Self {
        Event {
            kind,
            duration,
            lock: None,
            broadcast: false,
        }
    }
}

/// `(INSTRUCTION CACHE_MISS)^misses INSTRUCTION`
fn body(interval: Cycles, misses: u32) -> impl Iterator<Item = Event> + Clone {
    (0..misses)
        .flat_map(move |_| [Event::instruction(interval), Event::cache_miss()])
        .chain(iter::once(Event::instruction(interval)))
}

pub(crate) fn enter_c_events(spec: &CriticalSectionSpec) -> impl Iterator<Item = Event> {
    let lock = LockRef {
        lock: spec.lock_id,
        bank: spec.lock_bank,
    };
    [
        Event::on_lock(EventKind::LockMiss, lock),
        Event::on_lock(EventKind::Store, lock),
        Event::on_lock(EventKind::Spin, lock),
    ]
    .into_iter()
    .chain(body(spec.miss_interval, spec.miss_count))
    .chain(iter::once(Event::on_lock(EventKind::ExitC, lock)))
}

pub(crate) fn exit_c_events(lock: LockRef) -> [Event; 3] {
    [
        Event::on_lock(EventKind::LockMiss, lock),
        Event::on_lock(EventKind::Store, lock),
        Event::enter_nc(),
    ]
}

pub(crate) fn enter_nc_events(spec: &SectionSpec) -> impl Iterator<Item = Event> {
    body(spec.miss_interval, spec.miss_count).chain(iter::once(Event::enter_c()))
}

/// Expands `ENTER_C` for one critical-section shape.
pub fn expand_enter_c(spec: &CriticalSectionSpec) -> Vec<Event> {
    enter_c_events(spec).collect()
}

/// Expands `EXIT_C` for the lock being released.
pub fn expand_exit_c(lock: LockRef) -> Vec<Event> {
    exit_c_events(lock).to_vec()
}

/// Expands `ENTER_NC` for one non-critical shape. `CACHE_MISS` banks are
/// left open; the engine draws them when the miss is handled.
pub fn expand_enter_nc(spec: &SectionSpec) -> Vec<Event> {
    enter_nc_events(spec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use EventKind::*;

    fn cs(interval: Cycles, misses: u32) -> CriticalSectionSpec {
        CriticalSectionSpec {
            miss_interval: interval,
            miss_count: misses,
            probability: 1.0,
            lock_id: 0,
            lock_bank: 0,
        }
    }

    fn nc(interval: Cycles, misses: u32) -> SectionSpec {
        SectionSpec {
            miss_interval: interval,
            miss_count: misses,
            probability: 1.0,
        }
    }

    fn kinds(events: &[Event]) -> Vec<EventKind> {
        events.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn enter_c_one_miss() {
        let events = expand_enter_c(&cs(1, 1));
        assert_eq!(
            kinds(&events),
            vec![LockMiss, Store, Spin, Instruction, CacheMiss, Instruction, ExitC]
        );
        assert_eq!(events[3].duration, 1);
        assert_eq!(events[5].duration, 1);
        assert_eq!(events[0].lock.unwrap().bank, 0);
        assert_eq!(events[1].lock.unwrap().bank, 0);
        assert!(events.iter().all(|e| !e.broadcast));
    }

    #[test]
    fn enter_c_no_misses() {
        let events = expand_enter_c(&cs(20, 0));
        assert_eq!(kinds(&events), vec![LockMiss, Store, Spin, Instruction, ExitC]);
        assert_eq!(events[3].duration, 20);
    }

    #[test]
    fn enter_c_three_misses() {
        let events = expand_enter_c(&cs(2, 3));
        assert_eq!(events.len(), 11);
        assert_eq!(kinds(&events[9..]), vec![Instruction, ExitC]);
        assert_eq!(events[9].duration, 2);
    }

    #[test]
    fn lock_bank_propagates() {
        let spec = CriticalSectionSpec {
            lock_id: 4,
            lock_bank: 6,
            ..cs(3, 2)
        };
        let events = expand_enter_c(&spec);
        let expected = LockRef { lock: 4, bank: 6 };
        for e in events.iter().filter(|e| matches!(e.kind, LockMiss | Store | Spin | ExitC)) {
            assert_eq!(e.lock, Some(expected));
        }
        assert!(events
            .iter()
            .filter(|e| e.kind == CacheMiss)
            .all(|e| e.lock.is_none()));
    }

    #[test]
    fn exit_c_structure() {
        let lock = LockRef { lock: 0, bank: 0 };
        let first = expand_exit_c(lock);
        assert_eq!(kinds(&first), vec![LockMiss, Store, EnterNc]);
        assert_eq!(first[0].lock.unwrap().bank, 0);
        assert_eq!(first[1].lock.unwrap().bank, 0);
        assert_eq!(first, expand_exit_c(lock));
    }

    #[test]
    fn enter_nc_examples() {
        assert_eq!(kinds(&expand_enter_nc(&nc(0, 0))), vec![Instruction, EnterC]);
        let events = expand_enter_nc(&nc(50, 1));
        assert_eq!(kinds(&events), vec![Instruction, CacheMiss, Instruction, EnterC]);
        assert!(events.iter().filter(|e| e.kind == Instruction).all(|e| e.duration == 50));
        assert_eq!(expand_enter_nc(&nc(34, 7)).len(), 16);
    }

    #[test]
    fn atomic_and_composite() {
        let composite: Vec<_> = EventKind::ALL.iter().filter(|k| k.is_composite()).collect();
        assert_eq!(composite, vec![&EnterC, &ExitC, &EnterNc]);
        for (i, k) in EventKind::ALL.iter().enumerate() {
            assert_eq!(k.index(), i);
        }
    }
}

mod common;

use lockthrash_core::event::{expand_enter_c, expand_enter_nc, expand_exit_c, LockRef};
use lockthrash_core::{CriticalSectionSpec, EventKind, SectionSpec};
use proptest::prelude::*;

#[test]
fn length_formulas_hold_for_bundled_workloads() {
    for (name, w) in common::all_configs() {
        for s in &w.non_critical {
            assert_eq!(expand_enter_nc(s).len(), 2 * s.miss_count as usize + 2, "{name}");
        }
        for s in &w.critical {
            assert_eq!(expand_enter_c(s).len(), 2 * s.miss_count as usize + 5, "{name}");
        }
    }
}

#[test]
fn thousand_steps_alternate() {
    let w = common::c2();
    let mut next = EventKind::EnterNc;
    let mut seen = Vec::new();
    for step in 0..1000 {
        let events = match next {
            EventKind::EnterNc => expand_enter_nc(&w.non_critical[step % w.non_critical.len()]),
            EventKind::EnterC => expand_enter_c(&w.critical[step % w.critical.len()]),
            EventKind::ExitC => expand_exit_c(LockRef { lock: 0, bank: 0 }),
            other => panic!("{other} is not composite"),
        };
        let (last, body) = events.split_last().unwrap();
        assert!(body.iter().all(|e| e.kind.is_atomic()));
        assert!(last.kind.is_composite());
        seen.push(next);
        next = last.kind;
    }
    for w in seen.windows(2) {
        let ok = matches!(
            (w[0], w[1]),
            (EventKind::EnterNc, EventKind::EnterC)
                | (EventKind::EnterC, EventKind::ExitC)
                | (EventKind::ExitC, EventKind::EnterNc)
        );
        assert!(ok, "{:?}", w);
    }
}

proptest! {
    #[test]
    fn expansion_lengths(interval in 0u64..1_000, misses in 0u32..64, lock in 0u32..8, bank in 0usize..8) {
        let nc = SectionSpec { miss_interval: interval, miss_count: misses, probability: 1.0 };
        let cs = CriticalSectionSpec {
            miss_interval: interval,
            miss_count: misses,
            probability: 1.0,
            lock_id: lock,
            lock_bank: bank,
        };
        let c = expand_enter_c(&cs);
        prop_assert_eq!(c.len(), 2 * misses as usize + 5);
        prop_assert_eq!(expand_enter_nc(&nc).len(), 2 * misses as usize + 2);
        let instr: u64 = c.iter().filter(|e| e.kind == EventKind::Instruction).map(|e| e.duration).sum();
        prop_assert_eq!(instr, (misses as u64 + 1) * interval);
        let on_lock = c.iter().filter(|e| e.lock.is_some()).count();
        prop_assert_eq!(on_lock, 4);
    }
}

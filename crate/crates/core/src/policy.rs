//! Lock waiting policies.
//!
//! Every policy shares the same FIFO queue per lock, so acquisition order and
//! mutual exclusion do not depend on the policy. What differs is what a
//! waiter pays while it waits and when it is told the lock changed hands.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Cycles;

pub type CoreId = usize;

/// Cost of waking a core parked on its monitor flag.
pub const DEFAULT_WAKE_COST: Cycles = 380;
/// Cost of one context switch.
pub const DEFAULT_CTX_SWITCH_COST: Cycles = 11_624;
pub const DEFAULT_THRESHOLD: usize = 0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LockPolicy {
    /// Ticket spinlock: every write to the lock word invalidates every
    /// spinning waiter.
    #[default]
    Ticket,
    /// Spin while at most `threshold` cores hold or wait for the lock,
    /// otherwise park until woken.
    RequesterThreshold { threshold: usize, wake_cost: Cycles },
    /// Sleep whenever the lock is taken; one switch to park, one to wake.
    Blocking { ctx_switch_cost: Cycles },
    /// Queue lock: each waiter spins on its own flag.
    LocalSpin { notify_cost: Cycles },
}

impl LockPolicy {
    pub fn requester() -> Self {
        LockPolicy::RequesterThreshold {
            threshold: DEFAULT_THRESHOLD,
            wake_cost: DEFAULT_WAKE_COST,
        }
    }

    pub fn blocking() -> Self {
        LockPolicy::Blocking {
            ctx_switch_cost: DEFAULT_CTX_SWITCH_COST,
        }
    }

    /// Decides how a core that is about to join `lock`'s queue will wait.
    pub fn on_acquire_attempt(&self, lock: &LockState) -> WaitMode {
        // Outstanding tickets, holder included.
        let len = lock.len();
        match *self {
            LockPolicy::Ticket => WaitMode::SpinBroadcast,
            LockPolicy::RequesterThreshold { threshold, .. } => {
                if len > threshold {
                    WaitMode::Parked
                } else {
                    WaitMode::SpinBroadcast
                }
            }
            LockPolicy::Blocking { .. } => {
                if len > 0 {
                    WaitMode::Parked
                } else {
                    WaitMode::SpinBroadcast
                }
            }
            LockPolicy::LocalSpin { .. } => WaitMode::LocalSpin,
        }
    }

    /// Waiters whose cached lock word is invalidated when `newcomer` takes
    /// a ticket.
    pub fn on_enqueue(&self, lock: &LockState, newcomer: CoreId) -> Vec<WakeAction> {
        match self {
            LockPolicy::Ticket | LockPolicy::RequesterThreshold { .. } => lock
                .waiters()
                .filter(|w| w.core != newcomer && w.mode == WaitMode::SpinBroadcast)
                .map(|w| WakeAction::invalidate(w.core, 0))
                .collect(),
            LockPolicy::Blocking { .. } | LockPolicy::LocalSpin { .. } => Vec::new(),
        }
    }

    /// Actions triggered when `releaser` hands the lock on. `lock` is the
    /// state before the releaser leaves the queue.
    pub fn on_release(&self, lock: &LockState, releaser: CoreId) -> Result<Vec<WakeAction>, Error> {
        match lock.holder() {
            None => {
                return Err(Error::Invariant(format!(
                    "core {releaser} released lock {} with an empty queue",
                    lock.id
                )))
            }
            Some(h) if h != releaser => {
                return Err(Error::Invariant(format!(
                    "core {releaser} released lock {} held by core {h}",
                    lock.id
                )))
            }
            Some(_) => {}
        }
        let mut remaining = lock.waiters().skip(1);
        let new_head = lock.waiters().nth(1);
        let actions = match *self {
            LockPolicy::Ticket => remaining
                .map(|w| WakeAction::invalidate(w.core, 0))
                .collect(),
            LockPolicy::RequesterThreshold { wake_cost, .. } => {
                let mut actions: Vec<WakeAction> = remaining
                    .by_ref()
                    .filter(|w| w.mode == WaitMode::SpinBroadcast)
                    .map(|w| WakeAction::invalidate(w.core, 0))
                    .collect();
                if let Some(head) = new_head.filter(|w| w.mode == WaitMode::Parked) {
                    actions.push(WakeAction::wake(head.core, wake_cost));
                }
                actions
            }
            LockPolicy::Blocking { ctx_switch_cost } => new_head
                .map(|w| match w.mode {
                    WaitMode::Parked => WakeAction::wake(w.core, ctx_switch_cost),
                    _ => WakeAction::invalidate(w.core, 0),
                })
                .into_iter()
                .collect(),
            LockPolicy::LocalSpin { notify_cost } => new_head
                .map(|w| WakeAction::invalidate(w.core, notify_cost))
                .into_iter()
                .collect(),
        };
        Ok(actions)
    }

    /// Extra delay a core pays to go to sleep, before it can be woken.
    pub fn park_cost(&self) -> Cycles {
        match *self {
            LockPolicy::Blocking { ctx_switch_cost } => ctx_switch_cost,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaitMode {
    /// Re-reads the shared lock word after every invalidation.
    SpinBroadcast,
    /// Asleep; sees no coherence traffic until explicitly woken.
    Parked,
    /// Spins on a private flag written only by its predecessor.
    LocalSpin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WakeKind {
    /// The waiter's copy of the lock word was invalidated.
    Invalidate,
    /// A parked waiter is woken. It still has to re-read the lock word.
    Wake,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WakeAction {
    pub core: CoreId,
    pub kind: WakeKind,
    pub extra_cost: Cycles,
}

impl WakeAction {
    pub fn invalidate(core: CoreId, extra_cost: Cycles) -> Self {
        WakeAction {
            core,
            kind: WakeKind::Invalidate,
            extra_cost,
        }
    }

    pub fn wake(core: CoreId, extra_cost: Cycles) -> Self {
        WakeAction {
            core,
            kind: WakeKind::Wake,
            extra_cost,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Waiter {
    pub core: CoreId,
    pub mode: WaitMode,
}

/// FIFO of cores holding or waiting for one lock. The head is the holder,
/// or the next acquirer while the lock is being handed over.
#[derive(Debug, Clone)]
pub struct LockState {
    pub id: u32,
    pub bank: usize,
    waiters: VecDeque<Waiter>,
}

impl LockState {
    pub fn new(id: u32, bank: usize) -> Self {
        LockState {
            id,
            bank,
            waiters: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.waiters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waiters.is_empty()
    }

    pub fn holder(&self) -> Option<CoreId> {
        self.waiters.front().map(|w| w.core)
    }

    pub fn is_head(&self, core: CoreId) -> bool {
        self.holder() == Some(core)
    }

    pub fn waiters(&self) -> impl Iterator<Item = &Waiter> + Clone {
        self.waiters.iter()
    }

    pub fn enqueue(&mut self, core: CoreId, mode: WaitMode) -> Result<(), Error> {
        if self.waiters.iter().any(|w| w.core == core) {
            return Err(Error::Invariant(format!(
                "core {core} queued twice on lock {}",
                self.id
            )));
        }
        self.waiters.push_back(Waiter { core, mode });
        Ok(())
    }

    pub fn dequeue(&mut self, core: CoreId) -> Result<(), Error> {
        match self.waiters.front() {
            Some(w) if w.core == core => {
                self.waiters.pop_front();
                Ok(())
            }
            _ => Err(Error::Invariant(format!(
                "core {core} is not at the head of lock {}",
                self.id
            ))),
        }
    }
}

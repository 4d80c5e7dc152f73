//! The discrete-event engine.
//!
//! Each core owns a queue of events and a timestamp: the time at which its
//! head event starts. Cores sit in a min-heap keyed on `(timestamp, id)`.
//! The loop pops the earliest core, handles its head event, and pushes it
//! back with its new timestamp, until simulated time reaches `max_ticks`.
//!
//! A core spinning on a lock it does not hold has no timestamp and is kept
//! out of the heap. It comes back when a write to the lock word invalidates
//! its copy (a broadcast `LOCK_MISS`) or when the policy wakes it.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use serde::{Deserialize, Serialize};

use crate::config::{CriticalSectionSpec, PlatformConfig, WorkloadConfig};
use crate::error::{ConfigError, Error};
use crate::event::{enter_c_events, enter_nc_events, exit_c_events, Event, EventKind, LockRef};
use crate::policy::{CoreId, LockPolicy, LockState, WaitMode, WakeAction, WakeKind};
use crate::rng::Streams;
use crate::Cycles;

pub const DEFAULT_MAX_TICKS: Cycles = 10_000_000;
/// Queue lengths are sampled at multiples of this many ticks.
pub const SAMPLE_INTERVAL: Cycles = 1_000;
/// The first `1 / WARMUP_DIVISOR` of the run is excluded from statistics.
pub const WARMUP_DIVISOR: Cycles = 20;

const KINDS: usize = EventKind::ALL.len();

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunParams {
    pub cores: usize,
    pub policy: LockPolicy,
    pub max_ticks: Cycles,
    pub seed: u64,
    /// Stop after this many handled events, whatever the clock says.
    pub event_limit: Option<u64>,
}

impl RunParams {
    pub fn new(cores: usize) -> Self {
        RunParams {
            cores,
            policy: LockPolicy::Ticket,
            max_ticks: DEFAULT_MAX_TICKS,
            seed: 0,
            event_limit: None,
        }
    }

    pub fn policy(mut self, policy: LockPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn max_ticks(mut self, max_ticks: Cycles) -> Self {
        self.max_ticks = max_ticks;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn event_limit(mut self, limit: u64) -> Self {
        self.event_limit = Some(limit);
        self
    }

    pub fn warmup_ticks(&self) -> Cycles {
        self.max_ticks / WARMUP_DIVISOR
    }
}

/// Handled events per kind, counted inside the measurement window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub handled: [u64; KINDS],
    /// `LOCK_MISS` events that came from invalidations rather than from the
    /// grammar. Included in `handled`.
    pub broadcast_misses: u64,
}

impl EventCounts {
    pub fn get(&self, kind: EventKind) -> u64 {
        self.handled[kind.index()]
    }

    pub fn total(&self) -> u64 {
        self.handled.iter().sum()
    }

    /// Fraction of handled events that are `SPIN` or `LOCK_MISS`.
    pub fn lock_share(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.get(EventKind::Spin) + self.get(EventKind::LockMiss)) as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub cores_used: usize,
    pub total_ticks: Cycles,
    pub warmup_ticks: Cycles,
    /// Critical sections completed inside the window.
    pub completions: u64,
    /// Completions per cycle per core.
    pub throughput: f64,
    /// Completions per cycle over all cores; the basis for speedup.
    pub aggregate_throughput: f64,
    /// Per core, share of the window spent in `SPIN` or in invalidation
    /// misses while waiting.
    pub lock_wait_fraction: Vec<f64>,
    /// Like `lock_wait_fraction` but also counting the lock-word misses of
    /// every acquire and release.
    pub lock_time_fraction: Vec<f64>,
    pub event_counts: EventCounts,
    /// Core-cycles attributed to each event kind inside the window.
    pub kind_cycles: [u64; KINDS],
    /// Part of `kind_cycles[LOCK_MISS]` spent on invalidation misses.
    pub broadcast_miss_cycles: u64,
    /// Total length of all lock queues, holder included, per sample.
    pub lock_queue_trace: Vec<u32>,
    /// Outstanding accesses over all banks, per sample.
    pub bank_queue_trace: Vec<u32>,
    /// Events handled over the whole run, warm-up included.
    pub events_handled: u64,
}

impl SimResult {
    pub fn window(&self) -> Cycles {
        self.total_ticks - self.warmup_ticks
    }

    pub fn mean_lock_wait(&self) -> f64 {
        mean(&self.lock_wait_fraction)
    }

    pub fn mean_lock_time(&self) -> f64 {
        mean(&self.lock_time_fraction)
    }

    pub fn speedup_over(&self, base: &SimResult) -> f64 {
        if base.aggregate_throughput == 0.0 {
            return 0.0;
        }
        self.aggregate_throughput / base.aggregate_throughput
    }

    pub fn lock_queue_mean(&self) -> f64 {
        trace_mean(&self.lock_queue_trace)
    }

    pub fn lock_queue_max(&self) -> u32 {
        self.lock_queue_trace.iter().copied().max().unwrap_or(0)
    }

    pub fn bank_queue_mean(&self) -> f64 {
        trace_mean(&self.bank_queue_trace)
    }

    pub fn bank_queue_max(&self) -> u32 {
        self.bank_queue_trace.iter().copied().max().unwrap_or(0)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn trace_mean(xs: &[u32]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64
    }
}

/// One entry of the optional event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogRecord {
    Handled {
        time: Cycles,
        core: CoreId,
        kind: EventKind,
        broadcast: bool,
    },
    BankAccess {
        bank: usize,
        core: CoreId,
        start: Cycles,
        end: Cycles,
    },
    Enqueue {
        lock: u32,
        core: CoreId,
        time: Cycles,
        mode: WaitMode,
    },
    /// The core's `SPIN` was consumed at the head of the queue.
    Acquire { lock: u32, core: CoreId, time: Cycles },
    /// The release store completed.
    Release { lock: u32, core: CoreId, time: Cycles },
    /// A parked waiter was woken; it resumes at `time`.
    Wake { lock: u32, core: CoreId, time: Cycles },
}

/// Min-heap of runnable cores. Ties go to the lowest core id.
#[derive(Debug, Clone, Default)]
pub struct Scheduler {
    heap: BinaryHeap<Reverse<(Cycles, CoreId)>>,
}

impl Scheduler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, core: CoreId, timestamp: Cycles) {
        self.heap.push(Reverse((timestamp, core)));
    }

    /// Removes the earliest core.
    pub fn poll(&mut self) -> Result<(CoreId, Cycles), Error> {
        self.heap
            .pop()
            .map(|Reverse((t, c))| (c, t))
            .ok_or_else(|| Error::Invariant("no runnable core left".into()))
    }

    /// Timestamp of the earliest core.
    pub fn tick(&self) -> Option<Cycles> {
        self.heap.peek().map(|Reverse((t, _))| *t)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

struct CoreState {
    queue: VecDeque<Event>,
    /// `None` while spinning off the heap.
    timestamp: Option<Cycles>,
    mode: WaitMode,
    /// Earliest time a pending `SPIN` at the queue head may be consumed.
    ready_at: Cycles,
    /// Earliest time a parked core can be woken.
    park_until: Cycles,
    // Time attribution: the interval since `mark_time` belongs to the last
    // handled event.
    mark_time: Cycles,
    mark_kind: Option<EventKind>,
    mark_broadcast: bool,
    kind_cycles: [u64; KINDS],
    broadcast_cycles: u64,
}

impl CoreState {
    fn new() -> Self {
        CoreState {
            queue: VecDeque::from(vec![Event::enter_nc()]),
            timestamp: Some(0),
            mode: WaitMode::SpinBroadcast,
            ready_at: 0,
            park_until: 0,
            mark_time: 0,
            mark_kind: None,
            mark_broadcast: false,
            kind_cycles: [0; KINDS],
            broadcast_cycles: 0,
        }
    }

    fn head_is_spin(&self) -> bool {
        matches!(self.queue.front(), Some(e) if e.kind == EventKind::Spin)
    }
}

struct BankState {
    last_end: Cycles,
    /// Completion times of accesses that may still be in flight.
    pending: VecDeque<Cycles>,
}

struct Engine<'a> {
    latency: Cycles,
    params: RunParams,
    warmup: Cycles,
    non_critical: Vec<Vec<Event>>,
    nc_probs: Vec<f64>,
    critical: Vec<Vec<Event>>,
    cs_probs: Vec<f64>,
    cores: Vec<CoreState>,
    locks: Vec<LockState>,
    banks: Vec<BankState>,
    sched: Scheduler,
    streams: Streams,
    now: Cycles,
    next_sample: Cycles,
    counts: EventCounts,
    completions: u64,
    events_handled: u64,
    lock_trace: Vec<u32>,
    bank_trace: Vec<u32>,
    log: Option<&'a mut Vec<LogRecord>>,
}

/// Runs one simulation.
pub fn run(
    platform: &PlatformConfig,
    workload: &WorkloadConfig,
    params: &RunParams,
) -> Result<SimResult, Error> {
    Engine::new(platform, workload, params, None)?.run()
}

/// Runs one simulation and records every handled event, bank access and
/// queue transition.
pub fn run_logged(
    platform: &PlatformConfig,
    workload: &WorkloadConfig,
    params: &RunParams,
) -> Result<(SimResult, Vec<LogRecord>), Error> {
    let mut log = Vec::new();
    let result = Engine::new(platform, workload, params, Some(&mut log))?.run()?;
    Ok((result, log))
}

impl<'a> Engine<'a> {
    fn new(
        platform: &PlatformConfig,
        workload: &WorkloadConfig,
        params: &RunParams,
        log: Option<&'a mut Vec<LogRecord>>,
    ) -> Result<Self, Error> {
        platform.validate()?;
        workload.validate(Some(platform))?;
        if params.cores == 0 {
            return Err(ConfigError::ZeroCores.into());
        }
        if params.cores > platform.total_cores() {
            return Err(ConfigError::TooManyCores {
                requested: params.cores,
                available: platform.total_cores(),
            }
            .into());
        }
        if params.max_ticks == 0 {
            return Err(ConfigError::ZeroTicks.into());
        }

        // Locks get dense indices in order of first appearance.
        let slots = workload.locks()?;
        let dense = |id: u32| slots.iter().position(|s| s.id == id).unwrap_or(0) as u32;
        let critical = workload
            .critical
            .iter()
            .map(|cs| {
                enter_c_events(&CriticalSectionSpec {
                    lock_id: dense(cs.lock_id),
                    ..*cs
                })
                .collect()
            })
            .collect();
        let non_critical = workload
            .non_critical
            .iter()
            .map(|nc| enter_nc_events(nc).collect())
            .collect();
        let locks = slots
            .iter()
            .enumerate()
            .map(|(i, s)| LockState::new(i as u32, s.bank))
            .collect();
        let banks = (0..platform.memory_banks)
            .map(|_| BankState {
                last_end: 0,
                pending: VecDeque::new(),
            })
            .collect();

        let mut sched = Scheduler::new();
        for core in 0..params.cores {
            sched.push(core, 0);
        }
        let warmup = params.warmup_ticks();
        Ok(Engine {
            latency: platform.mem_latency,
            params: *params,
            warmup,
            non_critical,
            nc_probs: workload.non_critical.iter().map(|s| s.probability).collect(),
            critical,
            cs_probs: workload.critical.iter().map(|s| s.probability).collect(),
            cores: (0..params.cores).map(|_| CoreState::new()).collect(),
            locks,
            banks,
            sched,
            streams: Streams::new(params.seed),
            now: 0,
            next_sample: warmup.div_ceil(SAMPLE_INTERVAL) * SAMPLE_INTERVAL,
            counts: EventCounts::default(),
            completions: 0,
            events_handled: 0,
            lock_trace: Vec::new(),
            bank_trace: Vec::new(),
            log,
        })
    }

    fn run(mut self) -> Result<SimResult, Error> {
        let max_ticks = self.params.max_ticks;
        let mut end = max_ticks;
        while self.sched.tick().is_some_and(|t| t < max_ticks) {
            if self.params.event_limit.is_some_and(|l| self.events_handled >= l) {
                end = self.now;
                break;
            }
            let (core, t) = self.sched.poll()?;
            if t < self.now {
                return Err(Error::Invariant(format!(
                    "clock went back from {} to {t}",
                    self.now
                )));
            }
            if self.cores[core].timestamp != Some(t) {
                return Err(Error::Invariant(format!(
                    "core {core} polled at {t} with timestamp {:?}",
                    self.cores[core].timestamp
                )));
            }
            self.now = t;
            self.sample_until(t);
            self.handle(core)?;
            if let Some(ts) = self.cores[core].timestamp {
                self.sched.push(core, ts);
            }
        }
        if self.sched.is_empty() {
            return Err(Error::Invariant(format!(
                "every core is waiting at t={}",
                self.now
            )));
        }
        self.sample_until(end.saturating_sub(1));
        Ok(self.finish(end))
    }

    fn sample_until(&mut self, t: Cycles) {
        while self.next_sample <= t && self.next_sample < self.params.max_ticks {
            let s = self.next_sample;
            let lock_len: usize = self.locks.iter().map(LockState::len).sum();
            let bank_len: usize = self
                .banks
                .iter()
                .map(|b| b.pending.len() - b.pending.partition_point(|&e| e <= s))
                .sum();
            self.lock_trace.push(lock_len as u32);
            self.bank_trace.push(bank_len as u32);
            self.next_sample += SAMPLE_INTERVAL;
        }
    }

    fn in_window(&self, t: Cycles) -> bool {
        t >= self.warmup && t < self.params.max_ticks
    }

    /// Charges `[from, to)` to `kind`, clipped to the window.
    fn charge(&mut self, core: CoreId, from: Cycles, to: Cycles) {
        let lo = from.max(self.warmup);
        let hi = to.min(self.params.max_ticks);
        let c = &mut self.cores[core];
        if hi <= lo {
            return;
        }
        if let Some(kind) = c.mark_kind {
            c.kind_cycles[kind.index()] += hi - lo;
            if c.mark_broadcast {
                c.broadcast_cycles += hi - lo;
            }
        }
    }

    fn handle(&mut self, core: CoreId) -> Result<(), Error> {
        let now = self.now;
        let event = match self.cores[core].queue.front() {
            Some(e) => *e,
            None => return Err(Error::Invariant(format!("core {core} has no events"))),
        };

        let mark = self.cores[core].mark_time;
        self.charge(core, mark, now);
        {
            let c = &mut self.cores[core];
            c.mark_time = now;
            c.mark_kind = Some(event.kind);
            c.mark_broadcast = event.broadcast;
        }
        self.events_handled += 1;
        if self.in_window(now) {
            self.counts.handled[event.kind.index()] += 1;
            if event.broadcast {
                self.counts.broadcast_misses += 1;
            }
        }
        if let Some(log) = self.log.as_deref_mut() {
            log.push(LogRecord::Handled {
                time: now,
                core,
                kind: event.kind,
                broadcast: event.broadcast,
            });
        }

        match event.kind {
            EventKind::Instruction => {
                let c = &mut self.cores[core];
                c.queue.pop_front();
                c.timestamp = Some(now + event.duration);
            }
            EventKind::LockMiss => {
                let lock = lock_of(&event, core)?;
                let done = self.access(core, lock.bank);
                let c = &mut self.cores[core];
                c.queue.pop_front();
                c.timestamp = Some(done);
            }
            EventKind::CacheMiss => {
                let bank = self.streams.pick_bank(self.banks.len());
                let done = self.access(core, bank);
                let c = &mut self.cores[core];
                c.queue.pop_front();
                c.timestamp = Some(done);
            }
            EventKind::Store => {
                let lock = lock_of(&event, core)?;
                let done = self.access(core, lock.bank);
                let c = &mut self.cores[core];
                c.queue.pop_front();
                c.timestamp = Some(done);
                let acquiring = c.head_is_spin();
                if acquiring {
                    self.enqueue(core, lock, done)?;
                } else {
                    self.release(core, lock, done)?;
                }
            }
            EventKind::Spin => self.spin(core, event)?,
            EventKind::EnterNc => {
                let i = self.streams.pick_section(self.nc_probs.iter().copied());
                splice(&mut self.cores[core].queue, &self.non_critical[i]);
            }
            EventKind::EnterC => {
                let i = self.streams.pick_section(self.cs_probs.iter().copied());
                splice(&mut self.cores[core].queue, &self.critical[i]);
            }
            EventKind::ExitC => {
                let lock = lock_of(&event, core)?;
                splice(&mut self.cores[core].queue, &exit_c_events(lock));
            }
        }
        Ok(())
    }

    /// Applies the bank rule and returns the completion time.
    fn access(&mut self, core: CoreId, bank: usize) -> Cycles {
        let now = self.now;
        let latency = self.latency;
        let b = &mut self.banks[bank];
        let start = now.max(b.last_end);
        let end = start + latency;
        b.last_end = end;
        while b.pending.front().is_some_and(|&e| e <= now) {
            b.pending.pop_front();
        }
        b.pending.push_back(end);
        if let Some(log) = self.log.as_deref_mut() {
            log.push(LogRecord::BankAccess {
                bank,
                core,
                start,
                end,
            });
        }
        end
    }

    fn enqueue(&mut self, core: CoreId, lock: LockRef, done: Cycles) -> Result<(), Error> {
        let policy = self.params.policy;
        let slot = lock.lock as usize;
        let mode = policy.on_acquire_attempt(&self.locks[slot]);
        self.locks[slot].enqueue(core, mode)?;
        let c = &mut self.cores[core];
        c.mode = mode;
        c.ready_at = 0;
        c.park_until = if mode == WaitMode::Parked {
            done + policy.park_cost()
        } else {
            0
        };
        if let Some(log) = self.log.as_deref_mut() {
            log.push(LogRecord::Enqueue {
                lock: lock.lock,
                core,
                time: done,
                mode,
            });
        }
        let actions = policy.on_enqueue(&self.locks[slot], core);
        self.apply(&actions, lock, done);
        Ok(())
    }

    fn release(&mut self, core: CoreId, lock: LockRef, done: Cycles) -> Result<(), Error> {
        let slot = lock.lock as usize;
        let actions = self.params.policy.on_release(&self.locks[slot], core)?;
        self.locks[slot].dequeue(core)?;
        if self.in_window(done) {
            self.completions += 1;
        }
        if let Some(log) = self.log.as_deref_mut() {
            log.push(LogRecord::Release {
                lock: lock.lock,
                core,
                time: done,
            });
        }
        self.apply(&actions, lock, done);
        Ok(())
    }

    /// Delivers invalidations and wake-ups caused by a store completing at
    /// `done`. Only cores still waiting at a `SPIN` are affected.
    fn apply(&mut self, actions: &[WakeAction], lock: LockRef, done: Cycles) {
        for action in actions {
            let c = &mut self.cores[action.core];
            if !c.head_is_spin() {
                continue;
            }
            // Either way the waiter re-reads the lock word before spinning.
            let at = done.max(c.park_until) + action.extra_cost;
            c.queue.push_front(Event::broadcast_miss(lock));
            c.ready_at = c.ready_at.max(at);
            if c.timestamp.is_none() {
                c.timestamp = Some(at);
                self.sched.push(action.core, at);
            }
            if action.kind == WakeKind::Wake {
                if let Some(log) = self.log.as_deref_mut() {
                    log.push(LogRecord::Wake {
                        lock: lock.lock,
                        core: action.core,
                        time: at,
                    });
                }
            }
        }
    }

    fn spin(&mut self, core: CoreId, event: Event) -> Result<(), Error> {
        let now = self.now;
        let lock = lock_of(&event, core)?;
        let slot = lock.lock as usize;
        if !self.locks[slot].is_head(core) {
            // Off the heap until invalidated or woken.
            self.cores[core].timestamp = None;
            return Ok(());
        }
        let c = &mut self.cores[core];
        if now < c.ready_at {
            c.timestamp = Some(c.ready_at);
            return Ok(());
        }
        c.queue.pop_front();
        c.timestamp = Some(now);
        c.ready_at = 0;
        c.park_until = 0;
        if let Some(log) = self.log.as_deref_mut() {
            log.push(LogRecord::Acquire {
                lock: lock.lock,
                core,
                time: now,
            });
        }
        Ok(())
    }

    fn finish(mut self, end: Cycles) -> SimResult {
        for core in 0..self.cores.len() {
            let mark = self.cores[core].mark_time;
            self.charge(core, mark, end);
        }
        let window = end.saturating_sub(self.warmup);
        let spin = EventKind::Spin.index();
        let miss = EventKind::LockMiss.index();
        let frac = |x: u64| if window == 0 { 0.0 } else { x as f64 / window as f64 };
        let lock_wait_fraction = self
            .cores
            .iter()
            .map(|c| frac(c.kind_cycles[spin] + c.broadcast_cycles))
            .collect();
        let lock_time_fraction = self
            .cores
            .iter()
            .map(|c| frac(c.kind_cycles[spin] + c.kind_cycles[miss]))
            .collect();
        let mut kind_cycles = [0u64; KINDS];
        let mut broadcast_miss_cycles = 0;
        for c in &self.cores {
            for (total, x) in kind_cycles.iter_mut().zip(c.kind_cycles) {
                *total += x;
            }
            broadcast_miss_cycles += c.broadcast_cycles;
        }
        let aggregate = frac(self.completions);
        SimResult {
            cores_used: self.params.cores,
            total_ticks: end,
            warmup_ticks: self.warmup.min(end),
            completions: self.completions,
            throughput: aggregate / self.params.cores as f64,
            aggregate_throughput: aggregate,
            lock_wait_fraction,
            lock_time_fraction,
            event_counts: self.counts,
            kind_cycles,
            broadcast_miss_cycles,
            lock_queue_trace: self.lock_trace,
            bank_queue_trace: self.bank_trace,
            events_handled: self.events_handled,
        }
    }
}

fn lock_of(event: &Event, core: CoreId) -> Result<LockRef, Error> {
    event.lock.ok_or_else(|| {
        Error::Invariant(format!("core {core}: {} without a lock", event.kind))
    })
}

/// Replaces the composite at the head of `queue` with `expansion`.
fn splice(queue: &mut VecDeque<Event>, expansion: &[Event]) {
    queue.pop_front();
    for e in expansion.iter().rev() {
        queue.push_front(*e);
    }
}

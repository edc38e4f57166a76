//! Deterministic discrete-event engine.
//!
//! A [`Simulation`] owns an [`EventQueue`] and a clock. Handlers receive each
//! event in `(time, seq)` order and may schedule follow-up events through a
//! [`Scheduler`], never in the past.

mod queue;
mod rng;
mod time;

use std::fmt::Write as _;

use thiserror::Error;

pub use queue::{Event, EventQueue};
pub use rng::{derive_seed, fnv1a64, RngStream, PRNG_ALGORITHM};
pub use time::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("event scheduled at {at} while clock is at {now}")]
    ScheduledInPast { at: SimTime, now: SimTime },
    #[error("run end {end} precedes clock {now}")]
    EndInPast { end: SimTime, now: SimTime },
}

/// Name and free-form detail of an event payload, used by the trace log.
pub trait EventKind {
    fn kind(&self) -> &'static str;

    fn detail(&self) -> String {
        String::new()
    }
}

/// Handle given to event handlers for scheduling follow-up events.
pub struct Scheduler<'a, E> {
    queue: &'a mut EventQueue<E>,
    now: SimTime,
}

impl<E> Scheduler<'_, E> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn schedule(&mut self, at: SimTime, payload: E) -> Result<u64, SimError> {
        self.queue.schedule(at, payload)
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> Result<u64, SimError> {
        self.queue.schedule(self.now + delay, payload)
    }
}

pub trait Handler<E> {
    fn handle(&mut self, event: Event<E>, sched: &mut Scheduler<'_, E>) -> Result<(), SimError>;
}

impl<E, F> Handler<E> for F
where
    F: FnMut(Event<E>, &mut Scheduler<'_, E>) -> Result<(), SimError>,
{
    fn handle(&mut self, event: Event<E>, sched: &mut Scheduler<'_, E>) -> Result<(), SimError> {
        self(event, sched)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunStats {
    pub processed: u64,
    pub pending: usize,
    pub clock: SimTime,
}

/// CSV event log: `time_us,seq,kind,detail`.
#[derive(Debug, Default, Clone)]
pub struct TraceLog {
    buf: String,
}

impl TraceLog {
    pub const HEADER: &'static str = "time_us,seq,kind,detail";

    pub fn new() -> Self {
        let mut buf = String::from(Self::HEADER);
        buf.push('\n');
        Self { buf }
    }

    fn record<E: EventKind>(&mut self, ev: &Event<E>) {
        let detail = ev.payload.detail().replace(',', ";");
        let _ = writeln!(
            self.buf,
            "{},{},{},{}",
            ev.time.as_micros(),
            ev.seq,
            ev.payload.kind(),
            detail
        );
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

/// Single-threaded simulation instance.
pub struct Simulation<E> {
    queue: EventQueue<E>,
    clock: SimTime,
    processed: u64,
    trace: Option<TraceLog>,
}

impl<E> Default for Simulation<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Simulation<E> {
    pub fn new() -> Self {
        Self {
            queue: EventQueue::new(),
            clock: SimTime::ZERO,
            processed: 0,
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(TraceLog::new());
        self
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn schedule(&mut self, at: SimTime, payload: E) -> Result<u64, SimError> {
        self.queue.schedule(at, payload)
    }

    pub fn take_trace(&mut self) -> Option<TraceLog> {
        self.trace.take()
    }
}

impl<E: EventKind> Simulation<E> {
    /// Processes every event with `time <= t_end`, then sets the clock to `t_end`.
    pub fn run_until<H: Handler<E>>(
        &mut self,
        handler: &mut H,
        t_end: SimTime,
    ) -> Result<RunStats, SimError> {
        if t_end < self.clock {
            return Err(SimError::EndInPast {
                end: t_end,
                now: self.clock,
            });
        }
        let mut processed = 0;
        while let Some(t) = self.queue.peek_time() {
            if t > t_end {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            debug_assert!(ev.time >= self.clock);
            self.clock = ev.time;
            if let Some(trace) = self.trace.as_mut() {
                trace.record(&ev);
            }
            let mut sched = Scheduler {
                queue: &mut self.queue,
                now: self.clock,
            };
            handler.handle(ev, &mut sched)?;
            processed += 1;
        }
        self.clock = t_end;
        self.queue.advance_floor(t_end);
        self.processed += processed;
        Ok(RunStats {
            processed,
            pending: self.queue.len(),
            clock: self.clock,
        })
    }
}

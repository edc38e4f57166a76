use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{SimError, SimTime};

/// A scheduled event. `seq` is assigned by the queue at insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<E> {
    pub time: SimTime,
    pub seq: u64,
    pub payload: E,
}

struct Entry<E>(Event<E>);

impl<E> Entry<E> {
    fn key(&self) -> (SimTime, u64) {
        (self.0.time, self.0.seq)
    }
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; invert so the earliest (time, seq) is on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

/// Future event set ordered by `(time, seq)`: earliest first, FIFO among equal times.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    next_seq: u64,
    /// Lower bound for new insertions; advanced by the engine as the clock moves.
    floor: SimTime,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::with_capacity(64),
            next_seq: 0,
            floor: SimTime::ZERO,
        }
    }

    /// Inserts `payload` at `time` and returns its sequence number.
    pub fn schedule(&mut self, time: SimTime, payload: E) -> Result<u64, SimError> {
        if time < self.floor {
            return Err(SimError::ScheduledInPast {
                at: time,
                now: self.floor,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { time, seq, payload }));
        Ok(seq)
    }

    pub fn pop(&mut self) -> Option<Event<E>> {
        let ev = self.heap.pop()?.0;
        self.floor = self.floor.max(ev.time);
        Some(ev)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.0.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub(crate) fn advance_floor(&mut self, t: SimTime) {
        self.floor = self.floor.max(t);
    }

    pub fn now(&self) -> SimTime {
        self.floor
    }
}

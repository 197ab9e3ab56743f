//! Deterministic event queue: events dequeue in (time, insertion sequence)
//! order, so simultaneous events run first-scheduled-first.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::time::VirtualTime;

/// Priority queue keyed by time with FIFO tie-breaking.
#[derive(Debug)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<(VirtualTime, u64, WrappedEvent<E>)>>,
    next_seq: u64,
    now: VirtualTime,
}

/// Events never need ordering themselves; the (time, seq) key decides.
#[derive(Debug)]
struct WrappedEvent<E>(E);

impl<E> PartialEq for WrappedEvent<E> {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl<E> Eq for WrappedEvent<E> {}
impl<E> PartialOrd for WrappedEvent<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for WrappedEvent<E> {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: VirtualTime::ZERO,
        }
    }

    /// Latest dequeue time.
    pub fn now(&self) -> VirtualTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `event` at `time`. Scheduling into the past is an engine
    /// bug and aborts the run.
    pub fn schedule(&mut self, time: VirtualTime, event: E) {
        assert!(
            time >= self.now,
            "scheduling into the past: {time} < now {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse((time, seq, WrappedEvent(event))));
    }

    /// Removes and returns the earliest event; `None` signals termination.
    pub fn next_event(&mut self) -> Option<(VirtualTime, E)> {
        let Reverse((time, _, WrappedEvent(event))) = self.heap.pop()?;
        self.now = time;
        Some((time, event))
    }
}

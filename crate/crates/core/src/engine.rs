//! Time-ordered event queue with a simulation clock.
//!
//! Events are dispatched in `(fire_time, sequence_number)` order; the sequence
//! number is assigned at scheduling time, so two events scheduled for the same
//! instant fire in the order they were scheduled.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::time::SimTime;

/// Handle returned by [`EventQueue::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventHandle(u64);

impl EventHandle {
    pub fn sequence_number(self) -> u64 {
        self.0
    }
}

struct Entry<E> {
    fire_time: SimTime,
    seq: u64,
    payload: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_time == other.fire_time && self.seq == other.seq
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_time
            .cmp(&self.fire_time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    cancelled: HashSet<u64>,
    next_seq: u64,
    now: SimTime,
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
            cancelled: HashSet::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of queued events, including cancelled ones not yet discarded.
    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Queues `payload` to fire at `fire_time`.
    ///
    /// # Panics
    ///
    /// Scheduling before the current clock is a programming fault and aborts
    /// the run.
    pub fn schedule(&mut self, fire_time: SimTime, payload: E) -> EventHandle {
        assert!(
            fire_time >= self.now,
            "event scheduled in the past: fire_time {} < clock {}",
            fire_time,
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry {
            fire_time,
            seq,
            payload,
        });
        EventHandle(seq)
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> EventHandle {
        let at = self.now + delay;
        self.schedule(at, payload)
    }

    /// Cancels a pending event. Cancelling an already-dispatched handle is a no-op.
    pub fn cancel(&mut self, handle: EventHandle) {
        if handle.0 < self.next_seq {
            self.cancelled.insert(handle.0);
        }
    }

    /// Pops the next live event with `fire_time <= t_end`, advancing the clock.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        loop {
            let top = self.heap.peek()?;
            if top.fire_time > t_end {
                return None;
            }
            let entry = self.heap.pop().expect("peeked");
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            self.now = entry.fire_time;
            return Some((entry.fire_time, entry.payload));
        }
    }

    /// Dispatches every event with `fire_time <= t_end` through `handler`,
    /// then sets the clock to `t_end`. Returns the number of dispatched events.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut Self, SimTime, E),
    {
        assert!(t_end >= self.now, "run_until({t_end}) before clock {}", self.now);
        let mut count = 0;
        while let Some((t, ev)) = self.pop_until(t_end) {
            handler(self, t, ev);
            count += 1;
        }
        self.now = t_end;
        count
    }

    /// Iterates the live pending payloads in unspecified order.
    pub fn pending(&self) -> impl Iterator<Item = &E> {
        self.heap
            .iter()
            .filter(|e| !self.cancelled.contains(&e.seq))
            .map(|e| &e.payload)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(q: &mut EventQueue<&'static str>, t_end: SimTime) -> Vec<&'static str> {
        let mut out = Vec::new();
        q.run_until(t_end, |_, _, e| out.push(e));
        out
    }

    #[test]
    fn dispatches_in_time_order() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(5), "five");
        q.schedule(SimTime::from_secs(3), "three");
        assert_eq!(drain(&mut q, SimTime::from_secs(10)), vec!["three", "five"]);
    }

    #[test]
    fn equal_times_follow_sequence_numbers() {
        let mut q = EventQueue::new();
        let a = q.schedule(SimTime::from_secs(3), "a");
        let b = q.schedule(SimTime::from_secs(3), "b");
        assert!(a.sequence_number() < b.sequence_number());
        assert_eq!(drain(&mut q, SimTime::from_secs(3)), vec!["a", "b"]);
    }

    #[test]
    fn cancelled_event_never_fires() {
        let mut q = EventQueue::new();
        let h = q.schedule(SimTime::from_secs(1), "gone");
        q.schedule(SimTime::from_secs(2), "kept");
        q.cancel(h);
        assert_eq!(drain(&mut q, SimTime::from_secs(5)), vec!["kept"]);
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut q: EventQueue<()> = EventQueue::new();
        assert_eq!(q.run_until(SimTime::from_secs(600), |_, _, _| {}), 0);
        assert_eq!(q.now(), SimTime::from_secs(600));
    }

    #[test]
    fn run_until_boundary_is_inclusive() {
        let mut q = EventQueue::new();
        for s in [1, 2, 600] {
            q.schedule(SimTime::from_secs(s), ());
        }
        q.schedule(SimTime::from_secs(601), ());
        assert_eq!(q.run_until(SimTime::from_secs(600), |_, _, _| {}), 3);
        assert_eq!(q.now(), SimTime::from_secs(600));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn handler_can_schedule_follow_ups() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(1), 0u32);
        let mut seen = Vec::new();
        q.run_until(SimTime::from_secs(10), |q, t, n| {
            seen.push((t, n));
            if n < 3 {
                q.schedule_in(SimTime::from_secs(1), n + 1);
            }
        });
        assert_eq!(seen.len(), 4);
        assert_eq!(seen[3], (SimTime::from_secs(4), 3));
    }

    #[test]
    #[should_panic(expected = "scheduled in the past")]
    fn scheduling_in_the_past_aborts() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_secs(5), ());
        q.run_until(SimTime::from_secs(5), |_, _, _| {});
        q.schedule(SimTime::from_secs(4), ());
    }
}

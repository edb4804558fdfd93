use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::time::SimTime;

/// Scheduling class; lower runs first among events at the same instant.
pub const PRIORITY_MEDIUM: u8 = 0;
pub const PRIORITY_TIMER: u8 = 1;
pub const PRIORITY_WORKLOAD: u8 = 2;
pub const PRIORITY_END: u8 = u8::MAX;

/// Node id used for events that belong to the medium or the workload.
pub const MEDIUM: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct SimEvent<P> {
    pub time: SimTime,
    pub priority: u8,
    pub node: u32,
    pub seq: u64,
    pub payload: P,
}

impl<P> SimEvent<P> {
    fn key(&self) -> (SimTime, u8, u32, u64) {
        (self.time, self.priority, self.node, self.seq)
    }
}

impl<P> PartialEq for SimEvent<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for SimEvent<P> {}

impl<P> PartialOrd for SimEvent<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for SimEvent<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Min-queue over `(time, priority, node, seq)`. `seq` is a monotone issue
/// counter, so no two scheduled events ever compare equal.
#[derive(Debug)]
pub struct EventQueue<P> {
    heap: BinaryHeap<Reverse<SimEvent<P>>>,
    next_seq: u64,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn schedule(&mut self, time: SimTime, priority: u8, node: u32, payload: P) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(SimEvent {
            time,
            priority,
            node,
            seq,
            payload,
        }));
        seq
    }

    pub fn next_event(&mut self) -> Option<SimEvent<P>> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    #[test]
    fn priority_breaks_time_ties() {
        let mut q = EventQueue::new();
        q.schedule(t(5.0), 1, 0, "timer");
        q.schedule(t(5.0), 0, 0, "medium");
        assert_eq!(q.next_event().unwrap().payload, "medium");
        assert_eq!(q.next_event().unwrap().payload, "timer");
    }

    #[test]
    fn node_id_breaks_priority_ties() {
        let mut q = EventQueue::new();
        for _ in 0..7 {
            q.schedule(t(9.0), 0, 0, "filler");
        }
        q.schedule(t(5.0), 0, 3, "node 3");
        q.schedule(t(5.0), 0, 3, "filler");
        q.schedule(t(5.0), 0, 1, "node 1");
        assert_eq!(q.next_event().unwrap().payload, "node 1");
        assert_eq!(q.next_event().unwrap().payload, "node 3");
    }

    #[test]
    fn equal_keys_pop_in_issue_order() {
        let mut q = EventQueue::new();
        for i in 0..100 {
            q.schedule(t(1.0), 2, 4, i);
        }
        let order: Vec<i32> = std::iter::from_fn(|| q.next_event().map(|e| e.payload)).collect();
        assert_eq!(order, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn empty_queue_pops_none() {
        let mut q: EventQueue<()> = EventQueue::new();
        assert!(q.next_event().is_none());
        assert!(q.is_empty());
    }
}

//! Interface queue and DCF-style contention parameters.
//!
//! The medium model itself (carrier sense, collisions, delivery) lives in the
//! simulator loop because it needs every node's position; this module holds
//! the per-node pieces.

use std::collections::VecDeque;

use crate::time::SimTime;

use super::{Frame, LinkDst};

#[derive(Debug, Clone, PartialEq)]
pub struct MacConfig {
    pub slot: SimTime,
    pub difs: SimTime,
    /// A transmission becomes audible to carrier sense this long after it starts.
    pub cca_delay: SimTime,
    pub cw_min: u64,
    pub cw_max: u64,
    /// Attempts per unicast frame before a link failure is reported.
    pub retry_limit: u32,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig {
            slot: SimTime::from_micros(20),
            difs: SimTime::from_micros(50),
            cca_delay: SimTime::from_micros(20),
            cw_min: 32,
            cw_max: 1024,
            retry_limit: 4,
        }
    }
}

impl MacConfig {
    pub fn contention_window(&self, attempt: u32) -> u64 {
        (self.cw_min << attempt.min(16)).min(self.cw_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnqueueOutcome {
    Accepted,
    /// The queue was full; the frame is handed back.
    DroppedFull(Frame),
}

/// Bounded FIFO where control frames are served ahead of data frames.
/// Capacity counts frames of both classes together.
#[derive(Debug, Clone, Default)]
pub struct InterfaceQueue {
    control: VecDeque<Frame>,
    data: VecDeque<Frame>,
    capacity: usize,
}

impl InterfaceQueue {
    pub fn new(capacity: usize) -> Self {
        InterfaceQueue {
            control: VecDeque::new(),
            data: VecDeque::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.control.len() + self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn enqueue(&mut self, frame: Frame) -> EnqueueOutcome {
        if self.len() >= self.capacity {
            return EnqueueOutcome::DroppedFull(frame);
        }
        if frame.kind().is_control() {
            self.control.push_back(frame);
        } else {
            self.data.push_back(frame);
        }
        EnqueueOutcome::Accepted
    }

    pub fn dequeue(&mut self) -> Option<Frame> {
        self.control.pop_front().or_else(|| self.data.pop_front())
    }

    /// Removes every queued unicast frame addressed to `next_hop`, in queue order.
    pub fn remove_for(&mut self, next_hop: crate::packet::NodeId) -> Vec<Frame> {
        let mut out = Vec::new();
        for q in [&mut self.control, &mut self.data] {
            let mut keep = VecDeque::with_capacity(q.len());
            for f in q.drain(..) {
                if f.link_dst == LinkDst::Unicast(next_hop) {
                    out.push(f);
                } else {
                    keep.push_back(f);
                }
            }
            *q = keep;
        }
        out
    }

    pub fn drain_all(&mut self) -> Vec<Frame> {
        self.control.drain(..).chain(self.data.drain(..)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        self.control.iter().chain(self.data.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{DataPacket, NodeId, Packet, PacketUid, RouteError};

    fn data(uid: u64) -> Frame {
        let mut d = DataPacket::new(PacketUid(uid), NodeId(0), NodeId(1), 512);
        d.route = vec![NodeId(0), NodeId(1)];
        Frame::new(NodeId(0), LinkDst::Unicast(NodeId(1)), Packet::Data(d))
    }

    fn rerr(uid: u64) -> Frame {
        Frame::new(
            NodeId(0),
            LinkDst::Unicast(NodeId(2)),
            Packet::Rerr(RouteError {
                uid: PacketUid(uid),
                reporter: NodeId(0),
                broken_link: (NodeId(0), NodeId(1)),
                dest: NodeId(2),
                path: vec![NodeId(0), NodeId(2)],
            }),
        )
    }

    #[test]
    fn capacity_boundary() {
        let mut q = InterfaceQueue::new(50);
        for i in 0..49 {
            assert_eq!(q.enqueue(data(i)), EnqueueOutcome::Accepted);
        }
        assert_eq!(q.enqueue(data(49)), EnqueueOutcome::Accepted);
        assert_eq!(q.len(), 50);
        assert!(matches!(q.enqueue(data(50)), EnqueueOutcome::DroppedFull(_)));
        assert_eq!(q.len(), 50);
    }

    #[test]
    fn control_served_first_fifo_within_class() {
        let mut q = InterfaceQueue::new(10);
        q.enqueue(data(1));
        q.enqueue(rerr(2));
        q.enqueue(data(3));
        q.enqueue(rerr(4));
        let order: Vec<u64> = std::iter::from_fn(|| q.dequeue())
            .map(|f| f.packet.uid().0)
            .collect();
        assert_eq!(order, vec![2, 4, 1, 3]);
    }

    #[test]
    fn remove_for_filters_by_next_hop() {
        let mut q = InterfaceQueue::new(10);
        q.enqueue(data(1));
        q.enqueue(rerr(2));
        q.enqueue(data(3));
        let gone = q.remove_for(NodeId(1));
        assert_eq!(gone.len(), 2);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn contention_window_doubles_to_cap() {
        let m = MacConfig::default();
        assert_eq!(m.contention_window(0), 32);
        assert_eq!(m.contention_window(1), 64);
        assert_eq!(m.contention_window(10), 1024);
    }
}

use std::collections::{BTreeMap, VecDeque};

use crate::packet::{DataPacket, NodeId};
use crate::time::SimTime;

/// Per-destination send buffer for packets waiting on route discovery.
#[derive(Debug, Clone)]
pub struct SendBuffer {
    queues: BTreeMap<NodeId, VecDeque<(SimTime, DataPacket)>>,
    capacity: usize,
    timeout: SimTime,
}

impl SendBuffer {
    pub fn new(capacity: usize, timeout: SimTime) -> Self {
        SendBuffer {
            queues: BTreeMap::new(),
            capacity,
            timeout,
        }
    }

    pub fn len(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len_for(&self, dest: NodeId) -> usize {
        self.queues.get(&dest).map_or(0, VecDeque::len)
    }

    /// Appends `packet`; returns the evicted oldest packet on overflow.
    pub fn push(&mut self, packet: DataPacket, now: SimTime) -> Option<DataPacket> {
        let q = self.queues.entry(packet.dst).or_default();
        q.push_back((now, packet));
        if q.len() > self.capacity {
            q.pop_front().map(|(_, p)| p)
        } else {
            None
        }
    }

    pub fn oldest(&self, dest: NodeId) -> Option<SimTime> {
        self.queues.get(&dest)?.front().map(|(t, _)| *t)
    }

    /// Removes packets that have waited at least the timeout.
    pub fn expire(&mut self, dest: NodeId, now: SimTime) -> Vec<DataPacket> {
        let mut out = Vec::new();
        if let Some(q) = self.queues.get_mut(&dest) {
            while q.front().is_some_and(|(t, _)| *t + self.timeout <= now) {
                out.push(q.pop_front().unwrap().1);
            }
            if q.is_empty() {
                self.queues.remove(&dest);
            }
        }
        out
    }

    pub fn take(&mut self, dest: NodeId) -> Vec<DataPacket> {
        self.queues
            .remove(&dest)
            .map(|q| q.into_iter().map(|(_, p)| p).collect())
            .unwrap_or_default()
    }

    pub fn drain_all(&mut self) -> Vec<DataPacket> {
        std::mem::take(&mut self.queues)
            .into_values()
            .flat_map(|q| q.into_iter().map(|(_, p)| p))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::PacketUid;

    fn pkt(uid: u64, dst: u32) -> DataPacket {
        DataPacket::new(PacketUid(uid), NodeId(0), NodeId(dst), 512)
    }

    #[test]
    fn overflow_evicts_oldest() {
        let mut b = SendBuffer::new(2, SimTime::from_secs(30));
        assert!(b.push(pkt(1, 5), SimTime::ZERO).is_none());
        assert!(b.push(pkt(2, 5), SimTime::ZERO).is_none());
        let gone = b.push(pkt(3, 5), SimTime::ZERO).unwrap();
        assert_eq!(gone.uid, PacketUid(1));
        // other destinations have their own capacity
        assert!(b.push(pkt(4, 6), SimTime::ZERO).is_none());
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn expiry_respects_timeout() {
        let mut b = SendBuffer::new(8, SimTime::from_secs(30));
        b.push(pkt(1, 5), SimTime::from_secs(0));
        b.push(pkt(2, 5), SimTime::from_secs(10));
        assert!(b.expire(NodeId(5), SimTime::from_secs(29)).is_empty());
        let gone = b.expire(NodeId(5), SimTime::from_secs(30));
        assert_eq!(gone.len(), 1);
        assert_eq!(b.oldest(NodeId(5)), Some(SimTime::from_secs(10)));
    }

    #[test]
    fn take_preserves_order() {
        let mut b = SendBuffer::new(8, SimTime::from_secs(30));
        for i in 0..4 {
            b.push(pkt(i, 5), SimTime::ZERO);
        }
        let uids: Vec<u64> = b.take(NodeId(5)).iter().map(|p| p.uid.0).collect();
        assert_eq!(uids, vec![0, 1, 2, 3]);
        assert!(b.is_empty());
    }
}

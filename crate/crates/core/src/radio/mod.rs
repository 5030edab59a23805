//! Unit-disk propagation, frame sizing, airtime and the energy ledger.

mod energy;
pub mod mac;

pub use energy::{ChargeOutcome, Energy, EnergyLedger, EnergyRole, Power};

use crate::error::{Error, Result};
use crate::mobility::Point;
use crate::packet::{NodeId, Packet, PacketKind};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    /// Metres; the boundary is inclusive.
    pub range: f64,
    /// bits per second
    pub bitrate: f64,
    pub tx_power: f64,
    pub rx_power: f64,
    pub ifq_capacity: usize,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            range: 250.0,
            bitrate: 2e6,
            tx_power: 1.4,
            rx_power: 1.0,
            ifq_capacity: 50,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("range", self.range),
            ("bitrate", self.bitrate),
            ("tx_power", self.tx_power),
            ("rx_power", self.rx_power),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be > 0, got {v}")));
            }
        }
        if self.ifq_capacity == 0 {
            return Err(Error::config("ifq_len", "must be > 0"));
        }
        Ok(())
    }

    /// Time on air for a frame of `size` bytes, rounded up to whole microseconds.
    pub fn airtime(&self, size: u32) -> SimTime {
        let us = (size as f64 * 8.0 * 1e6 / self.bitrate).ceil();
        SimTime::from_micros(us as u64)
    }

    pub fn tx_power(&self) -> Power {
        Power::from_watts(self.tx_power)
    }

    pub fn rx_power(&self) -> Power {
        Power::from_watts(self.rx_power)
    }
}

pub const DATA_HEADER: u32 = 16;
pub const RREQ_HEADER: u32 = 24;
pub const RREP_HEADER: u32 = 24;
pub const RERR_SIZE: u32 = 20;
pub const BYTES_PER_HOP: u32 = 4;

/// On-air size: fixed header per kind plus 4 bytes per carried route hop.
pub fn frame_size(packet: &Packet) -> u32 {
    let hops = packet.route_hops() as u32;
    match packet.kind() {
        PacketKind::Data => packet.payload() + DATA_HEADER + BYTES_PER_HOP * hops,
        PacketKind::Rreq => RREQ_HEADER + BYTES_PER_HOP * hops,
        PacketKind::Rrep => RREP_HEADER + BYTES_PER_HOP * hops,
        PacketKind::Rerr => RERR_SIZE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkDst {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub src: NodeId,
    pub link_dst: LinkDst,
    pub size: u32,
    pub packet: Packet,
}

impl Frame {
    pub fn new(src: NodeId, link_dst: LinkDst, packet: Packet) -> Self {
        Frame {
            src,
            link_dst,
            size: frame_size(&packet),
            packet,
        }
    }

    pub fn kind(&self) -> PacketKind {
        self.packet.kind()
    }
}

pub fn in_range(a: Point, b: Point, range: f64) -> bool {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy <= range * range
}

/// Alive nodes other than `node` within `range` of it.
pub fn neighbors(positions: &[Point], alive: &[bool], node: NodeId, range: f64) -> Vec<NodeId> {
    let me = node.index();
    if !alive[me] {
        return Vec::new();
    }
    positions
        .iter()
        .enumerate()
        .filter(|&(i, &p)| i != me && alive[i] && in_range(positions[me], p, range))
        .map(|(i, _)| NodeId(i as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{DataPacket, PacketUid};

    #[test]
    fn boundary_is_inclusive() {
        let pos = [Point::new(0.0, 0.0), Point::new(0.0, 250.0)];
        assert_eq!(neighbors(&pos, &[true, true], NodeId(0), 250.0), vec![NodeId(1)]);
        let pos = [Point::new(0.0, 0.0), Point::new(0.0, 250.1)];
        assert!(neighbors(&pos, &[true, true], NodeId(0), 250.0).is_empty());
    }

    #[test]
    fn isolated_and_dead_nodes() {
        let pos = [Point::new(0.0, 0.0)];
        assert!(neighbors(&pos, &[true], NodeId(0), 250.0).is_empty());
        let pos = [Point::new(0.0, 0.0), Point::new(10.0, 0.0)];
        assert!(neighbors(&pos, &[true, false], NodeId(0), 250.0).is_empty());
    }

    #[test]
    fn one_hop_data_frame_airtime_and_energy() {
        let mut d = DataPacket::new(PacketUid(1), NodeId(0), NodeId(1), 512);
        d.route = vec![NodeId(0), NodeId(1)];
        let f = Frame::new(NodeId(0), LinkDst::Unicast(NodeId(1)), Packet::Data(d));
        assert_eq!(f.size, 532);
        let cfg = RadioConfig::default();
        let dur = cfg.airtime(f.size);
        assert_eq!(dur, SimTime::from_micros(2128));
        assert_eq!(cfg.tx_power().energy_for(dur).as_joules(), 0.0029792);
        assert_eq!(cfg.rx_power().energy_for(dur).as_joules(), 0.002128);
    }
}

//! Node identifiers and the packets exchanged by the routing agents.

use std::fmt;

use crate::radio::Energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Globally unique packet identifier within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketUid(pub u64);

impl fmt::Display for PacketUid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketKind {
    Data,
    Rreq,
    Rrep,
    Rerr,
}

impl PacketKind {
    pub fn is_control(self) -> bool {
        !matches!(self, PacketKind::Data)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Data => "DATA",
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "DATA" => PacketKind::Data,
            "RREQ" => PacketKind::Rreq,
            "RREP" => PacketKind::Rrep,
            "RERR" => PacketKind::Rerr,
            _ => return None,
        })
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DATA_TTL: u8 = 64;
pub const MAX_SALVAGE: u8 = 15;

/// Application packet carrying its full source route.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub uid: PacketUid,
    pub src: NodeId,
    pub dst: NodeId,
    /// Path being followed, first element is the node that (re)wrote it.
    pub route: Vec<NodeId>,
    pub ttl: u8,
    pub payload: u32,
    pub salvage_count: u8,
    pub salvaged_by: Vec<NodeId>,
}

impl DataPacket {
    pub fn new(uid: PacketUid, src: NodeId, dst: NodeId, payload: u32) -> Self {
        DataPacket {
            uid,
            src,
            dst,
            route: Vec::new(),
            ttl: DATA_TTL,
            payload,
            salvage_count: 0,
            salvaged_by: Vec::new(),
        }
    }

    /// Next hop after `node` on the carried route.
    pub fn next_hop_after(&self, node: NodeId) -> Option<NodeId> {
        let i = self.route.iter().position(|&n| n == node)?;
        self.route.get(i + 1).copied()
    }
}

/// Route request. `route` excludes the originating source.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteRequest {
    pub uid: PacketUid,
    pub src: NodeId,
    pub dest: NodeId,
    pub seq: u32,
    pub route: Vec<NodeId>,
    /// `None` until the first forwarder stamps its residual energy.
    pub min_bat_lev: Option<Energy>,
}

impl RouteRequest {
    /// Neighbor that transmitted this copy.
    pub fn last_node(&self) -> NodeId {
        self.route.last().copied().unwrap_or(self.src)
    }

    /// `src` followed by the traversed nodes.
    pub fn path_so_far(&self) -> Vec<NodeId> {
        let mut p = Vec::with_capacity(self.route.len() + 1);
        p.push(self.src);
        p.extend_from_slice(&self.route);
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReplyRank {
    Primary,
    Alternate,
    /// Baseline DSR replies, unranked.
    Any,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteReply {
    pub uid: PacketUid,
    pub seq: u32,
    /// Discovered path from the discovery initiator to its target.
    pub route: Vec<NodeId>,
    /// Path the reply travels: replier first, initiator last.
    pub return_path: Vec<NodeId>,
    pub rank: ReplyRank,
}

impl RouteReply {
    pub fn initiator(&self) -> NodeId {
        self.route[0]
    }

    pub fn target(&self) -> NodeId {
        *self.route.last().expect("non-empty route")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteError {
    pub uid: PacketUid,
    pub reporter: NodeId,
    pub broken_link: (NodeId, NodeId),
    /// Traffic source being informed.
    pub dest: NodeId,
    /// Reporter first, `dest` last.
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Packet {
    Data(DataPacket),
    Rreq(RouteRequest),
    Rrep(RouteReply),
    Rerr(RouteError),
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match self {
            Packet::Data(_) => PacketKind::Data,
            Packet::Rreq(_) => PacketKind::Rreq,
            Packet::Rrep(_) => PacketKind::Rrep,
            Packet::Rerr(_) => PacketKind::Rerr,
        }
    }

    pub fn uid(&self) -> PacketUid {
        match self {
            Packet::Data(p) => p.uid,
            Packet::Rreq(p) => p.uid,
            Packet::Rrep(p) => p.uid,
            Packet::Rerr(p) => p.uid,
        }
    }

    /// Node addresses carried in the header, charged 4 bytes each.
    pub fn route_hops(&self) -> usize {
        match self {
            Packet::Data(p) => p.route.len().saturating_sub(1),
            Packet::Rreq(p) => p.route.len(),
            Packet::Rrep(p) => p.route.len().saturating_sub(1),
            Packet::Rerr(_) => 0,
        }
    }

    /// Application payload bytes (zero for control packets).
    pub fn payload(&self) -> u32 {
        match self {
            Packet::Data(p) => p.payload,
            _ => 0,
        }
    }

    pub fn as_data(&self) -> Option<&DataPacket> {
        match self {
            Packet::Data(p) => Some(p),
            _ => None,
        }
    }
}

/// True if no node appears twice.
pub fn is_loop_free(route: &[NodeId]) -> bool {
    let mut seen: Vec<NodeId> = route.to_vec();
    seen.sort_unstable();
    seen.windows(2).all(|w| w[0] != w[1])
}

/// True if `a` and `b` are adjacent in `route`, in either direction.
pub fn uses_link(route: &[NodeId], link: (NodeId, NodeId)) -> bool {
    route
        .windows(2)
        .any(|w| (w[0] == link.0 && w[1] == link.1) || (w[0] == link.1 && w[1] == link.0))
}

//! Routing agents and the machinery they share.
//!
//! Agents are sans-IO state machines: every entry point receives a [`Ctx`]
//! and records [`Action`]s on it, which the simulator then executes (queueing
//! frames, arming timers, tracing drops). This keeps the protocols testable
//! without a radio model.

pub mod dsr;
pub mod meadsr;
pub mod selection;

mod buffer;

use std::collections::{BTreeMap, BTreeSet};

pub use buffer::SendBuffer;

use crate::packet::{DataPacket, NodeId, Packet, PacketUid, RouteRequest};
use crate::radio::Energy;
use crate::time::SimTime;
use crate::trace::DropReason;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    /// Destination wait before route selection.
    pub wait_time: SimTime,
    pub buffer_capacity: usize,
    pub buffer_timeout: SimTime,
    pub discovery_backoff_initial: SimTime,
    pub discovery_backoff_max: SimTime,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            wait_time: SimTime::from_millis(60),
            buffer_capacity: 64,
            buffer_timeout: SimTime::from_secs(30),
            discovery_backoff_initial: SimTime::from_millis(500),
            discovery_backoff_max: SimTime::from_secs(10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimerKey {
    /// Destination-side wait window for `(src, seq)`.
    Wait { src: NodeId, seq: u32 },
    /// Retry deadline for an outstanding discovery.
    Discovery { dest: NodeId },
    /// Oldest buffered packet for `dest` reaches its timeout.
    BufferExpiry { dest: NodeId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SendMode {
    /// This node created the packet.
    Originate,
    Forward,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// `next_hop: None` broadcasts. `jitter` asks for a small random delay
    /// before the frame reaches the interface queue.
    Send {
        packet: Packet,
        next_hop: Option<NodeId>,
        mode: SendMode,
        jitter: bool,
    },
    Deliver(DataPacket),
    Drop {
        packet: Packet,
        reason: DropReason,
    },
    SetTimer {
        key: TimerKey,
        delay: SimTime,
    },
    CancelTimer(TimerKey),
}

/// A route-table candidate as seen by the destination's selection step.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteTableEntry {
    pub src: NodeId,
    pub seq: u32,
    /// Intermediate nodes only: excludes both the source and the destination.
    pub route: Vec<NodeId>,
    pub min_bat_lev: Option<Energy>,
    pub arriving_time: SimTime,
}

impl RouteTableEntry {
    /// Hops of the complete source-to-destination path.
    pub fn route_length(&self) -> u64 {
        self.route.len() as u64 + 1
    }

    pub fn full_path(&self, dest: NodeId) -> Vec<NodeId> {
        let mut p = Vec::with_capacity(self.route.len() + 2);
        p.push(self.src);
        p.extend_from_slice(&self.route);
        p.push(dest);
        p
    }
}

/// Protocol-level observations, recorded only when auditing is enabled.
/// They feed the invariant checks in [`crate::audit`].
#[derive(Debug, Clone, PartialEq)]
pub enum AuditEvent {
    RreqForwarded {
        node: NodeId,
        src: NodeId,
        seq: u32,
        from: NodeId,
        arrived_len: usize,
        first_nb_hops: usize,
        copy: u8,
        residual: Energy,
        route_after: Vec<NodeId>,
        min_bat_lev_after: Option<Energy>,
    },
    RreqAtDestination {
        node: NodeId,
        src: NodeId,
        seq: u32,
        route: Vec<NodeId>,
        min_bat_lev: Option<Energy>,
    },
    RouteSelected {
        node: NodeId,
        src: NodeId,
        seq: u32,
        candidates: Vec<RouteTableEntry>,
        primary: Vec<NodeId>,
        alternate: Option<Vec<NodeId>>,
    },
    RrepSent {
        node: NodeId,
        initiator: NodeId,
        seq: u32,
        route: Vec<NodeId>,
    },
    RouteInstalled {
        node: NodeId,
        dest: NodeId,
        route: Vec<NodeId>,
    },
    CachePurged {
        node: NodeId,
        link: (NodeId, NodeId),
        remaining: Vec<Vec<NodeId>>,
    },
}

/// Per-call context handed to an agent.
#[derive(Debug)]
pub struct Ctx {
    pub node: NodeId,
    pub now: SimTime,
    /// Residual battery of `node` at call time.
    pub residual: Energy,
    next_uid: u64,
    actions: Vec<Action>,
    audit: Option<Vec<AuditEvent>>,
}

impl Ctx {
    pub fn new(node: NodeId, now: SimTime, residual: Energy, next_uid: u64) -> Self {
        Ctx {
            node,
            now,
            residual,
            next_uid,
            actions: Vec::new(),
            audit: None,
        }
    }

    pub fn with_audit(mut self) -> Self {
        self.audit = Some(Vec::new());
        self
    }

    pub fn alloc_uid(&mut self) -> PacketUid {
        let uid = PacketUid(self.next_uid);
        self.next_uid += 1;
        uid
    }

    pub fn next_uid(&self) -> u64 {
        self.next_uid
    }

    pub fn push(&mut self, action: Action) {
        self.actions.push(action);
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn take_actions(&mut self) -> Vec<Action> {
        std::mem::take(&mut self.actions)
    }

    pub fn take_audit(&mut self) -> Vec<AuditEvent> {
        self.audit.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn auditing(&self) -> bool {
        self.audit.is_some()
    }

    pub fn audit(&mut self, f: impl FnOnce() -> AuditEvent) {
        if let Some(log) = self.audit.as_mut() {
            log.push(f());
        }
    }

    fn unicast(&mut self, packet: Packet, next_hop: NodeId, mode: SendMode) {
        self.push(Action::Send {
            packet,
            next_hop: Some(next_hop),
            mode,
            jitter: false,
        });
    }

    fn drop_packet(&mut self, packet: Packet, reason: DropReason) {
        self.push(Action::Drop { packet, reason });
    }
}

/// Entry points the simulator drives.
pub trait RoutingAgent {
    fn id(&self) -> NodeId;

    /// A new application packet from this node.
    fn originate(&mut self, ctx: &mut Ctx, packet: DataPacket);

    /// A frame addressed to (or broadcast near) this node arrived from `from`.
    fn receive(&mut self, ctx: &mut Ctx, packet: Packet, from: NodeId);

    /// The MAC gave up on `packets`, all addressed to `next_hop`.
    fn link_failed(&mut self, ctx: &mut Ctx, packets: Vec<Packet>, next_hop: NodeId);

    fn timer(&mut self, ctx: &mut Ctx, key: TimerKey);

    /// Data packets held in the send buffer.
    fn buffered_data(&self) -> usize;

    /// Empties the send buffer (node death).
    fn drain_buffer(&mut self) -> Vec<DataPacket>;

    /// Snapshot of every cached route, used by audits.
    fn cached_routes(&self) -> Vec<Vec<NodeId>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Discovery {
    seq: u32,
    backoff: SimTime,
}

/// Source-side bookkeeping common to both protocols: sequence numbers, the
/// per-destination send buffer and discovery retry with exponential backoff.
#[derive(Debug, Clone)]
pub(crate) struct Originator {
    id: NodeId,
    cfg: AgentConfig,
    seq: u32,
    buffer: SendBuffer,
    pending: BTreeMap<NodeId, Discovery>,
    last_seq: BTreeMap<NodeId, u32>,
    flows: BTreeSet<NodeId>,
}

impl Originator {
    pub(crate) fn new(id: NodeId, cfg: AgentConfig) -> Self {
        Originator {
            id,
            buffer: SendBuffer::new(cfg.buffer_capacity, cfg.buffer_timeout),
            cfg,
            seq: 0,
            pending: BTreeMap::new(),
            last_seq: BTreeMap::new(),
            flows: BTreeSet::new(),
        }
    }

    pub(crate) fn cfg(&self) -> &AgentConfig {
        &self.cfg
    }

    /// Sequence number of the most recent discovery for `dest`.
    pub(crate) fn last_seq(&self, dest: NodeId) -> Option<u32> {
        self.last_seq.get(&dest).copied()
    }

    /// Records that this node originates traffic towards `dest`.
    pub(crate) fn note_flow(&mut self, dest: NodeId) {
        self.flows.insert(dest);
    }

    /// Restarts discovery for every flow destination left without a route.
    pub(crate) fn rediscover_lost(&mut self, ctx: &mut Ctx, has_route: impl Fn(NodeId) -> bool) {
        let lost: Vec<NodeId> = self.flows.iter().copied().filter(|&d| !has_route(d)).collect();
        for dest in lost {
            self.discover(ctx, dest);
        }
    }

    pub(crate) fn buffered(&self) -> usize {
        self.buffer.len()
    }

    pub(crate) fn has_buffered(&self, dest: NodeId) -> bool {
        self.buffer.len_for(dest) > 0
    }

    pub(crate) fn drain(&mut self) -> Vec<DataPacket> {
        self.buffer.drain_all()
    }

    /// Holds `packet` until a route to its destination is known.
    pub(crate) fn hold(&mut self, ctx: &mut Ctx, packet: DataPacket) {
        let dest = packet.dst;
        let was_empty = self.buffer.len_for(dest) == 0;
        if let Some(evicted) = self.buffer.push(packet, ctx.now) {
            ctx.drop_packet(Packet::Data(evicted), DropReason::Nrte);
        }
        if was_empty {
            ctx.push(Action::SetTimer {
                key: TimerKey::BufferExpiry { dest },
                delay: self.cfg.buffer_timeout,
            });
        }
    }

    /// Starts a discovery for `dest` unless one is already outstanding.
    pub(crate) fn discover(&mut self, ctx: &mut Ctx, dest: NodeId) {
        if self.pending.contains_key(&dest) {
            return;
        }
        let backoff = self.cfg.discovery_backoff_initial;
        self.flood(ctx, dest, backoff);
    }

    fn flood(&mut self, ctx: &mut Ctx, dest: NodeId, backoff: SimTime) {
        self.seq += 1;
        self.last_seq.insert(dest, self.seq);
        self.pending.insert(
            dest,
            Discovery {
                seq: self.seq,
                backoff,
            },
        );
        let rreq = RouteRequest {
            uid: ctx.alloc_uid(),
            src: self.id,
            dest,
            seq: self.seq,
            route: Vec::new(),
            min_bat_lev: None,
        };
        ctx.push(Action::Send {
            packet: Packet::Rreq(rreq),
            next_hop: None,
            mode: SendMode::Originate,
            jitter: false,
        });
        ctx.push(Action::SetTimer {
            key: TimerKey::Discovery { dest },
            delay: backoff,
        });
    }

    /// Discovery deadline passed. Retries with doubled backoff while data waits.
    pub(crate) fn on_discovery_timeout(&mut self, ctx: &mut Ctx, dest: NodeId, has_route: bool) {
        let Some(d) = self.pending.remove(&dest) else {
            return;
        };
        if has_route || !self.has_buffered(dest) {
            return;
        }
        let backoff = (d.backoff + d.backoff).min(self.cfg.discovery_backoff_max);
        self.flood(ctx, dest, backoff);
    }

    pub(crate) fn on_buffer_expiry(&mut self, ctx: &mut Ctx, dest: NodeId) {
        for p in self.buffer.expire(dest, ctx.now) {
            ctx.drop_packet(Packet::Data(p), DropReason::Nrte);
        }
        if let Some(oldest) = self.buffer.oldest(dest) {
            ctx.push(Action::SetTimer {
                key: TimerKey::BufferExpiry { dest },
                delay: (oldest + self.cfg.buffer_timeout).saturating_sub(ctx.now),
            });
        }
    }

    /// A usable route to `dest` exists: ends the discovery and hands back the
    /// buffered packets in arrival order.
    pub(crate) fn route_found(&mut self, ctx: &mut Ctx, dest: NodeId) -> Vec<DataPacket> {
        if self.pending.remove(&dest).is_some() {
            ctx.push(Action::CancelTimer(TimerKey::Discovery { dest }));
        }
        let packets = self.buffer.take(dest);
        if !packets.is_empty() {
            ctx.push(Action::CancelTimer(TimerKey::BufferExpiry { dest }));
        }
        packets
    }
}

/// Sends `packet` from its source along `route` (which starts at this node).
pub(crate) fn send_on_route(ctx: &mut Ctx, mut packet: DataPacket, route: Vec<NodeId>) {
    debug_assert_eq!(route.first(), Some(&ctx.node));
    let next = route[1];
    packet.route = route;
    ctx.unicast(Packet::Data(packet), next, SendMode::Originate);
}

/// Delivers or forwards a data packet along its carried source route.
pub(crate) fn handle_data(ctx: &mut Ctx, mut packet: DataPacket) {
    if packet.dst == ctx.node {
        ctx.push(Action::Deliver(packet));
        return;
    }
    let Some(next) = packet.next_hop_after(ctx.node) else {
        ctx.drop_packet(Packet::Data(packet), DropReason::Nrte);
        return;
    };
    packet.ttl = packet.ttl.saturating_sub(1);
    if packet.ttl == 0 {
        ctx.drop_packet(Packet::Data(packet), DropReason::Ttl);
        return;
    }
    ctx.unicast(Packet::Data(packet), next, SendMode::Forward);
}

/// Relays a control packet one hop along `path` (this node must be on it).
pub(crate) fn relay_along(ctx: &mut Ctx, packet: Packet, path: &[NodeId]) {
    match path
        .iter()
        .position(|&n| n == ctx.node)
        .and_then(|i| path.get(i + 1))
    {
        Some(&next) => ctx.unicast(packet, next, SendMode::Forward),
        None => ctx.drop_packet(packet, DropReason::Nrte),
    }
}

/// Builds the error report for a broken link `(ctx.node, next_hop)` seen on
/// `route`, addressed to `route[0]`. `None` when this node is `route[0]`.
pub(crate) fn route_error_for(
    ctx: &mut Ctx,
    route: &[NodeId],
    next_hop: NodeId,
) -> Option<crate::packet::RouteError> {
    let me = ctx.node;
    let idx = route.iter().position(|&n| n == me)?;
    if idx == 0 {
        return None;
    }
    let mut path: Vec<NodeId> = route[..=idx].to_vec();
    path.reverse();
    Some(crate::packet::RouteError {
        uid: ctx.alloc_uid(),
        reporter: me,
        broken_link: (me, next_hop),
        dest: route[0],
        path,
    })
}

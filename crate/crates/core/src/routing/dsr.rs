//! Baseline dynamic source routing.
//!
//! Requests are flooded once per `(src, seq)`. The target answers every copy
//! that brings a new path, and intermediates holding a cached route answer on
//! its behalf. Nodes learn routes from the replies and data they forward, and
//! an intermediate that loses a link salvages the packet over a cached
//! alternative when it has one.

use std::collections::{BTreeMap, VecDeque};

use crate::packet::{
    is_loop_free, uses_link, DataPacket, NodeId, Packet, ReplyRank, RouteError, RouteReply,
    RouteRequest, MAX_SALVAGE,
};
use crate::trace::DropReason;

use super::{
    handle_data, relay_along, route_error_for, send_on_route, Action, AgentConfig, AuditEvent,
    Ctx, Originator, RoutingAgent, SendMode, TimerKey,
};

/// Paths starting at the owning node. Any prefix of a stored path is a
/// usable route to the node where it ends.
#[derive(Debug, Clone)]
pub struct PathCache {
    owner: NodeId,
    paths: VecDeque<Vec<NodeId>>,
    capacity: usize,
}

impl PathCache {
    /// Holds at most `capacity` paths, evicting the oldest.
    pub fn new(owner: NodeId, capacity: usize) -> Self {
        PathCache {
            owner,
            paths: VecDeque::new(),
            capacity,
        }
    }

    pub fn unbounded(owner: NodeId) -> Self {
        Self::new(owner, usize::MAX)
    }

    /// Stores `path` (must start at the owner). Paths already covered by a
    /// stored one are skipped; the oldest path is evicted when full.
    pub fn add(&mut self, path: Vec<NodeId>) -> bool {
        if path.len() < 2 || path[0] != self.owner || !is_loop_free(&path) {
            return false;
        }
        if self.paths.iter().any(|p| p.starts_with(&path)) {
            return false;
        }
        self.paths.retain(|p| !path.starts_with(p));
        self.paths.push_back(path);
        if self.paths.len() > self.capacity {
            self.paths.pop_front();
        }
        true
    }

    /// Shortest known route to `dest`; ties go to the oldest path.
    pub fn lookup(&self, dest: NodeId) -> Option<&[NodeId]> {
        self.paths
            .iter()
            .filter_map(|p| p.iter().position(|&n| n == dest).map(|i| &p[..=i]))
            .filter(|r| r.len() >= 2)
            .min_by_key(|r| r.len())
    }

    /// Cuts every path at `link`, keeping the part before the break.
    pub fn purge_link(&mut self, link: (NodeId, NodeId)) -> usize {
        let mut touched = 0;
        for p in self.paths.iter_mut() {
            if let Some(i) = p.windows(2).position(|w| uses_link(w, link)) {
                p.truncate(i + 1);
                touched += 1;
            }
        }
        self.paths.retain(|p| p.len() >= 2);
        touched
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn paths(&self) -> impl Iterator<Item = &Vec<NodeId>> {
        self.paths.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsrRreqOutcome {
    Forwarded,
    RepliedFromCache,
    RepliedAsTarget,
    Discarded,
}

#[derive(Debug, Clone)]
pub struct DsrAgent {
    id: NodeId,
    origin: Originator,
    cache: PathCache,
    /// Highest request sequence seen per source.
    seen: BTreeMap<NodeId, u32>,
    /// Paths already answered per source, for its latest request.
    answered: BTreeMap<NodeId, (u32, Vec<Vec<NodeId>>)>,
}

impl DsrAgent {
    pub fn new(id: NodeId, cfg: AgentConfig) -> Self {
        DsrAgent {
            id,
            origin: Originator::new(id, cfg),
            cache: PathCache::unbounded(id),
            seen: BTreeMap::new(),
            answered: BTreeMap::new(),
        }
    }

    pub fn cache(&self) -> &PathCache {
        &self.cache
    }

    pub fn process_rreq(&mut self, ctx: &mut Ctx, mut rreq: RouteRequest) -> DsrRreqOutcome {
        if rreq.src == self.id || rreq.route.contains(&self.id) {
            return DsrRreqOutcome::Discarded;
        }
        let mut prefix = rreq.path_so_far();
        prefix.push(self.id);

        if rreq.dest == self.id {
            let (seq, routes) = self
                .answered
                .entry(rreq.src)
                .or_insert((rreq.seq, Vec::new()));
            if rreq.seq < *seq {
                return DsrRreqOutcome::Discarded;
            }
            if rreq.seq > *seq {
                *seq = rreq.seq;
                routes.clear();
            }
            if routes.contains(&prefix) {
                return DsrRreqOutcome::Discarded;
            }
            routes.push(prefix.clone());
            let mut back = prefix.clone();
            back.reverse();
            self.cache.add(back.clone());
            reply(ctx, rreq.seq, prefix, back);
            return DsrRreqOutcome::RepliedAsTarget;
        }

        if self.seen.get(&rreq.src).is_some_and(|&s| rreq.seq <= s) {
            return DsrRreqOutcome::Discarded;
        }
        self.seen.insert(rreq.src, rreq.seq);

        if let Some(suffix) = self.cache.lookup(rreq.dest) {
            let mut full = prefix.clone();
            full.extend_from_slice(&suffix[1..]);
            if is_loop_free(&full) {
                let mut back = prefix;
                back.reverse();
                reply(ctx, rreq.seq, full, back);
                return DsrRreqOutcome::RepliedFromCache;
            }
        }

        rreq.route.push(self.id);
        ctx.push(Action::Send {
            packet: Packet::Rreq(rreq),
            next_hop: None,
            mode: SendMode::Forward,
            jitter: true,
        });
        DsrRreqOutcome::Forwarded
    }

    /// Learns both directions of `route` as seen from this node.
    fn learn(&mut self, route: &[NodeId]) {
        let Some(i) = route.iter().position(|&n| n == self.id) else {
            return;
        };
        self.cache.add(route[i..].to_vec());
        let mut back = route[..=i].to_vec();
        back.reverse();
        self.cache.add(back);
    }

    fn process_rrep(&mut self, ctx: &mut Ctx, rrep: RouteReply) {
        self.learn(&rrep.route);
        if rrep.initiator() != self.id {
            let path = rrep.return_path.clone();
            relay_along(ctx, Packet::Rrep(rrep), &path);
            return;
        }
        let dest = rrep.target();
        ctx.audit(|| AuditEvent::RouteInstalled {
            node: self.id,
            dest,
            route: rrep.route.clone(),
        });
        if self.cache.lookup(dest).is_some() {
            for p in self.origin.route_found(ctx, dest) {
                self.send_or_hold(ctx, p);
            }
        }
    }

    fn process_rerr(&mut self, ctx: &mut Ctx, rerr: RouteError) {
        self.purge(ctx, rerr.broken_link);
        if rerr.dest != self.id {
            let path = rerr.path.clone();
            relay_along(ctx, Packet::Rerr(rerr), &path);
        }
    }

    fn purge(&mut self, ctx: &mut Ctx, link: (NodeId, NodeId)) {
        self.cache.purge_link(link);
        let me = self.id;
        let cache = &self.cache;
        ctx.audit(|| AuditEvent::CachePurged {
            node: me,
            link,
            remaining: cache.paths().cloned().collect(),
        });
    }

    fn send_or_hold(&mut self, ctx: &mut Ctx, packet: DataPacket) {
        match self.cache.lookup(packet.dst) {
            Some(route) => send_on_route(ctx, packet, route.to_vec()),
            None => {
                let dest = packet.dst;
                self.origin.hold(ctx, packet);
                self.origin.discover(ctx, dest);
            }
        }
    }

    /// Tries to reroute a packet stranded here by a broken link.
    fn salvage(&mut self, ctx: &mut Ctx, mut packet: DataPacket) {
        let eligible = packet.salvage_count < MAX_SALVAGE && !packet.salvaged_by.contains(&self.id);
        let route = eligible
            .then(|| self.cache.lookup(packet.dst))
            .flatten()
            .map(<[NodeId]>::to_vec);
        match route {
            Some(route) => {
                packet.salvage_count += 1;
                packet.salvaged_by.push(self.id);
                let next = route[1];
                packet.route = route;
                ctx.push(Action::Send {
                    packet: Packet::Data(packet),
                    next_hop: Some(next),
                    mode: SendMode::Forward,
                    jitter: false,
                });
            }
            None => ctx.push(Action::Drop {
                packet: Packet::Data(packet),
                reason: DropReason::Tout,
            }),
        }
    }
}

fn reply(ctx: &mut Ctx, seq: u32, route: Vec<NodeId>, return_path: Vec<NodeId>) {
    let next = return_path[1];
    let me = ctx.node;
    ctx.audit(|| AuditEvent::RrepSent {
        node: me,
        initiator: route[0],
        seq,
        route: route.clone(),
    });
    let rrep = RouteReply {
        uid: ctx.alloc_uid(),
        seq,
        route,
        return_path,
        rank: ReplyRank::Any,
    };
    ctx.push(Action::Send {
        packet: Packet::Rrep(rrep),
        next_hop: Some(next),
        mode: SendMode::Originate,
        jitter: false,
    });
}

impl RoutingAgent for DsrAgent {
    fn id(&self) -> NodeId {
        self.id
    }

    fn originate(&mut self, ctx: &mut Ctx, packet: DataPacket) {
        self.origin.note_flow(packet.dst);
        self.send_or_hold(ctx, packet);
    }

    fn receive(&mut self, ctx: &mut Ctx, packet: Packet, _from: NodeId) {
        match packet {
            Packet::Data(d) => {
                let route = d.route.clone();
                self.learn(&route);
                handle_data(ctx, d);
            }
            Packet::Rreq(q) => {
                self.process_rreq(ctx, q);
            }
            Packet::Rrep(r) => self.process_rrep(ctx, r),
            Packet::Rerr(e) => self.process_rerr(ctx, e),
        }
    }

    fn link_failed(&mut self, ctx: &mut Ctx, packets: Vec<Packet>, next_hop: NodeId) {
        self.purge(ctx, (self.id, next_hop));
        let mut informed: Vec<NodeId> = Vec::new();
        for p in packets {
            match p {
                Packet::Data(d) if d.src == self.id => self.send_or_hold(ctx, d),
                Packet::Data(d) => {
                    if !informed.contains(&d.route[0]) {
                        if let Some(rerr) = route_error_for(ctx, &d.route, next_hop) {
                            informed.push(rerr.dest);
                            let next = rerr.path[1];
                            ctx.push(Action::Send {
                                packet: Packet::Rerr(rerr),
                                next_hop: Some(next),
                                mode: SendMode::Originate,
                                jitter: false,
                            });
                        }
                    }
                    self.salvage(ctx, d);
                }
                other => ctx.push(Action::Drop {
                    packet: other,
                    reason: DropReason::Tout,
                }),
            }
        }
    }

    fn timer(&mut self, ctx: &mut Ctx, key: TimerKey) {
        match key {
            TimerKey::Discovery { dest } => {
                let has_route = self.cache.lookup(dest).is_some();
                self.origin.on_discovery_timeout(ctx, dest, has_route);
            }
            TimerKey::BufferExpiry { dest } => self.origin.on_buffer_expiry(ctx, dest),
            TimerKey::Wait { .. } => {}
        }
    }

    fn buffered_data(&self) -> usize {
        self.origin.buffered()
    }

    fn drain_buffer(&mut self) -> Vec<DataPacket> {
        self.origin.drain()
    }

    fn cached_routes(&self) -> Vec<Vec<NodeId>> {
        self.cache.paths().cloned().collect()
    }
}

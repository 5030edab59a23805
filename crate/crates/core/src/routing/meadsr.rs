//! Multipath energy-aware source routing.
//!
//! Discovery floods a route request that records the smallest residual
//! battery seen along its path. Intermediate nodes forward the first copy of
//! a request plus at most one later copy that arrives over a different
//! neighbor with no more hops than the first. Only the destination replies:
//! it collects candidates for a short wait window, then returns a primary
//! route (best bottleneck energy per hop) and a maximally node-disjoint
//! alternate. Sources use one route at a time and fall back to the alternate
//! when the primary breaks; intermediates never answer from or salvage with
//! their caches.

use std::collections::BTreeMap;

use crate::packet::{
    is_loop_free, uses_link, DataPacket, NodeId, Packet, ReplyRank, RouteError, RouteReply,
    RouteRequest,
};
use crate::radio::Energy;
use crate::trace::DropReason;

use super::selection::{select_alternate_route, select_primary_route};
use super::{
    handle_data, relay_along, route_error_for, send_on_route, Action, AgentConfig, AuditEvent,
    Ctx, Originator, RouteTableEntry, RoutingAgent, SendMode, TimerKey,
};

/// Duplicate-suppression state for one request source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestTableEntry {
    pub src: NodeId,
    pub seq: u32,
    /// Route length of the first accepted copy.
    pub nb_hops: usize,
    /// Neighbors that delivered each forwarded copy.
    pub last_nodes: Vec<NodeId>,
    pub nb_copies: u8,
}

pub const MAX_COPIES: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    /// This node already appears on the request's route.
    Loop,
    /// The request came back to its own originator.
    OwnRequest,
    StaleSeq,
    SameLink,
    LongerRoute,
    CopyLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardDecision {
    FirstCopy,
    ExtraCopy,
    Discard(DiscardReason),
}

/// Forwarding rule for a request arriving at an intermediate node.
pub fn duplicate_forward_decision(
    node: NodeId,
    entry: Option<&RequestTableEntry>,
    rreq: &RouteRequest,
    from: NodeId,
) -> ForwardDecision {
    use ForwardDecision::*;
    if rreq.src == node {
        return Discard(DiscardReason::OwnRequest);
    }
    if rreq.route.contains(&node) {
        return Discard(DiscardReason::Loop);
    }
    let Some(e) = entry else {
        return FirstCopy;
    };
    if rreq.seq > e.seq {
        return FirstCopy;
    }
    if rreq.seq < e.seq {
        return Discard(DiscardReason::StaleSeq);
    }
    if e.last_nodes.contains(&from) {
        return Discard(DiscardReason::SameLink);
    }
    if rreq.route.len() > e.nb_hops {
        return Discard(DiscardReason::LongerRoute);
    }
    if e.nb_copies >= MAX_COPIES {
        return Discard(DiscardReason::CopyLimit);
    }
    ExtraCopy
}

/// Folds this node's residual battery into the request's bottleneck level.
/// The first forwarder overwrites the unset field unconditionally.
pub fn update_min_bat_lev(rreq: &mut RouteRequest, residual: Energy) {
    rreq.min_bat_lev = Some(match rreq.min_bat_lev {
        Some(current) => current.min(residual),
        None => residual,
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RreqOutcome {
    Forwarded,
    /// Recorded as a candidate at the destination.
    Stored,
    Discarded(DiscardReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrepOutcome {
    Forwarded,
    Installed,
    Ignored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedRoute {
    /// Full path from this node to the destination.
    pub route: Vec<NodeId>,
    pub rank: ReplyRank,
    pub seq: u32,
}

/// Source-side cache: at most a primary and an alternate per destination.
#[derive(Debug, Clone, Default)]
pub struct RouteCache {
    routes: BTreeMap<NodeId, Vec<CachedRoute>>,
}

impl RouteCache {
    pub const MAX_PER_DEST: usize = 2;

    /// Installs a route. Loops are rejected; a newer discovery replaces
    /// routes learned from an older one.
    pub fn insert(&mut self, dest: NodeId, route: Vec<NodeId>, rank: ReplyRank, seq: u32) -> bool {
        if route.len() < 2 || !is_loop_free(&route) {
            return false;
        }
        let list = self.routes.entry(dest).or_default();
        if list.iter().any(|c| c.seq < seq) {
            list.clear();
        }
        list.retain(|c| c.route != route);
        let entry = CachedRoute { route, rank, seq };
        if rank == ReplyRank::Primary {
            list.insert(0, entry);
        } else {
            list.push(entry);
        }
        list.truncate(Self::MAX_PER_DEST);
        true
    }

    /// Route in use for `dest`: the primary, or the alternate once the
    /// primary is gone.
    pub fn current(&self, dest: NodeId) -> Option<&[NodeId]> {
        self.routes
            .get(&dest)
            .and_then(|l| l.first())
            .map(|c| c.route.as_slice())
    }

    pub fn routes_to(&self, dest: NodeId) -> &[CachedRoute] {
        self.routes.get(&dest).map_or(&[], Vec::as_slice)
    }

    /// Removes every route using `link`; returns how many were removed.
    pub fn purge_link(&mut self, link: (NodeId, NodeId)) -> usize {
        let mut removed = 0;
        self.routes.retain(|_, list| {
            let before = list.len();
            list.retain(|c| !uses_link(&c.route, link));
            removed += before - list.len();
            !list.is_empty()
        });
        removed
    }

    pub fn all_routes(&self) -> Vec<Vec<NodeId>> {
        self.routes
            .values()
            .flat_map(|l| l.iter().map(|c| c.route.clone()))
            .collect()
    }
}

#[derive(Debug, Clone)]
struct Round {
    seq: u32,
    candidates: Vec<RouteTableEntry>,
    selected: bool,
}

#[derive(Debug, Clone)]
pub struct MeaDsrAgent {
    id: NodeId,
    origin: Originator,
    request_table: BTreeMap<NodeId, RequestTableEntry>,
    route_table: BTreeMap<NodeId, Round>,
    cache: RouteCache,
}

impl MeaDsrAgent {
    pub fn new(id: NodeId, cfg: AgentConfig) -> Self {
        MeaDsrAgent {
            id,
            origin: Originator::new(id, cfg),
            request_table: BTreeMap::new(),
            route_table: BTreeMap::new(),
            cache: RouteCache::default(),
        }
    }

    pub fn cache(&self) -> &RouteCache {
        &self.cache
    }

    pub fn request_entry(&self, src: NodeId) -> Option<&RequestTableEntry> {
        self.request_table.get(&src)
    }

    /// Candidates stored for `src`'s current discovery round.
    pub fn candidates(&self, src: NodeId) -> &[RouteTableEntry] {
        self.route_table
            .get(&src)
            .map_or(&[], |r| r.candidates.as_slice())
    }

    pub fn process_rreq(&mut self, ctx: &mut Ctx, mut rreq: RouteRequest, from: NodeId) -> RreqOutcome {
        if rreq.dest == self.id {
            return self.store_candidate(ctx, rreq);
        }
        let decision =
            duplicate_forward_decision(self.id, self.request_table.get(&rreq.src), &rreq, from);
        let copy = match decision {
            ForwardDecision::Discard(reason) => return RreqOutcome::Discarded(reason),
            ForwardDecision::FirstCopy => {
                self.request_table.insert(
                    rreq.src,
                    RequestTableEntry {
                        src: rreq.src,
                        seq: rreq.seq,
                        nb_hops: rreq.route.len(),
                        last_nodes: vec![from],
                        nb_copies: 1,
                    },
                );
                1
            }
            ForwardDecision::ExtraCopy => {
                let e = self.request_table.get_mut(&rreq.src).expect("entry exists");
                e.last_nodes.push(from);
                e.nb_copies += 1;
                e.nb_copies
            }
        };
        let arrived_len = rreq.route.len();
        update_min_bat_lev(&mut rreq, ctx.residual);
        rreq.route.push(self.id);
        let first_nb_hops = self.request_table[&rreq.src].nb_hops;
        let residual = ctx.residual;
        ctx.audit(|| AuditEvent::RreqForwarded {
            node: self.id,
            src: rreq.src,
            seq: rreq.seq,
            from,
            arrived_len,
            first_nb_hops,
            copy,
            residual,
            route_after: rreq.route.clone(),
            min_bat_lev_after: rreq.min_bat_lev,
        });
        ctx.push(Action::Send {
            packet: Packet::Rreq(rreq),
            next_hop: None,
            mode: SendMode::Forward,
            jitter: true,
        });
        RreqOutcome::Forwarded
    }

    fn store_candidate(&mut self, ctx: &mut Ctx, rreq: RouteRequest) -> RreqOutcome {
        if rreq.route.contains(&self.id) || rreq.src == self.id {
            return RreqOutcome::Discarded(DiscardReason::Loop);
        }
        let round = self.route_table.entry(rreq.src).or_insert(Round {
            seq: 0,
            candidates: Vec::new(),
            selected: false,
        });
        if rreq.seq < round.seq {
            return RreqOutcome::Discarded(DiscardReason::StaleSeq);
        }
        let first_copy = rreq.seq > round.seq;
        if first_copy {
            *round = Round {
                seq: rreq.seq,
                candidates: Vec::new(),
                selected: false,
            };
        }
        ctx.audit(|| AuditEvent::RreqAtDestination {
            node: self.id,
            src: rreq.src,
            seq: rreq.seq,
            route: rreq.route.clone(),
            min_bat_lev: rreq.min_bat_lev,
        });
        round.candidates.push(RouteTableEntry {
            src: rreq.src,
            seq: rreq.seq,
            route: rreq.route,
            min_bat_lev: rreq.min_bat_lev,
            arriving_time: ctx.now,
        });
        if first_copy {
            ctx.push(Action::SetTimer {
                key: TimerKey::Wait {
                    src: rreq.src,
                    seq: rreq.seq,
                },
                delay: self.origin.cfg().wait_time,
            });
        }
        RreqOutcome::Stored
    }

    /// Wait window over: pick the primary and the alternate, reply with each.
    fn select_and_reply(&mut self, ctx: &mut Ctx, src: NodeId, seq: u32) {
        let Some(round) = self.route_table.get_mut(&src) else {
            return;
        };
        if round.seq != seq || round.selected {
            return;
        }
        round.selected = true;
        let Some(primary) = select_primary_route(&round.candidates) else {
            return;
        };
        let alternate = select_alternate_route(&round.candidates, primary);
        let me = self.id;
        let primary_path = primary.full_path(me);
        let alternate_path = alternate.map(|a| a.full_path(me));
        ctx.audit(|| AuditEvent::RouteSelected {
            node: me,
            src,
            seq,
            candidates: round.candidates.clone(),
            primary: primary_path.clone(),
            alternate: alternate_path.clone(),
        });
        send_rrep(ctx, seq, primary_path, ReplyRank::Primary);
        if let Some(path) = alternate_path {
            send_rrep(ctx, seq, path, ReplyRank::Alternate);
        }
    }

    pub fn process_rrep(&mut self, ctx: &mut Ctx, rrep: RouteReply) -> RrepOutcome {
        if rrep.initiator() != self.id {
            let path = rrep.return_path.clone();
            relay_along(ctx, Packet::Rrep(rrep), &path);
            return RrepOutcome::Forwarded;
        }
        let dest = rrep.target();
        // replies to superseded discoveries are ignored
        if self.origin.last_seq(dest) != Some(rrep.seq) {
            return RrepOutcome::Ignored;
        }
        if !self.cache.insert(dest, rrep.route.clone(), rrep.rank, rrep.seq) {
            return RrepOutcome::Ignored;
        }
        ctx.audit(|| AuditEvent::RouteInstalled {
            node: self.id,
            dest,
            route: rrep.route.clone(),
        });
        for p in self.origin.route_found(ctx, dest) {
            self.send_or_hold(ctx, p);
        }
        RrepOutcome::Installed
    }

    pub fn process_rerr(&mut self, ctx: &mut Ctx, rerr: RouteError) {
        self.purge(ctx, rerr.broken_link);
        if rerr.dest == self.id {
            let cache = &self.cache;
            self.origin
                .rediscover_lost(ctx, |d| cache.current(d).is_some());
        } else {
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
            remaining: cache.all_routes(),
        });
    }

    fn send_or_hold(&mut self, ctx: &mut Ctx, packet: DataPacket) {
        match self.cache.current(packet.dst) {
            Some(route) => send_on_route(ctx, packet, route.to_vec()),
            None => {
                let dest = packet.dst;
                self.origin.hold(ctx, packet);
                self.origin.discover(ctx, dest);
            }
        }
    }
}

fn send_rrep(ctx: &mut Ctx, seq: u32, route: Vec<NodeId>, rank: ReplyRank) {
    let mut return_path = route.clone();
    return_path.reverse();
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
        rank,
    };
    ctx.push(Action::Send {
        packet: Packet::Rrep(rrep),
        next_hop: Some(next),
        mode: SendMode::Originate,
        jitter: false,
    });
}

impl RoutingAgent for MeaDsrAgent {
    fn id(&self) -> NodeId {
        self.id
    }

    fn originate(&mut self, ctx: &mut Ctx, packet: DataPacket) {
        self.origin.note_flow(packet.dst);
        self.send_or_hold(ctx, packet);
    }

    fn receive(&mut self, ctx: &mut Ctx, packet: Packet, from: NodeId) {
        match packet {
            Packet::Data(d) => handle_data(ctx, d),
            Packet::Rreq(q) => {
                self.process_rreq(ctx, q, from);
            }
            Packet::Rrep(r) => {
                self.process_rrep(ctx, r);
            }
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
                    ctx.push(Action::Drop {
                        packet: Packet::Data(d),
                        reason: DropReason::Tout,
                    });
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
            TimerKey::Wait { src, seq } => self.select_and_reply(ctx, src, seq),
            TimerKey::Discovery { dest } => {
                let has_route = self.cache.current(dest).is_some();
                self.origin.on_discovery_timeout(ctx, dest, has_route);
            }
            TimerKey::BufferExpiry { dest } => self.origin.on_buffer_expiry(ctx, dest),
        }
    }

    fn buffered_data(&self) -> usize {
        self.origin.buffered()
    }

    fn drain_buffer(&mut self) -> Vec<DataPacket> {
        self.origin.drain()
    }

    fn cached_routes(&self) -> Vec<Vec<NodeId>> {
        self.cache.all_routes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::PacketUid;
    use crate::time::SimTime;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    fn ctx(node: u32, t_ms: u64, residual_j: f64) -> Ctx {
        Ctx::new(n(node), SimTime::from_millis(t_ms), Energy::from_joules(residual_j), 1000).with_audit()
    }

    fn rreq(src: u32, dest: u32, seq: u32, route: &[u32], min: Option<f64>) -> RouteRequest {
        RouteRequest {
            uid: PacketUid(1),
            src: n(src),
            dest: n(dest),
            seq,
            route: ids(route),
            min_bat_lev: min.map(Energy::from_joules),
        }
    }

    fn sent_rreqs(c: &Ctx) -> Vec<&RouteRequest> {
        c.actions()
            .iter()
            .filter_map(|a| match a {
                Action::Send {
                    packet: Packet::Rreq(q),
                    ..
                } => Some(q),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn min_bat_lev_takes_minimum() {
        let mut q = rreq(0, 9, 1, &[1], Some(900.0));
        update_min_bat_lev(&mut q, Energy::from_joules(700.0));
        assert_eq!(q.min_bat_lev, Some(Energy::from_joules(700.0)));
        let mut q = rreq(0, 9, 1, &[1], Some(900.0));
        update_min_bat_lev(&mut q, Energy::from_joules(950.0));
        assert_eq!(q.min_bat_lev, Some(Energy::from_joules(900.0)));
        let mut q = rreq(0, 9, 1, &[], None);
        update_min_bat_lev(&mut q, Energy::from_joules(1000.0));
        assert_eq!(q.min_bat_lev, Some(Energy::from_joules(1000.0)));
    }

    #[test]
    fn second_copy_forwarded_third_discarded() {
        let mut a = MeaDsrAgent::new(n(5), AgentConfig::default());
        let mut c = ctx(5, 0, 990.0);
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 1, &[1, 2, 3], Some(950.0)), n(3)),
            RreqOutcome::Forwarded
        );
        assert_eq!(a.request_entry(n(0)).unwrap().nb_hops, 3);
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 1, &[1, 6, 4], Some(950.0)), n(4)),
            RreqOutcome::Forwarded
        );
        assert_eq!(a.request_entry(n(0)).unwrap().nb_copies, 2);
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 1, &[7, 8, 2], Some(950.0)), n(2)),
            RreqOutcome::Discarded(DiscardReason::CopyLimit)
        );
        let fwd = sent_rreqs(&c);
        assert_eq!(fwd.len(), 2);
        assert_eq!(fwd[0].route, ids(&[1, 2, 3, 5]));
        assert_eq!(fwd[0].min_bat_lev, Some(Energy::from_joules(950.0)));
    }

    #[test]
    fn longer_or_same_link_copies_discarded() {
        let mut a = MeaDsrAgent::new(n(5), AgentConfig::default());
        let mut c = ctx(5, 0, 990.0);
        a.process_rreq(&mut c, rreq(0, 9, 1, &[1, 3], None), n(3));
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 1, &[1, 2, 4], None), n(4)),
            RreqOutcome::Discarded(DiscardReason::LongerRoute)
        );
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 1, &[2, 3], None), n(3)),
            RreqOutcome::Discarded(DiscardReason::SameLink)
        );
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 1, &[1, 5, 4], None), n(4)),
            RreqOutcome::Discarded(DiscardReason::Loop)
        );
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 0, &[1], None), n(1)),
            RreqOutcome::Discarded(DiscardReason::StaleSeq)
        );
        // a newer discovery resets the entry
        assert_eq!(
            a.process_rreq(&mut c, rreq(0, 9, 2, &[1, 2, 3, 4], None), n(4)),
            RreqOutcome::Forwarded
        );
        assert_eq!(a.request_entry(n(0)).unwrap().nb_hops, 4);
    }

    #[test]
    fn destination_waits_then_replies_twice() {
        let mut d = MeaDsrAgent::new(n(9), AgentConfig::default());
        let mut c = ctx(9, 100, 1000.0);
        assert_eq!(
            d.process_rreq(&mut c, rreq(0, 9, 1, &[1, 2], Some(900.0)), n(2)),
            RreqOutcome::Stored
        );
        assert!(matches!(
            c.actions().last(),
            Some(Action::SetTimer { key: TimerKey::Wait { seq: 1, .. }, delay }) if *delay == SimTime::from_millis(60)
        ));
        let mut c = ctx(9, 120, 1000.0);
        d.process_rreq(&mut c, rreq(0, 9, 1, &[3, 4], Some(800.0)), n(4));
        d.process_rreq(&mut c, rreq(0, 9, 1, &[1, 4], Some(990.0)), n(4));
        assert!(c.actions().is_empty(), "only the first copy arms the timer");
        assert_eq!(d.candidates(n(0)).len(), 3);

        let mut c = ctx(9, 160, 1000.0);
        d.timer(&mut c, TimerKey::Wait { src: n(0), seq: 1 });
        let rreps: Vec<&RouteReply> = c
            .actions()
            .iter()
            .filter_map(|a| match a {
                Action::Send { packet: Packet::Rrep(r), .. } => Some(r),
                _ => None,
            })
            .collect();
        assert_eq!(rreps.len(), 2);
        // 990/3 = 330 beats 900/3 and 800/3
        assert_eq!(rreps[0].route, ids(&[0, 1, 4, 9]));
        assert_eq!(rreps[0].rank, ReplyRank::Primary);
        assert_eq!(rreps[0].return_path, ids(&[9, 4, 1, 0]));
        // disjoint from {1,4}: only [3,4] shares one, [1,2] shares one; 900 > 800
        assert_eq!(rreps[1].route, ids(&[0, 1, 2, 9]));

        // late copy stored, no further replies
        let mut c = ctx(9, 200, 1000.0);
        d.process_rreq(&mut c, rreq(0, 9, 1, &[5, 6], Some(999.0)), n(6));
        d.timer(&mut c, TimerKey::Wait { src: n(0), seq: 1 });
        assert!(c.actions().is_empty());
    }

    #[test]
    fn single_candidate_gives_single_reply() {
        let mut d = MeaDsrAgent::new(n(9), AgentConfig::default());
        let mut c = ctx(9, 0, 1000.0);
        d.process_rreq(&mut c, rreq(0, 9, 1, &[1], Some(900.0)), n(1));
        let mut c = ctx(9, 60, 1000.0);
        d.timer(&mut c, TimerKey::Wait { src: n(0), seq: 1 });
        let count = c
            .actions()
            .iter()
            .filter(|a| matches!(a, Action::Send { packet: Packet::Rrep(_), .. }))
            .count();
        assert_eq!(count, 1);
    }

    fn install(a: &mut MeaDsrAgent, c: &mut Ctx, route: &[u32], rank: ReplyRank) -> RrepOutcome {
        let route = ids(route);
        let mut rp = route.clone();
        rp.reverse();
        a.process_rrep(
            c,
            RouteReply {
                uid: PacketUid(9),
                seq: 1,
                route,
                return_path: rp,
                rank,
            },
        )
    }

    #[test]
    fn source_uses_primary_then_alternate() {
        let mut s = MeaDsrAgent::new(n(0), AgentConfig::default());
        let mut c = ctx(0, 0, 1000.0);
        s.originate(&mut c, DataPacket::new(PacketUid(1), n(0), n(9), 512));
        let q = sent_rreqs(&c);
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].seq, 1);
        assert!(q[0].route.is_empty() && q[0].min_bat_lev.is_none());
        assert_eq!(s.buffered_data(), 1);

        let mut c = ctx(0, 100, 1000.0);
        assert_eq!(install(&mut s, &mut c, &[0, 1, 2, 9], ReplyRank::Primary), RrepOutcome::Installed);
        assert_eq!(s.buffered_data(), 0);
        assert!(c.actions().iter().any(|a| matches!(
            a,
            Action::Send { packet: Packet::Data(_), next_hop: Some(NodeId(1)), .. }
        )));
        install(&mut s, &mut c, &[0, 3, 4, 9], ReplyRank::Alternate);
        assert_eq!(s.cache().current(n(9)).unwrap(), ids(&[0, 1, 2, 9]).as_slice());

        // break on the primary: alternate takes over, no new discovery
        let mut c = ctx(0, 200, 1000.0);
        s.process_rerr(
            &mut c,
            RouteError {
                uid: PacketUid(5),
                reporter: n(1),
                broken_link: (n(1), n(2)),
                dest: n(0),
                path: ids(&[1, 0]),
            },
        );
        assert!(sent_rreqs(&c).is_empty());
        assert_eq!(s.cache().current(n(9)).unwrap(), ids(&[0, 3, 4, 9]).as_slice());

        // losing the alternate too starts discovery with the next seq
        let mut c = ctx(0, 300, 1000.0);
        s.process_rerr(
            &mut c,
            RouteError {
                uid: PacketUid(6),
                reporter: n(3),
                broken_link: (n(3), n(4)),
                dest: n(0),
                path: ids(&[3, 0]),
            },
        );
        let q = sent_rreqs(&c);
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].seq, 2);
    }

    #[test]
    fn stale_replies_ignored() {
        let mut s = MeaDsrAgent::new(n(0), AgentConfig::default());
        let mut c = ctx(0, 0, 1000.0);
        s.originate(&mut c, DataPacket::new(PacketUid(1), n(0), n(9), 512));
        let mut c = ctx(0, 600, 1000.0);
        s.timer(&mut c, TimerKey::Discovery { dest: n(9) });
        assert_eq!(sent_rreqs(&c)[0].seq, 2);
        // reply for seq 1 arrives late
        assert_eq!(install(&mut s, &mut c, &[0, 1, 9], ReplyRank::Primary), RrepOutcome::Ignored);
    }

    #[test]
    fn intermediate_rerr_purges_and_forwards() {
        let mut a = MeaDsrAgent::new(n(1), AgentConfig::default());
        let mut c = ctx(1, 0, 1000.0);
        a.origin.note_flow(n(7));
        a.origin.last_seq.insert(n(7), 1);
        install(&mut a, &mut c, &[1, 2, 3, 7], ReplyRank::Primary);
        let mut c = ctx(1, 10, 1000.0);
        a.process_rerr(
            &mut c,
            RouteError {
                uid: PacketUid(3),
                reporter: n(2),
                broken_link: (n(2), n(3)),
                dest: n(0),
                path: ids(&[2, 1, 0]),
            },
        );
        assert!(a.cached_routes().is_empty());
        assert!(c.actions().iter().any(|x| matches!(
            x,
            Action::Send { packet: Packet::Rerr(_), next_hop: Some(NodeId(0)), mode: SendMode::Forward, .. }
        )));
    }

    #[test]
    fn link_break_mid_route_sends_rerr_back_and_drops() {
        let mut a = MeaDsrAgent::new(n(2), AgentConfig::default());
        let mut c = ctx(2, 0, 1000.0);
        let mut d = DataPacket::new(PacketUid(4), n(0), n(9), 512);
        d.route = ids(&[0, 1, 2, 3, 9]);
        a.link_failed(&mut c, vec![Packet::Data(d)], n(3));
        let rerr = c
            .actions()
            .iter()
            .find_map(|x| match x {
                Action::Send { packet: Packet::Rerr(e), .. } => Some(e.clone()),
                _ => None,
            })
            .unwrap();
        assert_eq!(rerr.path, ids(&[2, 1, 0]));
        assert_eq!(rerr.broken_link, (n(2), n(3)));
        assert!(c.actions().iter().any(|x| matches!(
            x,
            Action::Drop { packet: Packet::Data(_), reason: DropReason::Tout }
        )));
    }
}

//! Post-run checks of the MEA-DSR protocol invariants over an audit log.

use std::collections::BTreeMap;
use std::fmt;

use crate::packet::{is_loop_free, uses_link, NodeId};
use crate::radio::Energy;
use crate::routing::meadsr::MAX_COPIES;
use crate::routing::selection::{select_alternate_route, select_primary_route};
use crate::routing::{AuditEvent, RouteTableEntry};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Invariant {
    CopyCap,
    DistinctArrivalLinks,
    NoLongerCopies,
    LoopFreedom,
    MinBatLev,
    RrepsPerRound,
    PermutationInvariance,
    CachePurity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: SimTime,
    pub invariant: Invariant,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {:?}: {}", self.time, self.invariant, self.detail)
    }
}

type Round = (NodeId, NodeId, u32);

/// Runs every check; an empty result means the log is clean.
pub fn check(log: &[(SimTime, AuditEvent)]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |time, invariant, detail: String| {
        out.push(Violation {
            time,
            invariant,
            detail,
        })
    };

    // (node, src, seq) -> arrival links of forwarded copies
    let mut forwarded: BTreeMap<Round, Vec<NodeId>> = BTreeMap::new();
    // (src, seq, route after stamping) -> (stamper residual, min_bat_lev after)
    let mut stamps: BTreeMap<(NodeId, u32, Vec<NodeId>), (Energy, Option<Energy>)> = BTreeMap::new();
    let mut rreps: BTreeMap<Round, usize> = BTreeMap::new();

    for (t, ev) in log {
        let t = *t;
        match ev {
            AuditEvent::RreqForwarded {
                node,
                src,
                seq,
                from,
                arrived_len,
                first_nb_hops,
                residual,
                route_after,
                min_bat_lev_after,
                ..
            } => {
                let links = forwarded.entry((*node, *src, *seq)).or_default();
                if links.contains(from) {
                    v(t, Invariant::DistinctArrivalLinks, format!(
                        "node {node} forwarded two copies of ({src},{seq}) arriving from {from}"
                    ));
                }
                links.push(*from);
                if links.len() > MAX_COPIES as usize {
                    v(t, Invariant::CopyCap, format!(
                        "node {node} forwarded {} copies of ({src},{seq})",
                        links.len()
                    ));
                }
                if arrived_len > first_nb_hops {
                    v(t, Invariant::NoLongerCopies, format!(
                        "node {node} forwarded a {arrived_len}-node copy of ({src},{seq}) after a {first_nb_hops}-node first copy"
                    ));
                }
                if !is_loop_free(route_after) || route_after.contains(src) {
                    v(t, Invariant::LoopFreedom, format!("request route {route_after:?} from {src} loops"));
                }
                stamps.insert((*src, *seq, route_after.clone()), (*residual, *min_bat_lev_after));
            }
            AuditEvent::RreqAtDestination {
                src,
                seq,
                route,
                min_bat_lev,
                ..
            } => {
                let mut expected: Option<Energy> = None;
                let mut complete = true;
                for i in 1..=route.len() {
                    match stamps.get(&(*src, *seq, route[..i].to_vec())) {
                        Some((r, _)) => expected = Some(expected.map_or(*r, |e| e.min(*r))),
                        None => complete = false,
                    }
                }
                if !complete {
                    v(t, Invariant::MinBatLev, format!(
                        "request ({src},{seq}) arrived over {route:?} without a stamp at every hop"
                    ));
                } else if expected != *min_bat_lev {
                    v(t, Invariant::MinBatLev, format!(
                        "request ({src},{seq}) over {route:?} carries {min_bat_lev:?}, stamps give {expected:?}"
                    ));
                }
            }
            AuditEvent::RouteSelected {
                node,
                src,
                seq,
                candidates,
                primary,
                alternate,
            } => {
                for perm in permutations(candidates) {
                    let (p, a) = select_pair(&perm, *node);
                    if p.as_ref() != Some(primary) || a != *alternate {
                        v(t, Invariant::PermutationInvariance, format!(
                            "selection for ({src},{seq}) at {node} depends on candidate order"
                        ));
                        break;
                    }
                }
            }
            AuditEvent::RrepSent {
                node,
                initiator,
                seq,
                route,
            } => {
                let n = rreps.entry((*node, *initiator, *seq)).or_default();
                *n += 1;
                if *n > 2 {
                    v(t, Invariant::RrepsPerRound, format!(
                        "node {node} sent {n} replies for ({initiator},{seq})"
                    ));
                }
                if !is_loop_free(route) {
                    v(t, Invariant::LoopFreedom, format!("reply route {route:?} loops"));
                }
            }
            AuditEvent::RouteInstalled { node, route, .. } => {
                if !is_loop_free(route) {
                    v(t, Invariant::LoopFreedom, format!("node {node} installed looping route {route:?}"));
                }
            }
            AuditEvent::CachePurged {
                node,
                link,
                remaining,
            } => {
                if let Some(r) = remaining.iter().find(|r| uses_link(r, *link)) {
                    v(t, Invariant::CachePurity, format!(
                        "node {node} still caches {r:?} after link {:?} broke",
                        link
                    ));
                }
            }
        }
    }
    out
}

fn select_pair(candidates: &[RouteTableEntry], dest: NodeId) -> (Option<Vec<NodeId>>, Option<Vec<NodeId>>) {
    match select_primary_route(candidates) {
        None => (None, None),
        Some(p) => (
            Some(p.full_path(dest)),
            select_alternate_route(candidates, p).map(|a| a.full_path(dest)),
        ),
    }
}

/// Reversed and every rotation of the candidate list.
fn permutations(c: &[RouteTableEntry]) -> Vec<Vec<RouteTableEntry>> {
    let mut out = Vec::with_capacity(c.len() + 1);
    let mut rev = c.to_vec();
    rev.reverse();
    out.push(rev);
    for k in 1..c.len() {
        let mut r = c.to_vec();
        r.rotate_left(k);
        out.push(r);
    }
    out
}

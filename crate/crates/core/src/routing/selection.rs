//! Destination-side route selection.
//!
//! The primary route maximizes `min_bat_lev / route_length`: the bottleneck
//! residual energy along the path per hop. The alternate is the candidate
//! sharing the fewest intermediate nodes with the primary, scored the same
//! way among equally disjoint candidates.
//!
//! Ties are broken by earliest arrival, then by lexicographic route order,
//! which makes both selections independent of candidate order.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::packet::NodeId;
use crate::radio::Energy;

use super::RouteTableEntry;

/// Compares `a.min_bat_lev / a.len` against `b.min_bat_lev / b.len` exactly.
/// An unset level (direct neighbor, nobody stamped) outranks any set one.
pub fn compare_ratio(a: &RouteTableEntry, b: &RouteTableEntry) -> Ordering {
    match (a.min_bat_lev, b.min_bat_lev) {
        (None, None) => b.route_length().cmp(&a.route_length()),
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(ea), Some(eb)) => {
            let lhs = ea.as_nanojoules() as u128 * b.route_length() as u128;
            let rhs = eb.as_nanojoules() as u128 * a.route_length() as u128;
            lhs.cmp(&rhs)
        }
    }
}

/// `Greater` means `a` is preferred over `b`.
fn preference(a: &RouteTableEntry, b: &RouteTableEntry) -> Ordering {
    compare_ratio(a, b)
        .then_with(|| b.arriving_time.cmp(&a.arriving_time))
        .then_with(|| b.route.cmp(&a.route))
}

/// The candidate with the best energy-per-hop ratio. `None` only for an
/// empty candidate set.
pub fn select_primary_route(candidates: &[RouteTableEntry]) -> Option<&RouteTableEntry> {
    candidates.iter().max_by(|a, b| preference(a, b))
}

/// Intermediate nodes common to two complete routes with the same endpoints.
pub fn shared_intermediates(route_a: &[NodeId], route_b: &[NodeId]) -> Result<usize> {
    let ends = |r: &[NodeId]| (r.first().copied(), r.last().copied());
    if route_a.len() < 2 || route_b.len() < 2 || ends(route_a) != ends(route_b) {
        return Err(Error::InvalidArgument(
            "routes must share source and destination".into(),
        ));
    }
    let inner_b = &route_b[1..route_b.len() - 1];
    Ok(route_a[1..route_a.len() - 1]
        .iter()
        .filter(|n| inner_b.contains(n))
        .count())
}

fn shared_with(entry: &RouteTableEntry, primary: &RouteTableEntry) -> usize {
    entry
        .route
        .iter()
        .filter(|n| primary.route.contains(n))
        .count()
}

/// The maximally node-disjoint alternate to `primary`, or `None` when no
/// other candidate exists.
pub fn select_alternate_route<'a>(
    candidates: &'a [RouteTableEntry],
    primary: &RouteTableEntry,
) -> Option<&'a RouteTableEntry> {
    candidates
        .iter()
        .filter(|c| c.route != primary.route)
        .max_by(|a, b| {
            shared_with(b, primary)
                .cmp(&shared_with(a, primary))
                .then_with(|| preference(a, b))
        })
}

/// Scales a ratio for display: joules per hop.
pub fn ratio_joules_per_hop(entry: &RouteTableEntry) -> f64 {
    match entry.min_bat_lev {
        Some(e) => e.as_joules() / entry.route_length() as f64,
        None => f64::INFINITY,
    }
}

#[doc(hidden)]
pub fn entry(route: &[u32], min_bat_joules: f64, arriving_us: u64) -> RouteTableEntry {
    RouteTableEntry {
        src: NodeId(0),
        seq: 1,
        route: route.iter().copied().map(NodeId).collect(),
        min_bat_lev: Some(Energy::from_joules(min_bat_joules)),
        arriving_time: crate::time::SimTime::from_micros(arriving_us),
    }
}

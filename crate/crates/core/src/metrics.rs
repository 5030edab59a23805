//! The six run metrics and the raw counters behind them.
//!
//! Everything is derived from trace records. [`MetricsCollector`] consumes
//! records one at a time so a run can be measured without keeping its trace;
//! [`compute_delivery_metrics`] replays a stored trace through the same code.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::packet::{PacketKind, PacketUid};
use crate::radio::{Energy, EnergyLedger, EnergyRole};
use crate::time::SimTime;
use crate::trace::{DropReason, Layer, Trace, TraceAction, TraceEvent, TraceRecord};

/// DATA drops by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropCensus {
    counts: BTreeMap<DropReason, u64>,
}

impl DropCensus {
    pub fn add(&mut self, reason: DropReason) {
        *self.counts.entry(reason).or_default() += 1;
    }

    pub fn get(&self, reason: DropReason) -> u64 {
        self.counts.get(&reason).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Drops that end a packet's life (collisions are retried by the MAC).
    pub fn terminal(&self) -> u64 {
        self.counts
            .iter()
            .filter(|(r, _)| r.is_terminal())
            .map(|(_, n)| n)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeliveryMetrics {
    /// Control transmissions per delivered data packet; `None` if nothing arrived.
    pub srn: Option<f64>,
    pub td: f64,
    /// Mean end-to-end delay in seconds; `None` if nothing arrived.
    pub dm: Option<f64>,
    pub data_sent: u64,
    pub data_received: u64,
    pub routing_packets: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMetrics {
    /// Joules per delivered packet; `None` if nothing arrived.
    pub ecp: Option<f64>,
    /// Population standard deviation of per-node consumption, joules.
    pub etecn: f64,
    /// Smallest residual-to-initial ratio.
    pub term: f64,
    pub total_consumed: Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub srn: Option<f64>,
    pub td: f64,
    pub dm: Option<f64>,
    pub ecp: Option<f64>,
    pub etecn: f64,
    pub term: f64,
    pub data_sent: u64,
    pub data_received: u64,
    pub routing_packets: u64,
    pub drops: DropCensus,
    pub total_consumed: Energy,
}

impl MetricsReport {
    pub fn new(d: DeliveryMetrics, e: EnergyMetrics, drops: DropCensus) -> Self {
        MetricsReport {
            srn: d.srn,
            td: d.td,
            dm: d.dm,
            ecp: e.ecp,
            etecn: e.etecn,
            term: e.term,
            data_sent: d.data_sent,
            data_received: d.data_received,
            routing_packets: d.routing_packets,
            drops,
            total_consumed: e.total_consumed,
        }
    }

    /// Human-readable summary, one metric per line.
    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"));
        format!(
            "data packets sent: {}\n\
             data packets received: {}\n\
             routing packets: {}\n\
             packet delivery fraction: {:.6}\n\
             normalized routing overhead: {}\n\
             average end to end delay: {} s\n\
             energy consumed per packet: {} J\n\
             deviation: {:.6} J\n\
             minimal residual energy: {:.6}\n\
             dropped (IFQ/NRTE/TOUT/TTL): {}/{}/{}/{}\n",
            self.data_sent,
            self.data_received,
            self.routing_packets,
            self.td,
            opt(self.srn),
            opt(self.dm),
            opt(self.ecp),
            self.etecn,
            self.term,
            self.drops.get(DropReason::Ifq),
            self.drops.get(DropReason::Nrte),
            self.drops.get(DropReason::Tout),
            self.drops.get(DropReason::Ttl),
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())
    }
}

/// Incremental metric state fed with trace records in emission order.
#[derive(Debug, Clone)]
pub struct MetricsCollector {
    data_sent: u64,
    routing_packets: u64,
    first_send: HashMap<PacketUid, SimTime>,
    first_recv: HashMap<PacketUid, SimTime>,
    drops: DropCensus,
    energy: Vec<Energy>,
}

impl MetricsCollector {
    pub fn new(nodes: usize) -> Self {
        MetricsCollector {
            data_sent: 0,
            routing_packets: 0,
            first_send: HashMap::new(),
            first_recv: HashMap::new(),
            drops: DropCensus::default(),
            energy: vec![Energy::ZERO; nodes],
        }
    }

    pub fn record(&mut self, rec: &TraceRecord) {
        match rec {
            TraceRecord::Packet(e) => self.packet(e),
            TraceRecord::Energy(e) => {
                let i = e.node.index();
                if i >= self.energy.len() {
                    self.energy.resize(i + 1, Energy::ZERO);
                }
                self.energy[i] += e.amount;
            }
        }
    }

    fn packet(&mut self, e: &TraceEvent) {
        let data = e.kind == PacketKind::Data;
        match (e.action, e.layer) {
            (TraceAction::Send, Layer::Agt) if data => {
                self.data_sent += 1;
                keep_min(&mut self.first_send, e.uid, e.time);
            }
            (TraceAction::Recv, Layer::Agt) if data => keep_min(&mut self.first_recv, e.uid, e.time),
            (TraceAction::Send | TraceAction::Forward, Layer::Rtr) if e.kind.is_control() => {
                self.routing_packets += 1;
            }
            (TraceAction::Drop, _) if data => {
                if let Some(r) = e.drop_reason {
                    self.drops.add(r);
                }
            }
            _ => {}
        }
    }

    pub fn delivery(&self) -> DeliveryMetrics {
        let mut delay_us: u128 = 0;
        let mut delivered = 0u64;
        for (uid, &rt) in &self.first_recv {
            if let Some(&st) = self.first_send.get(uid) {
                delay_us += rt.saturating_sub(st).as_micros() as u128;
                delivered += 1;
            }
        }
        let received = self.first_recv.len() as u64;
        DeliveryMetrics {
            srn: (received > 0).then(|| self.routing_packets as f64 / received as f64),
            td: if self.data_sent > 0 {
                received as f64 / self.data_sent as f64
            } else {
                0.0
            },
            dm: (delivered > 0).then(|| delay_us as f64 / delivered as f64 / 1e6),
            data_sent: self.data_sent,
            data_received: received,
            routing_packets: self.routing_packets,
        }
    }

    pub fn drops(&self) -> &DropCensus {
        &self.drops
    }

    /// Per-node consumption summed from energy records.
    pub fn energy_by_node(&self) -> &[Energy] {
        &self.energy
    }
}

fn keep_min(map: &mut HashMap<PacketUid, SimTime>, uid: PacketUid, t: SimTime) {
    map.entry(uid).and_modify(|v| *v = (*v).min(t)).or_insert(t);
}

pub fn compute_delivery_metrics(trace: &Trace) -> DeliveryMetrics {
    collect(trace, 0).delivery()
}

pub fn drop_census(trace: &Trace) -> DropCensus {
    collect(trace, 0).drops
}

/// Per-node energy consumed according to the trace's energy records.
pub fn energy_from_trace(trace: &Trace, nodes: usize) -> Vec<Energy> {
    let mut c = collect(trace, nodes);
    c.energy.resize(nodes.max(c.energy.len()), Energy::ZERO);
    c.energy
}

fn collect(trace: &Trace, nodes: usize) -> MetricsCollector {
    let mut c = MetricsCollector::new(nodes);
    for r in trace.records() {
        c.record(r);
    }
    c
}

/// Energy metrics from per-node consumption and residual figures.
pub fn energy_metrics(
    consumed: &[Energy],
    residual: &[Energy],
    initial: Energy,
    data_received: u64,
) -> EnergyMetrics {
    let total: Energy = consumed.iter().copied().sum();
    let n = consumed.len().max(1) as f64;
    let joules: Vec<f64> = consumed.iter().map(|e| e.as_joules()).collect();
    let mean = joules.iter().sum::<f64>() / n;
    let var = joules.iter().map(|j| (j - mean).powi(2)).sum::<f64>() / n;
    let term = residual
        .iter()
        .map(|r| r.as_nanojoules() as f64 / initial.as_nanojoules().max(1) as f64)
        .fold(f64::INFINITY, f64::min);
    EnergyMetrics {
        ecp: (data_received > 0).then(|| total.as_joules() / data_received as f64),
        etecn: var.sqrt(),
        term: if term.is_finite() { term } else { 1.0 },
        total_consumed: total,
    }
}

pub fn compute_energy_metrics(ledger: &EnergyLedger, data_received: u64) -> EnergyMetrics {
    let nodes: Vec<_> = (0..ledger.node_count() as u32).map(crate::packet::NodeId).collect();
    let consumed: Vec<Energy> = nodes.iter().map(|&n| ledger.consumed(n)).collect();
    let residual: Vec<Energy> = nodes.iter().map(|&n| ledger.residual(n)).collect();
    energy_metrics(&consumed, &residual, ledger.initial(), data_received)
}

/// Splits per-node energy records by role; used for conservation checks.
pub fn energy_by_role(trace: &Trace) -> (Energy, Energy) {
    trace
        .energy_events()
        .fold((Energy::ZERO, Energy::ZERO), |(tx, rx), e| match e.role {
            EnergyRole::Tx => (tx + e.amount, rx),
            EnergyRole::Rx => (tx, rx + e.amount),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::NodeId;

    fn ev(t_us: u64, action: TraceAction, layer: Layer, kind: PacketKind, uid: u64) -> TraceRecord {
        TraceRecord::Packet(TraceEvent {
            time: SimTime::from_micros(t_us),
            action,
            layer,
            node: NodeId(0),
            kind,
            uid: PacketUid(uid),
            size: 0,
            drop_reason: None,
        })
    }

    fn drop(reason: DropReason, uid: u64) -> TraceRecord {
        TraceRecord::Packet(TraceEvent {
            drop_reason: Some(reason),
            ..match ev(0, TraceAction::Drop, Layer::Rtr, PacketKind::Data, uid) {
                TraceRecord::Packet(e) => e,
                _ => unreachable!(),
            }
        })
    }

    #[test]
    fn delay_uses_first_send() {
        let t = Trace::from_records(vec![
            ev(0, TraceAction::Send, Layer::Agt, PacketKind::Data, 1),
            ev(100_000, TraceAction::Recv, Layer::Agt, PacketKind::Data, 1),
            ev(0, TraceAction::Send, Layer::Agt, PacketKind::Data, 2),
            ev(300_000, TraceAction::Recv, Layer::Agt, PacketKind::Data, 2),
            ev(10, TraceAction::Forward, Layer::Rtr, PacketKind::Rreq, 7),
            ev(10, TraceAction::Forward, Layer::Rtr, PacketKind::Data, 2),
        ]);
        let d = compute_delivery_metrics(&t);
        assert_eq!(d.dm, Some(0.2));
        assert_eq!(d.td, 1.0);
        assert_eq!(d.srn, Some(0.5));
    }

    #[test]
    fn nothing_delivered_gives_undefined() {
        let t = Trace::from_records(vec![ev(0, TraceAction::Send, Layer::Agt, PacketKind::Data, 1)]);
        let d = compute_delivery_metrics(&t);
        assert_eq!((d.srn, d.dm, d.td), (None, None, 0.0));
    }

    #[test]
    fn census_partitions_drops() {
        let t = Trace::from_records(vec![
            drop(DropReason::Ifq, 1),
            drop(DropReason::Ifq, 2),
            drop(DropReason::Ifq, 3),
            drop(DropReason::Tout, 4),
            drop(DropReason::Collision, 5),
        ]);
        let c = drop_census(&t);
        assert_eq!(c.get(DropReason::Ifq), 3);
        assert_eq!(c.total(), 5);
        assert_eq!(c.terminal(), 4);
        assert_eq!(drop_census(&Trace::new()).total(), 0);
    }

    #[test]
    fn energy_worked_examples() {
        let j = Energy::from_joules;
        let m = energy_metrics(&[j(2.0), j(4.0)], &[j(998.0), j(996.0)], j(1000.0), 2);
        assert_eq!(m.etecn, 1.0);
        assert_eq!(m.ecp, Some(3.0));
        let m = energy_metrics(&[j(500.0), j(200.0)], &[j(500.0), j(800.0)], j(1000.0), 0);
        assert_eq!(m.term, 0.5);
        assert_eq!(m.ecp, None);
    }
}

//! Append-only run trace and its line-oriented text form.
//!
//! Packet records:
//! `<s|r|f|d> <time> <node> <AGT|RTR|IFQ|MAC> <DATA|RREQ|RREP|RERR> <uid> <size> <reason|->`
//!
//! Energy records:
//! `E <time> <node> <tx|rx> <nanojoules>`

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::packet::{NodeId, PacketKind, PacketUid};
use crate::radio::{Energy, EnergyRole};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceAction {
    Send,
    Recv,
    Forward,
    Drop,
}

impl TraceAction {
    fn code(self) -> &'static str {
        match self {
            TraceAction::Send => "s",
            TraceAction::Recv => "r",
            TraceAction::Forward => "f",
            TraceAction::Drop => "d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Agt,
    Rtr,
    /// Interface-queue overflow drops.
    Ifq,
    Mac,
}

impl Layer {
    fn code(self) -> &'static str {
        match self {
            Layer::Agt => "AGT",
            Layer::Rtr => "RTR",
            Layer::Ifq => "IFQ",
            Layer::Mac => "MAC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    Ifq,
    Nrte,
    Tout,
    Ttl,
    /// A reception lost to overlapping transmissions. Never terminal for a
    /// data packet: the sender retries and eventually reports a link failure.
    Collision,
    NodeDead,
}

impl DropReason {
    pub const ALL: [DropReason; 6] = [
        DropReason::Ifq,
        DropReason::Nrte,
        DropReason::Tout,
        DropReason::Ttl,
        DropReason::Collision,
        DropReason::NodeDead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Ifq => "IFQ",
            DropReason::Nrte => "NRTE",
            DropReason::Tout => "TOUT",
            DropReason::Ttl => "TTL",
            DropReason::Collision => "COLLISION",
            DropReason::NodeDead => "NODE_DEAD",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        DropReason::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn is_terminal(self) -> bool {
        self != DropReason::Collision
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: SimTime,
    pub action: TraceAction,
    pub layer: Layer,
    pub node: NodeId,
    pub kind: PacketKind,
    pub uid: PacketUid,
    pub size: u32,
    pub drop_reason: Option<DropReason>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEvent {
    pub time: SimTime,
    pub node: NodeId,
    pub role: EnergyRole,
    pub amount: Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceRecord {
    Packet(TraceEvent),
    Energy(EnergyEvent),
}

impl TraceRecord {
    pub fn time(&self) -> SimTime {
        match self {
            TraceRecord::Packet(e) => e.time,
            TraceRecord::Energy(e) => e.time,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<TraceRecord>) -> Self {
        Trace { records }
    }

    pub fn push(&mut self, rec: TraceRecord) {
        self.records.push(rec);
    }

    pub fn packet(&mut self, ev: TraceEvent) {
        self.records.push(TraceRecord::Packet(ev));
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn packet_events(&self) -> impl Iterator<Item = &TraceEvent> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Packet(e) => Some(e),
            _ => None,
        })
    }

    pub fn energy_events(&self) -> impl Iterator<Item = &EnergyEvent> {
        self.records.iter().filter_map(|r| match r {
            TraceRecord::Energy(e) => Some(e),
            _ => None,
        })
    }

    pub fn write_to<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut line = String::with_capacity(64);
        for rec in &self.records {
            line.clear();
            format_record(&mut line, rec);
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            format_record(&mut out, rec);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            records.push(parse_record(line).map_err(|m| Error::parse(i + 1, m))?);
        }
        Ok(Trace { records })
    }
}

pub(crate) fn format_record(out: &mut String, rec: &TraceRecord) {
    match rec {
        TraceRecord::Packet(e) => {
            writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                e.action.code(),
                e.time,
                e.node,
                e.layer.code(),
                e.kind,
                e.uid,
                e.size,
                e.drop_reason.map_or("-", DropReason::as_str)
            )
            .unwrap();
        }
        TraceRecord::Energy(e) => {
            writeln!(
                out,
                "E {} {} {} {}",
                e.time,
                e.node,
                e.role.as_str(),
                e.amount.as_nanojoules()
            )
            .unwrap();
        }
    }
}

fn parse_time(s: &str) -> std::result::Result<SimTime, String> {
    let (whole, frac) = s.split_once('.').ok_or_else(|| format!("bad time `{s}`"))?;
    if frac.len() != 6 {
        return Err(format!("bad time `{s}`"));
    }
    let w: u64 = whole.parse().map_err(|_| format!("bad time `{s}`"))?;
    let f: u64 = frac.parse().map_err(|_| format!("bad time `{s}`"))?;
    Ok(SimTime::from_micros(w * 1_000_000 + f))
}

fn parse_record(line: &str) -> std::result::Result<TraceRecord, String> {
    let f: Vec<&str> = line.split_whitespace().collect();
    let node = |s: &str| s.parse::<u32>().map(NodeId).map_err(|_| format!("bad node `{s}`"));
    if f.first() == Some(&"E") {
        if f.len() != 5 {
            return Err(format!("energy record needs 5 fields, got {}", f.len()));
        }
        let role = match f[3] {
            "tx" => EnergyRole::Tx,
            "rx" => EnergyRole::Rx,
            other => return Err(format!("bad energy role `{other}`")),
        };
        let nj: u64 = f[4].parse().map_err(|_| format!("bad energy `{}`", f[4]))?;
        return Ok(TraceRecord::Energy(EnergyEvent {
            time: parse_time(f[1])?,
            node: node(f[2])?,
            role,
            amount: Energy::from_nanojoules(nj),
        }));
    }
    if f.len() != 8 {
        return Err(format!("packet record needs 8 fields, got {}", f.len()));
    }
    let action = match f[0] {
        "s" => TraceAction::Send,
        "r" => TraceAction::Recv,
        "f" => TraceAction::Forward,
        "d" => TraceAction::Drop,
        other => return Err(format!("bad action `{other}`")),
    };
    let layer = match f[3] {
        "AGT" => Layer::Agt,
        "RTR" => Layer::Rtr,
        "IFQ" => Layer::Ifq,
        "MAC" => Layer::Mac,
        other => return Err(format!("bad layer `{other}`")),
    };
    let kind = PacketKind::parse(f[4]).ok_or_else(|| format!("bad kind `{}`", f[4]))?;
    let uid = f[5].parse().map(PacketUid).map_err(|_| format!("bad uid `{}`", f[5]))?;
    let size = f[6].parse().map_err(|_| format!("bad size `{}`", f[6]))?;
    let drop_reason = match f[7] {
        "-" => None,
        s => Some(DropReason::parse(s).ok_or_else(|| format!("bad reason `{s}`"))?),
    };
    Ok(TraceRecord::Packet(TraceEvent {
        time: parse_time(f[1])?,
        action,
        layer,
        node: node(f[2])?,
        kind,
        uid,
        size,
        drop_reason,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_record() -> impl Strategy<Value = TraceRecord> {
        let packet = (
            0u64..10_000_000_000,
            0usize..4,
            0usize..4,
            0u32..100,
            0usize..4,
            0u64..1_000_000,
            0u32..2000,
            proptest::option::of(0usize..6),
        )
            .prop_map(|(t, a, l, n, k, uid, size, r)| {
                TraceRecord::Packet(TraceEvent {
                    time: SimTime::from_micros(t),
                    action: [TraceAction::Send, TraceAction::Recv, TraceAction::Forward, TraceAction::Drop][a],
                    layer: [Layer::Agt, Layer::Rtr, Layer::Ifq, Layer::Mac][l],
                    node: NodeId(n),
                    kind: [PacketKind::Data, PacketKind::Rreq, PacketKind::Rrep, PacketKind::Rerr][k],
                    uid: PacketUid(uid),
                    size,
                    drop_reason: r.map(|i| DropReason::ALL[i]),
                })
            });
        let energy = (0u64..10_000_000_000, 0u32..100, any::<bool>(), 0u64..u64::MAX / 2).prop_map(
            |(t, n, tx, nj)| {
                TraceRecord::Energy(EnergyEvent {
                    time: SimTime::from_micros(t),
                    node: NodeId(n),
                    role: if tx { EnergyRole::Tx } else { EnergyRole::Rx },
                    amount: Energy::from_nanojoules(nj),
                })
            },
        );
        prop_oneof![packet, energy]
    }

    proptest! {
        #[test]
        fn text_form_round_trips(recs in proptest::collection::vec(arb_record(), 0..40)) {
            let t = Trace::from_records(recs);
            prop_assert_eq!(Trace::from_text(&t.to_text()).unwrap(), t);
        }
    }

    #[test]
    fn line_layout_is_stable() {
        let t = Trace::from_records(vec![TraceRecord::Packet(TraceEvent {
            time: SimTime::from_micros(1_500_000),
            action: TraceAction::Drop,
            layer: Layer::Ifq,
            node: NodeId(4),
            kind: PacketKind::Data,
            uid: PacketUid(17),
            size: 532,
            drop_reason: Some(DropReason::Ifq),
        })]);
        assert_eq!(t.to_text(), "d 1.500000 4 IFQ DATA 17 532 IFQ\n");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = Trace::from_text("s 0.000000 1 AGT DATA 1 512 -\nbogus\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}

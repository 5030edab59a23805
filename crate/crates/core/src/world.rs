//! One simulation run: mobility, medium access, routing agents and tracing
//! wired to a single event queue.
//!
//! The medium is modelled per transmission. A frame reaches every alive node
//! within range of its sender when it starts; a receiver loses it if any
//! other transmission it can hear overlaps in time, or if it was transmitting
//! itself. Carrier sense only notices a transmission `cca_delay` after it
//! starts, so senders that pick the same backoff slot collide.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::engine::{EventHandle, EventQueue};
use crate::error::{Error, Result};
use crate::metrics::{compute_energy_metrics, MetricsCollector, MetricsReport};
use crate::mobility::Point;
use crate::packet::{DataPacket, NodeId, Packet, PacketKind, PacketUid};
use crate::radio::mac::{EnqueueOutcome, InterfaceQueue, MacConfig};
use crate::radio::{in_range, Energy, EnergyLedger, EnergyRole, Frame, LinkDst, RadioConfig};
use crate::rng::{self, RngStream};
use crate::routing::dsr::DsrAgent;
use crate::routing::meadsr::MeaDsrAgent;
use crate::routing::{Action, AgentConfig, AuditEvent, Ctx, RoutingAgent, SendMode, TimerKey};
use crate::scenario::{Protocol, Scenario, ScenarioConfig};
use crate::time::SimTime;
use crate::trace::{
    format_record, DropReason, EnergyEvent, Layer, Trace, TraceAction, TraceEvent, TraceRecord,
};

/// Upper bound of the uniform delay before a request is re-broadcast.
pub const REBROADCAST_JITTER: SimTime = SimTime::from_millis(10);

#[derive(Default)]
pub struct RunOptions {
    /// Keep every trace record in memory and return it.
    pub keep_trace: bool,
    /// Stream trace lines to this writer as they are produced.
    pub trace_sink: Option<Box<dyn Write>>,
    /// Record protocol audit events.
    pub audit: bool,
}

impl RunOptions {
    pub fn with_trace() -> Self {
        RunOptions {
            keep_trace: true,
            ..Self::default()
        }
    }

    pub fn audited() -> Self {
        RunOptions {
            keep_trace: true,
            audit: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub protocol: Protocol,
    pub report: MetricsReport,
    pub ledger: EnergyLedger,
    /// Data packets still buffered, queued or on air when the run ended.
    pub in_flight: u64,
    /// Per-node consumption summed from the emitted energy records.
    pub traced_energy: Vec<Energy>,
    pub trace: Option<Trace>,
    pub audit: Vec<(SimTime, AuditEvent)>,
    pub events: u64,
}

impl RunOutput {
    /// `sent == delivered + terminal drops + in flight`.
    pub fn accounting_balanced(&self) -> bool {
        self.report.data_sent
            == self.report.data_received + self.report.drops.terminal() + self.in_flight
    }

    /// The ledger and the emitted energy records agree node by node.
    pub fn energy_traced_exactly(&self) -> bool {
        (0..self.ledger.node_count())
            .all(|i| self.ledger.consumed(NodeId(i as u32)) == self.traced_energy[i])
    }
}

#[derive(Debug, Clone)]
enum Event {
    Emit { conn: usize, k: usize },
    MacAttempt { node: u32 },
    TxEnd { id: u64 },
    Timer { node: u32, key: TimerKey },
    Jittered { node: u32, packet: Packet, next_hop: Option<NodeId>, mode: SendMode },
}

#[derive(Debug)]
enum MacState {
    Idle,
    Contending { frame: Frame, attempt: u32 },
    Transmitting { frame: Frame, attempt: u32, tx: u64 },
}

#[derive(Debug)]
struct Mac {
    ifq: InterfaceQueue,
    state: MacState,
    pending: Option<EventHandle>,
}

#[derive(Debug)]
struct Transmission {
    id: u64,
    sender: NodeId,
    start: SimTime,
    end: SimTime,
    receivers: Vec<NodeId>,
    aborted: bool,
    /// Its end event has been handled.
    finished: bool,
}

struct Recorder {
    collector: MetricsCollector,
    memory: Option<Trace>,
    sink: Option<Box<dyn Write>>,
    line: String,
    error: Option<io::Error>,
}

impl Recorder {
    fn push(&mut self, rec: TraceRecord) {
        self.collector.record(&rec);
        if let Some(w) = self.sink.as_mut() {
            if self.error.is_none() {
                self.line.clear();
                format_record(&mut self.line, &rec);
                if let Err(e) = w.write_all(self.line.as_bytes()) {
                    self.error = Some(e);
                }
            }
        }
        if let Some(t) = self.memory.as_mut() {
            t.push(rec);
        }
    }
}

pub struct Simulation<'a> {
    protocol: Protocol,
    radio: RadioConfig,
    mac_cfg: MacConfig,
    scenario: &'a Scenario,
    end: SimTime,
    queue: EventQueue<Event>,
    agents: Vec<Box<dyn RoutingAgent>>,
    ledger: EnergyLedger,
    macs: Vec<Mac>,
    air: Vec<Transmission>,
    next_tx: u64,
    timers: BTreeMap<(u32, TimerKey), EventHandle>,
    next_uid: u64,
    mac_rng: RngStream,
    jitter_rng: RngStream,
    rec: Recorder,
    audit: Option<Vec<(SimTime, AuditEvent)>>,
}

fn make_agent(protocol: Protocol, id: NodeId, cfg: AgentConfig) -> Box<dyn RoutingAgent> {
    match protocol {
        Protocol::MeaDsr => Box::new(MeaDsrAgent::new(id, cfg)),
        Protocol::Dsr => Box::new(DsrAgent::new(id, cfg)),
    }
}

/// Generates the scenario for `cfg` and runs it.
pub fn simulate(cfg: &ScenarioConfig, opts: RunOptions) -> Result<RunOutput> {
    let scenario = Scenario::generate(cfg)?;
    Simulation::new(cfg, &scenario, opts)?.run()
}

impl<'a> Simulation<'a> {
    /// Radio, energy and protocol settings come from `cfg`; nodes, motion,
    /// traffic and the run length come from `scenario`.
    pub fn new(cfg: &ScenarioConfig, scenario: &'a Scenario, opts: RunOptions) -> Result<Self> {
        let radio = cfg.radio();
        radio.validate()?;
        let n = scenario.node_count();
        if n == 0 {
            return Err(Error::InvalidArgument("scenario has no nodes".into()));
        }
        let agent_cfg = cfg.agent();
        let mut queue = EventQueue::new();
        for (conn, sched) in scenario.schedules.iter().enumerate() {
            if let Some(&t) = sched.first() {
                queue.schedule(t, Event::Emit { conn, k: 0 });
            }
        }
        Ok(Simulation {
            protocol: cfg.protocol,
            mac_cfg: cfg.mac(),
            scenario,
            end: scenario.mobility.sim_end(),
            queue,
            agents: (0..n as u32)
                .map(|i| make_agent(cfg.protocol, NodeId(i), agent_cfg.clone()))
                .collect(),
            ledger: EnergyLedger::new(n, cfg.initial_energy()),
            macs: (0..n)
                .map(|_| Mac {
                    ifq: InterfaceQueue::new(radio.ifq_capacity),
                    state: MacState::Idle,
                    pending: None,
                })
                .collect(),
            radio,
            air: Vec::new(),
            next_tx: 0,
            timers: BTreeMap::new(),
            next_uid: 1,
            mac_rng: RngStream::new(cfg.seed, rng::MAC_BACKOFF),
            jitter_rng: RngStream::new(cfg.seed, rng::RTR_JITTER),
            rec: Recorder {
                collector: MetricsCollector::new(n),
                memory: opts.keep_trace.then(Trace::new),
                sink: opts.trace_sink,
                line: String::new(),
                error: None,
            },
            audit: opts.audit.then(Vec::new),
        })
    }

    pub fn run(mut self) -> Result<RunOutput> {
        let mut events = 0u64;
        while let Some((_, ev)) = self.queue.pop_until(self.end) {
            events += 1;
            self.dispatch(ev);
        }
        if let Some(mut w) = self.rec.sink.take() {
            if self.rec.error.is_none() {
                if let Err(e) = w.flush() {
                    self.rec.error = Some(e);
                }
            }
        }
        if let Some(e) = self.rec.error.take() {
            return Err(Error::Io(e));
        }
        let in_flight = self.in_flight();
        let delivery = self.rec.collector.delivery();
        let energy = compute_energy_metrics(&self.ledger, delivery.data_received);
        let report = MetricsReport::new(delivery, energy, self.rec.collector.drops().clone());
        let mut traced_energy = self.rec.collector.energy_by_node().to_vec();
        traced_energy.resize(self.ledger.node_count(), Energy::ZERO);
        Ok(RunOutput {
            protocol: self.protocol,
            report,
            ledger: self.ledger,
            in_flight,
            traced_energy,
            trace: self.rec.memory,
            audit: self.audit.unwrap_or_default(),
            events,
        })
    }

    fn now(&self) -> SimTime {
        self.queue.now()
    }

    fn alive(&self, node: NodeId) -> bool {
        self.ledger.is_alive(node)
    }

    fn dispatch(&mut self, ev: Event) {
        match ev {
            Event::Emit { conn, k } => self.emit(conn, k),
            Event::MacAttempt { node } => {
                self.macs[node as usize].pending = None;
                self.mac_attempt(NodeId(node));
            }
            Event::TxEnd { id } => self.tx_end(id),
            Event::Timer { node, key } => {
                self.timers.remove(&(node, key));
                let id = NodeId(node);
                if self.alive(id) {
                    self.call_agent(id, |a, ctx| a.timer(ctx, key));
                }
            }
            Event::Jittered {
                node,
                packet,
                next_hop,
                mode,
            } => self.submit(NodeId(node), packet, next_hop, mode),
        }
    }

    // ---- tracing -------------------------------------------------------

    fn trace_packet(
        &mut self,
        action: TraceAction,
        layer: Layer,
        node: NodeId,
        kind: PacketKind,
        uid: PacketUid,
        size: u32,
        reason: Option<DropReason>,
    ) {
        let ev = TraceEvent {
            time: self.now(),
            action,
            layer,
            node,
            kind,
            uid,
            size,
            drop_reason: reason,
        };
        self.rec.push(TraceRecord::Packet(ev));
    }

    fn trace_drop(&mut self, node: NodeId, layer: Layer, packet: &Packet, reason: DropReason) {
        let size = crate::radio::frame_size(packet);
        self.trace_packet(TraceAction::Drop, layer, node, packet.kind(), packet.uid(), size, Some(reason));
    }

    /// Charges energy and records it; returns whether the node died.
    fn charge(&mut self, node: NodeId, role: EnergyRole, duration: SimTime) -> bool {
        let power = match role {
            EnergyRole::Tx => self.radio.tx_power(),
            EnergyRole::Rx => self.radio.rx_power(),
        };
        let out = self.ledger.charge(node, role, power, duration);
        if out.charged > Energy::ZERO {
            let rec = TraceRecord::Energy(EnergyEvent {
                time: self.now(),
                node,
                role,
                amount: out.charged,
            });
            self.rec.push(rec);
        }
        out.died
    }

    // ---- traffic and agents --------------------------------------------

    fn emit(&mut self, conn: usize, k: usize) {
        let c = &self.scenario.connections[conn];
        let (src, dst, size) = (c.src, c.dst, c.packet_size);
        if let Some(&t) = self.scenario.schedules[conn].get(k + 1) {
            self.queue.schedule(t, Event::Emit { conn, k: k + 1 });
        }
        if !self.alive(src) {
            return;
        }
        let uid = PacketUid(self.next_uid);
        self.next_uid += 1;
        self.trace_packet(TraceAction::Send, Layer::Agt, src, PacketKind::Data, uid, size, None);
        let packet = DataPacket::new(uid, src, dst, size);
        self.call_agent(src, |a, ctx| a.originate(ctx, packet));
    }

    fn call_agent(&mut self, node: NodeId, f: impl FnOnce(&mut dyn RoutingAgent, &mut Ctx)) {
        let mut ctx = Ctx::new(node, self.now(), self.ledger.residual(node), self.next_uid);
        if self.audit.is_some() {
            ctx = ctx.with_audit();
        }
        f(self.agents[node.index()].as_mut(), &mut ctx);
        self.next_uid = ctx.next_uid();
        if let Some(log) = self.audit.as_mut() {
            let now = self.queue.now();
            log.extend(ctx.take_audit().into_iter().map(|e| (now, e)));
        }
        for action in ctx.take_actions() {
            self.execute(node, action);
        }
    }

    fn execute(&mut self, node: NodeId, action: Action) {
        match action {
            Action::Send {
                packet,
                next_hop,
                mode,
                jitter,
            } => {
                if jitter {
                    let us = self
                        .jitter_rng
                        .below(REBROADCAST_JITTER.as_micros() + 1)
                        .expect("non-empty jitter range");
                    self.queue.schedule_in(
                        SimTime::from_micros(us),
                        Event::Jittered {
                            node: node.0,
                            packet,
                            next_hop,
                            mode,
                        },
                    );
                } else {
                    self.submit(node, packet, next_hop, mode);
                }
            }
            Action::Deliver(p) => {
                self.trace_packet(TraceAction::Recv, Layer::Agt, node, PacketKind::Data, p.uid, p.payload, None);
            }
            Action::Drop { packet, reason } => self.trace_drop(node, Layer::Rtr, &packet, reason),
            Action::SetTimer { key, delay } => {
                if let Some(h) = self.timers.remove(&(node.0, key)) {
                    self.queue.cancel(h);
                }
                let h = self.queue.schedule_in(delay, Event::Timer { node: node.0, key });
                self.timers.insert((node.0, key), h);
            }
            Action::CancelTimer(key) => {
                if let Some(h) = self.timers.remove(&(node.0, key)) {
                    self.queue.cancel(h);
                }
            }
        }
    }

    /// Routing hands a packet to the interface queue.
    fn submit(&mut self, node: NodeId, packet: Packet, next_hop: Option<NodeId>, mode: SendMode) {
        if !self.alive(node) {
            self.trace_drop(node, Layer::Rtr, &packet, DropReason::NodeDead);
            return;
        }
        let link_dst = next_hop.map_or(LinkDst::Broadcast, LinkDst::Unicast);
        let frame = Frame::new(node, link_dst, packet);
        let action = match mode {
            SendMode::Originate => TraceAction::Send,
            SendMode::Forward => TraceAction::Forward,
        };
        self.trace_packet(action, Layer::Rtr, node, frame.kind(), frame.packet.uid(), frame.size, None);
        let mac = &mut self.macs[node.index()];
        match mac.ifq.enqueue(frame) {
            EnqueueOutcome::Accepted => self.start_contention(node),
            EnqueueOutcome::DroppedFull(frame) => {
                self.trace_drop(node, Layer::Ifq, &frame.packet, DropReason::Ifq)
            }
        }
    }

    // ---- medium access -------------------------------------------------

    fn start_contention(&mut self, node: NodeId) {
        let mac = &mut self.macs[node.index()];
        if !matches!(mac.state, MacState::Idle) {
            return;
        }
        if let Some(frame) = mac.ifq.dequeue() {
            mac.state = MacState::Contending { frame, attempt: 0 };
            let now = self.now();
            self.schedule_attempt(node, 0, now);
        }
    }

    fn schedule_attempt(&mut self, node: NodeId, attempt: u32, from: SimTime) {
        let cw = self.mac_cfg.contention_window(attempt);
        let slots = self.mac_rng.below(cw).expect("contention window is positive");
        let at = from + self.mac_cfg.difs + SimTime::from_micros(slots * self.mac_cfg.slot.as_micros());
        let h = self.queue.schedule(at, Event::MacAttempt { node: node.0 });
        self.macs[node.index()].pending = Some(h);
    }

    /// End of the busiest transmission `node` can currently hear.
    fn busy_until(&self, node: NodeId) -> Option<SimTime> {
        let now = self.now();
        self.air
            .iter()
            .filter(|t| t.end > now && t.start + self.mac_cfg.cca_delay <= now && t.receivers.contains(&node))
            .map(|t| t.end)
            .max()
    }

    fn positions(&self) -> Vec<Point> {
        let now = self.now();
        (0..self.scenario.node_count())
            .map(|i| self.scenario.mobility.position_unchecked(i, now))
            .collect()
    }

    fn mac_attempt(&mut self, node: NodeId) {
        if !self.alive(node) {
            return;
        }
        let attempt = match &self.macs[node.index()].state {
            MacState::Contending { attempt, .. } => *attempt,
            _ => return,
        };
        if let Some(until) = self.busy_until(node) {
            self.schedule_attempt(node, attempt, until);
            return;
        }
        let MacState::Contending { frame, attempt } =
            std::mem::replace(&mut self.macs[node.index()].state, MacState::Idle)
        else {
            unreachable!()
        };
        let duration = self.radio.airtime(frame.size);
        self.trace_packet(TraceAction::Send, Layer::Mac, node, frame.kind(), frame.packet.uid(), frame.size, None);
        if self.charge(node, EnergyRole::Tx, duration) {
            // battery ran out before the frame got on air
            self.trace_drop(node, Layer::Mac, &frame.packet, DropReason::NodeDead);
            self.kill(node);
            return;
        }
        let pos = self.positions();
        let me = pos[node.index()];
        let receivers: Vec<NodeId> = (0..pos.len() as u32)
            .map(NodeId)
            .filter(|&r| r != node && self.alive(r) && in_range(me, pos[r.index()], self.radio.range))
            .collect();
        let mut died = Vec::new();
        for &r in &receivers {
            if self.charge(r, EnergyRole::Rx, duration) {
                died.push(r);
            }
        }
        let id = self.next_tx;
        self.next_tx += 1;
        let now = self.now();
        self.air.push(Transmission {
            id,
            sender: node,
            start: now,
            end: now + duration,
            receivers,
            aborted: false,
            finished: false,
        });
        self.macs[node.index()].state = MacState::Transmitting { frame, attempt, tx: id };
        self.queue.schedule(now + duration, Event::TxEnd { id });
        for r in died {
            self.kill(r);
        }
    }

    fn collided(&self, tx: &Transmission, r: NodeId) -> bool {
        self.air.iter().any(|t| {
            t.id != tx.id
                && t.start < tx.end
                && t.end > tx.start
                && (t.sender == r || t.receivers.contains(&r))
        })
    }

    fn tx_end(&mut self, id: u64) {
        let Some(idx) = self.air.iter().position(|t| t.id == id) else {
            return;
        };
        let tx = &self.air[idx];
        let sender = tx.sender;
        let aborted = tx.aborted;
        let heard: Vec<(NodeId, bool)> = tx
            .receivers
            .iter()
            .map(|&r| (r, self.ledger.is_alive(r) && !self.collided(tx, r)))
            .collect();
        self.air[idx].finished = true;
        self.prune_air();
        if aborted {
            return;
        }
        let state = std::mem::replace(&mut self.macs[sender.index()].state, MacState::Idle);
        let MacState::Transmitting { frame, attempt, .. } = state else {
            unreachable!("transmission end for a sender that is not transmitting");
        };
        match frame.link_dst {
            LinkDst::Broadcast => {
                for (r, ok) in heard {
                    if ok {
                        self.receive(r, frame.packet.clone(), sender, frame.size);
                    }
                }
                self.start_contention(sender);
            }
            LinkDst::Unicast(dst) => {
                let outcome = heard.iter().find(|(r, _)| *r == dst).map(|&(_, ok)| ok);
                match outcome {
                    Some(true) => {
                        self.start_contention(sender);
                        self.receive(dst, frame.packet, sender, frame.size);
                    }
                    failed => {
                        if failed == Some(false) && self.alive(dst) {
                            self.trace_drop(dst, Layer::Mac, &frame.packet, DropReason::Collision);
                        }
                        if attempt + 1 < self.mac_cfg.retry_limit {
                            self.macs[sender.index()].state = MacState::Contending {
                                frame,
                                attempt: attempt + 1,
                            };
                            let now = self.now();
                            self.schedule_attempt(sender, attempt + 1, now);
                        } else {
                            let mut packets = vec![frame.packet];
                            packets.extend(
                                self.macs[sender.index()]
                                    .ifq
                                    .remove_for(dst)
                                    .into_iter()
                                    .map(|f| f.packet),
                            );
                            self.call_agent(sender, |a, ctx| a.link_failed(ctx, packets, dst));
                            self.start_contention(sender);
                        }
                    }
                }
            }
        }
    }

    fn receive(&mut self, node: NodeId, packet: Packet, from: NodeId, size: u32) {
        if !self.alive(node) {
            return;
        }
        self.trace_packet(TraceAction::Recv, Layer::Rtr, node, packet.kind(), packet.uid(), size, None);
        self.call_agent(node, |a, ctx| a.receive(ctx, packet, from));
    }

    /// Forgets finished transmissions that no pending one overlaps.
    fn prune_air(&mut self) {
        let horizon = self
            .air
            .iter()
            .filter(|t| !t.finished)
            .map(|t| t.start)
            .min()
            .unwrap_or(SimTime::MAX);
        self.air.retain(|t| !t.finished || t.end > horizon);
    }

    /// Battery exhausted: everything the node holds is lost.
    fn kill(&mut self, node: NodeId) {
        let i = node.index();
        if let Some(h) = self.macs[i].pending.take() {
            self.queue.cancel(h);
        }
        match std::mem::replace(&mut self.macs[i].state, MacState::Idle) {
            MacState::Idle => {}
            MacState::Contending { frame, .. } => {
                self.trace_drop(node, Layer::Mac, &frame.packet, DropReason::NodeDead)
            }
            MacState::Transmitting { frame, tx, .. } => {
                if let Some(t) = self.air.iter_mut().find(|t| t.id == tx) {
                    t.aborted = true;
                }
                self.trace_drop(node, Layer::Mac, &frame.packet, DropReason::NodeDead);
            }
        }
        for f in self.macs[i].ifq.drain_all() {
            self.trace_drop(node, Layer::Ifq, &f.packet, DropReason::NodeDead);
        }
        for p in self.agents[i].drain_buffer() {
            self.trace_drop(node, Layer::Rtr, &Packet::Data(p), DropReason::NodeDead);
        }
    }

    fn in_flight(&self) -> u64 {
        let mut n = 0u64;
        for (mac, agent) in self.macs.iter().zip(&self.agents) {
            n += agent.buffered_data() as u64;
            n += mac.ifq.iter().filter(|f| f.kind() == PacketKind::Data).count() as u64;
            n += match &mac.state {
                MacState::Idle => 0,
                MacState::Contending { frame, .. } | MacState::Transmitting { frame, .. } => {
                    (frame.kind() == PacketKind::Data) as u64
                }
            };
        }
        n
    }
}

//! The slotted simulation loop.
//!
//! Each slot runs five phases in order:
//!
//! 1. every mobile node moves for one slot,
//! 2. new packets are generated,
//! 3. every carrier evaluates the carry-or-relay rule for its packets,
//! 4. the resulting handshakes are resolved under the configured channel,
//! 5. outcomes are applied and metrics recorded.
//!
//! A run is a pure function of its [`WorldConfig`]: all randomness comes
//! from streams derived from the configured seed, so the same
//! configuration always produces the same [`RunReport`].

mod config;
mod report;

pub use config::{default_warmup, ChannelConfig, ConfigError, Mode, TrafficParams, WorldConfig};
pub use report::{DeliveryRecord, RelayCounts, RunReport};

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, DiskChannel, SinrChannel};
use crate::crb::{
    decide, handshake_disk, handshake_sinr, ActiveSet, CarryTrace, CrbParams, HandshakeOutcome, Packet, RelayDecision, RelaySelector,
    Snapshot, UniformSelector,
};
use crate::geometry::Point;
use crate::mobility::{MobilityModel, NodeRng, RandomWalk, Walker};
use crate::seed::derive;
use crate::SimRng;

/// A destination. Fixed nodes never move and never send data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedNode {
    pub id: usize,
    pub pos: Point,
}

/// Why a carrier handed its packet on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelayCause {
    /// The carrier changed heading since it last chose to carry, or never
    /// carried the packet at all.
    Turn,
    /// The carrier kept its heading and the bearing drifted past the carry
    /// angle as it went by the destination.
    PassOver,
}

/// Attribute a relay change. `carrier_turns` is the carrier's Poisson turn
/// count at the moment it transmits.
pub fn classify_relay_cause(trace: &CarryTrace, carrier_turns: u64) -> RelayCause {
    if trace.fresh || carrier_turns > trace.turn_mark {
        RelayCause::Turn
    } else {
        RelayCause::PassOver
    }
}

/// One Bernoulli draw: does a node generate a packet in this slot?
pub fn generate_traffic<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<bool, ConfigError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(ConfigError::TrafficRate(rate));
    }
    Ok(rate > 0.0 && rng.random::<f64>() < rate)
}

/// Among the packets at `eligible` indices, the one whose destination is
/// farthest from the carrier; ties go to the lowest packet id.
pub fn select_packet_to_send(buffer: &[Packet], eligible: &[usize], carrier_pos: Point) -> Option<usize> {
    eligible.iter().copied().max_by(|&a, &b| {
        let (pa, pb) = (&buffer[a], &buffer[b]);
        carrier_pos.distance_sq(pa.dest_pos).total_cmp(&carrier_pos.distance_sq(pb.dest_pos)).then(pb.id.cmp(&pa.id))
    })
}

/// Resolve one slot of SINR handshakes. Every requester transmits at once,
/// and each handshake sees all the others as interference. Requests are
/// `(sender, destination position)` pairs and outcomes come back in the
/// same order.
pub fn resolve_slot_sinr(
    snap: &Snapshot<'_>,
    requests: &[(usize, Point)],
    chan: &SinrChannel,
    crb: &CrbParams,
    selector: &dyn RelaySelector,
    rng: &mut SimRng,
) -> Result<Vec<HandshakeOutcome>, ChannelError> {
    let active = ActiveSet::new(snap.positions().len(), requests.iter().map(|r| r.0));
    requests.iter().map(|&(sender, dest)| handshake_sinr(sender, dest, snap, &active, chan, crb, selector, rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("could not place a destination at distance {0} from the source inside the unit square")]
    Placement(f64),
    #[error("packet conservation violated: generated {generated}, delivered {delivered}, in flight {in_flight}")]
    Conservation { generated: u64, delivered: u64, in_flight: u64 },
}

// Stream indices under the run seed.
const SETUP_STREAM: u64 = 0;
const TRAFFIC_STREAM: u64 = 1;
const HANDSHAKE_STREAM: u64 = 2;
const FIRST_NODE_STREAM: u64 = 3;

const PLACEMENT_TRIES: usize = 100_000;

/// A configured run, optionally with a hand-built initial state or custom
/// mobility and relay selection.
pub struct Simulation {
    config: WorldConfig,
    mobility: Box<dyn MobilityModel>,
    selector: Box<dyn RelaySelector>,
    initial: Option<(Vec<Walker>, Vec<Point>)>,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation").field("config", &self.config).finish_non_exhaustive()
    }
}

/// Run `config` with the standard random walk and uniform relay selection.
pub fn run(config: &WorldConfig) -> Result<RunReport, RunError> {
    Simulation::new(config.clone())?.run()
}

impl Simulation {
    pub fn new(config: WorldConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Simulation { mobility: Box::new(RandomWalk(config.mobility)), selector: Box::new(UniformSelector), initial: None, config })
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn with_mobility(mut self, model: Box<dyn MobilityModel>) -> Self {
        self.mobility = model;
        self
    }

    pub fn with_selector(mut self, selector: Box<dyn RelaySelector>) -> Self {
        self.selector = selector;
        self
    }

    /// Start from the given walkers and destinations instead of random
    /// placement. Disk runs take one destination, SINR runs one per node.
    pub fn with_initial_state(mut self, walkers: Vec<Walker>, destinations: Vec<Point>) -> Result<Self, ConfigError> {
        let want = match self.config.mode {
            Mode::DiskSinglePacket => 1,
            Mode::SinrFullTraffic => self.config.nodes,
        };
        if walkers.len() != self.config.nodes || destinations.len() != want {
            return Err(ConfigError::InitialState { walkers: walkers.len(), destinations: destinations.len() });
        }
        self.initial = Some((walkers, destinations));
        Ok(self)
    }

    pub fn run(&self) -> Result<RunReport, RunError> {
        let mut world = World::setup(self)?;
        for t in 0..self.config.max_slots {
            world.step(t)?;
            if world.finished() {
                break;
            }
        }
        world.finish()
    }
}

struct World<'s> {
    sim: &'s Simulation,
    cfg: &'s WorldConfig,
    walkers: Vec<Walker>,
    positions: Vec<Point>,
    node_rngs: Vec<NodeRng>,
    fixed: Vec<FixedNode>,
    setup_rng: SimRng,
    traffic_rng: SimRng,
    handshake_rng: SimRng,
    channel: Channel,
    // disk: the one packet and who holds it
    single: Option<(usize, Packet)>,
    // SINR: per-node buffers and the arrival schedule
    buffers: Vec<Vec<Packet>>,
    arrivals: BinaryHeap<Reverse<(u64, usize)>>,
    gap: Option<Geometric>,
    next_id: u64,
    slots_simulated: u64,
    report: RunReport,
}

enum Channel {
    Disk(DiskChannel),
    Sinr(SinrChannel),
}

impl<'s> World<'s> {
    fn setup(sim: &'s Simulation) -> Result<Self, RunError> {
        let cfg = &sim.config;
        let n = cfg.nodes;
        let mut setup_rng = SimRng::seed_from_u64(derive(cfg.seed, SETUP_STREAM));
        let traffic_rng = SimRng::seed_from_u64(derive(cfg.seed, TRAFFIC_STREAM));
        let handshake_rng = SimRng::seed_from_u64(derive(cfg.seed, HANDSHAKE_STREAM));
        let node_rngs: Vec<NodeRng> = (0..n as u64).map(|i| NodeRng::seed_from_u64(derive(cfg.seed, FIRST_NODE_STREAM + i))).collect();

        let (walkers, fixed) = match &sim.initial {
            Some((w, d)) => (w.clone(), d.iter().enumerate().map(|(id, &pos)| FixedNode { id, pos }).collect()),
            None => {
                let walkers = sim.mobility.init(n, &mut setup_rng);
                let count = match cfg.mode {
                    Mode::DiskSinglePacket if cfg.initial_distance.is_some() => 0,
                    Mode::DiskSinglePacket => 1,
                    Mode::SinrFullTraffic => n,
                };
                let fixed = (0..count).map(|id| FixedNode { id, pos: Point::new(setup_rng.random(), setup_rng.random()) }).collect();
                (walkers, fixed)
            }
        };
        let positions = walkers.iter().map(|w| w.pos).collect();

        let channel = match (&cfg.mode, &cfg.channel) {
            (Mode::DiskSinglePacket, _) => Channel::Disk(cfg.disk_channel()?),
            (Mode::SinrFullTraffic, ChannelConfig::Sinr(c)) => Channel::Sinr(*c),
            (Mode::SinrFullTraffic, ChannelConfig::Disk { .. }) => unreachable!("rejected by validation"),
        };

        let mut world = World {
            sim,
            cfg,
            walkers,
            positions,
            node_rngs,
            fixed,
            setup_rng,
            traffic_rng,
            handshake_rng,
            channel,
            single: None,
            buffers: Vec::new(),
            arrivals: BinaryHeap::new(),
            gap: None,
            next_id: 0,
            slots_simulated: 0,
            report: RunReport {
                nodes: n,
                seed: cfg.seed,
                delivered: Vec::new(),
                generated_count: 0,
                delivered_count: 0,
                in_flight_count: 0,
                failed_handshake_count: 0,
                handshake_attempts: 0,
                relay_changes: RelayCounts::default(),
                lambda_n: 0.0,
                measurement_slots: 0,
                slots_simulated: 0,
                total_generated: 0,
                total_delivered: 0,
                total_in_flight: 0,
            },
        };

        if cfg.mode == Mode::SinrFullTraffic {
            world.buffers = vec![Vec::new(); n];
            let rate = cfg.traffic_rate()?;
            if rate > 0.0 {
                // Bernoulli arrivals per slot, sampled as geometric gaps
                let gap = Geometric::new(rate).map_err(|_| ConfigError::TrafficRate(rate))?;
                for node in 0..n {
                    let first = gap.sample(&mut world.traffic_rng);
                    world.schedule(node, first);
                }
                world.gap = Some(gap);
            }
        }
        Ok(world)
    }

    fn schedule(&mut self, node: usize, slot: u64) {
        if slot < self.cfg.max_slots {
            self.arrivals.push(Reverse((slot, node)));
        }
    }

    fn finished(&self) -> bool {
        self.cfg.mode == Mode::DiskSinglePacket && self.report.total_delivered > 0
    }

    fn step(&mut self, t: u64) -> Result<(), RunError> {
        let now = t as f64;
        for ((w, rng), pos) in self.walkers.iter_mut().zip(&mut self.node_rngs).zip(&mut self.positions) {
            self.sim.mobility.advance(w, now, 1.0, rng);
            *pos = w.pos;
        }
        self.slots_simulated = t + 1;
        match self.cfg.mode {
            Mode::DiskSinglePacket => {
                if t == self.cfg.warmup_slots {
                    self.create_single_packet(t)?;
                }
                self.disk_slot(t);
            }
            Mode::SinrFullTraffic => {
                self.sinr_arrivals(t);
                self.sinr_slot(t)?;
            }
        }
        Ok(())
    }

    fn new_packet(&mut self, source: usize, dest: FixedNode, t: u64) -> Packet {
        let pkt = Packet::new(self.next_id, source, dest.id, dest.pos, t, &self.walkers[source]);
        self.next_id += 1;
        self.report.total_generated += 1;
        if t >= self.cfg.warmup_slots {
            self.report.generated_count += 1;
        }
        pkt
    }

    fn create_single_packet(&mut self, t: u64) -> Result<(), RunError> {
        let source = 0;
        if self.fixed.is_empty() {
            let r = self.cfg.initial_distance.expect("destination is drawn at setup otherwise");
            let origin = self.positions[source];
            let pos = (0..PLACEMENT_TRIES)
                .map(|_| {
                    let a = self.setup_rng.random::<f64>() * TAU;
                    Point::new(origin.x + r * a.cos(), origin.y + r * a.sin())
                })
                .find(|p| p.in_unit_square())
                .ok_or(RunError::Placement(r))?;
            self.fixed.push(FixedNode { id: 0, pos });
        }
        let pkt = self.new_packet(source, self.fixed[0], t);
        self.single = Some((source, pkt));
        Ok(())
    }

    fn sinr_arrivals(&mut self, t: u64) {
        while let Some(&Reverse((slot, node))) = self.arrivals.peek() {
            if slot != t {
                break;
            }
            self.arrivals.pop();
            let pkt = self.new_packet(node, self.fixed[node], t);
            self.buffers[node].push(pkt);
            let gap = self.gap.expect("arrivals imply a positive rate").sample(&mut self.traffic_rng);
            self.schedule(node, t.saturating_add(1).saturating_add(gap));
        }
    }

    fn deliver(&mut self, mut pkt: Packet, t: u64) {
        pkt.hops += 1;
        pkt.delivered_at = Some(t);
        self.report.total_delivered += 1;
        if pkt.created_at >= self.cfg.warmup_slots {
            self.report.delivered_count += 1;
            self.report.delivered.push(DeliveryRecord {
                packet_id: pkt.id,
                source: pkt.source,
                created_at: pkt.created_at,
                delay: t - pkt.created_at,
                hops: pkt.hops,
                attempts: pkt.attempts,
                initial_distance: pkt.initial_distance,
                turn_relays: pkt.turn_relays,
                pass_over_relays: pkt.pass_over_relays,
            });
        }
    }

    /// Record a handoff from `from` to `to` on the packet itself.
    fn hand_over(&mut self, pkt: &mut Packet, from: usize, to: usize, t: u64) {
        pkt.hops += 1;
        let cause = classify_relay_cause(&pkt.trace, self.walkers[from].turns);
        let measuring = t >= self.cfg.warmup_slots;
        match cause {
            RelayCause::Turn => {
                pkt.turn_relays += 1;
                if measuring {
                    self.report.relay_changes.turn += 1;
                }
            }
            RelayCause::PassOver => {
                pkt.pass_over_relays += 1;
                if measuring {
                    self.report.relay_changes.pass_over += 1;
                }
            }
        }
        pkt.trace = CarryTrace { fresh: true, turn_mark: self.walkers[to].turns };
    }

    fn count_attempt(&mut self, pkt: &mut Packet, failed: bool, t: u64) {
        count_attempt(&mut self.report, self.cfg.warmup_slots, pkt, failed, t);
    }

    fn disk_slot(&mut self, t: u64) {
        let Some((mut holder, mut pkt)) = self.single.take() else {
            return;
        };
        let Channel::Disk(chan) = self.channel else { unreachable!() };
        let crb = self.cfg.crb;
        let positions = std::mem::take(&mut self.positions);
        let mut snap: Option<Snapshot<'_>> = None;
        // each handoff strictly shortens the distance to the destination,
        // so a chain cannot revisit a node; the cap is a backstop
        let mut chain = 0usize;
        loop {
            let carrier = &self.walkers[holder];
            let in_range = chan.can_receive(carrier.pos.distance(pkt.dest_pos));
            match decide(carrier, &pkt, &crb, in_range) {
                RelayDecision::Deliver => {
                    self.count_attempt(&mut pkt, false, t);
                    self.positions = positions;
                    self.deliver(pkt, t);
                    return;
                }
                RelayDecision::Carry => {
                    pkt.trace = CarryTrace { fresh: false, turn_mark: carrier.turns };
                    break;
                }
                RelayDecision::Transmit => {
                    let snap = snap.get_or_insert_with(|| Snapshot::new(&positions));
                    let outcome =
                        handshake_disk(holder, pkt.dest_pos, snap, &chan, &crb, self.sim.selector.as_ref(), &mut self.handshake_rng);
                    match outcome {
                        HandshakeOutcome::Delivered => {
                            self.count_attempt(&mut pkt, false, t);
                            self.positions = positions;
                            self.deliver(pkt, t);
                            return;
                        }
                        HandshakeOutcome::Relayed(next) => {
                            self.count_attempt(&mut pkt, false, t);
                            self.hand_over(&mut pkt, holder, next, t);
                            holder = next;
                            chain += 1;
                            if !self.cfg.zero_time_handshake || chain > self.cfg.nodes {
                                break;
                            }
                        }
                        HandshakeOutcome::Failed => {
                            self.count_attempt(&mut pkt, true, t);
                            break;
                        }
                    }
                }
            }
        }
        self.positions = positions;
        self.single = Some((holder, pkt));
    }

    fn sinr_slot(&mut self, t: u64) -> Result<(), RunError> {
        let Channel::Sinr(chan) = self.channel else { unreachable!() };
        let crb = self.cfg.crb;
        let mut senders: Vec<(usize, usize)> = Vec::new();
        let mut eligible: Vec<usize> = Vec::new();
        for (node, buffer) in self.buffers.iter_mut().enumerate() {
            if buffer.is_empty() {
                continue;
            }
            let carrier = &self.walkers[node];
            eligible.clear();
            for (k, pkt) in buffer.iter_mut().enumerate() {
                match decide(carrier, pkt, &crb, false) {
                    RelayDecision::Carry => pkt.trace = CarryTrace { fresh: false, turn_mark: carrier.turns },
                    RelayDecision::Transmit => eligible.push(k),
                    RelayDecision::Deliver => unreachable!("SINR carriers have no range test"),
                }
            }
            if let Some(k) = select_packet_to_send(buffer, &eligible, carrier.pos) {
                senders.push((node, k));
            }
        }
        if senders.is_empty() {
            return Ok(());
        }

        let requests: Vec<(usize, Point)> = senders.iter().map(|&(i, k)| (i, self.buffers[i][k].dest_pos)).collect();
        let outcomes = {
            let snap = Snapshot::new(&self.positions);
            resolve_slot_sinr(&snap, &requests, &chan, &crb, self.sim.selector.as_ref(), &mut self.handshake_rng)?
        };

        let mut incoming: Vec<(usize, Packet)> = Vec::new();
        for (&(node, k), outcome) in senders.iter().zip(outcomes) {
            match outcome {
                HandshakeOutcome::Failed => {
                    count_attempt(&mut self.report, self.cfg.warmup_slots, &mut self.buffers[node][k], true, t);
                }
                HandshakeOutcome::Delivered => {
                    let mut pkt = self.buffers[node].swap_remove(k);
                    self.count_attempt(&mut pkt, false, t);
                    self.deliver(pkt, t);
                }
                HandshakeOutcome::Relayed(next) => {
                    let mut pkt = self.buffers[node].swap_remove(k);
                    self.count_attempt(&mut pkt, false, t);
                    self.hand_over(&mut pkt, node, next, t);
                    incoming.push((next, pkt));
                }
            }
        }
        for (node, pkt) in incoming {
            self.buffers[node].push(pkt);
        }
        Ok(())
    }

    fn finish(mut self) -> Result<RunReport, RunError> {
        let warm = self.cfg.warmup_slots;
        let in_flight: Vec<&Packet> = self.single.iter().map(|(_, p)| p).chain(self.buffers.iter().flatten()).collect();
        let r = &mut self.report;
        r.total_in_flight = in_flight.len() as u64;
        r.in_flight_count = in_flight.iter().filter(|p| p.created_at >= warm).count() as u64;
        r.slots_simulated = self.slots_simulated;
        r.measurement_slots = self.slots_simulated.saturating_sub(warm);
        r.lambda_n = if r.measurement_slots == 0 { 0.0 } else { r.delivered_count as f64 / (r.nodes as f64 * r.measurement_slots as f64) };
        for (generated, delivered, in_flight) in
            [(r.total_generated, r.total_delivered, r.total_in_flight), (r.generated_count, r.delivered_count, r.in_flight_count)]
        {
            if generated != delivered + in_flight {
                return Err(RunError::Conservation { generated, delivered, in_flight });
            }
        }
        Ok(self.report)
    }
}

fn count_attempt(report: &mut RunReport, warmup: u64, pkt: &mut Packet, failed: bool, t: u64) {
    pkt.attempts += 1;
    if t >= warmup {
        report.handshake_attempts += 1;
        if failed {
            report.failed_handshake_count += 1;
        }
    }
}

//! Constrained relative bearing: the carry-or-relay rule and the two
//! handshake variants.
//!
//! A carrier keeps a packet while its relative bearing toward the
//! packet's destination stays below the carry angle `θ_c`. Once it does
//! not, the carrier calls for a relay, and any mobile node inside the
//! emission cone (half-angle `θ_e`, axis on the bearing vector) that can
//! hear the call may accept. The destination, when it can hear the call,
//! always wins.
//!
//! Both handshakes are pure over a per-slot [`Snapshot`] and an explicit
//! random stream. The engine applies the outcomes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelError, DiskChannel, SinrChannel};
use crate::geometry::{in_emission_cone, relative_bearing, Point};
use crate::grid::SpatialGrid;
use crate::mobility::Walker;
use crate::SimRng;

use rand::Rng;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrbError {
    #[error("carry angle must lie in (0, π/2), got {0}")]
    CarryAngle(f64),
    #[error("emission half-angle must lie in (0, π], got {0}")]
    EmissionAngle(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbParams {
    /// `θ_c`: largest relative bearing under which a carrier keeps a packet.
    pub carry_angle: f64,
    /// `θ_e`: half-angle of the emission cone.
    pub emission_angle: f64,
}

impl Default for CrbParams {
    fn default() -> Self {
        CrbParams { carry_angle: FRAC_PI_6, emission_angle: FRAC_PI_6 }
    }
}

impl CrbParams {
    pub fn new(carry_angle: f64, emission_angle: f64) -> Result<Self, CrbError> {
        let p = CrbParams { carry_angle, emission_angle };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CrbError> {
        if !(self.carry_angle > 0.0 && self.carry_angle < FRAC_PI_2) {
            return Err(CrbError::CarryAngle(self.carry_angle));
        }
        if !(self.emission_angle > 0.0 && self.emission_angle <= PI) {
            return Err(CrbError::EmissionAngle(self.emission_angle));
        }
        Ok(())
    }
}

/// Bookkeeping used to attribute relay changes to a cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarryTrace {
    /// No carry decision yet since the current carrier took the packet.
    pub fresh: bool,
    /// Carrier's Poisson turn count at the last slot it chose to carry.
    pub turn_mark: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub source: usize,
    /// Fixed destination node.
    pub dest: usize,
    pub dest_pos: Point,
    pub created_at: u64,
    /// Successful handoffs, counting the final delivery.
    pub hops: u32,
    /// Handshake attempts, successful or not.
    pub attempts: u32,
    pub delivered_at: Option<u64>,
    /// Source-to-destination distance at creation.
    pub initial_distance: f64,
    pub turn_relays: u32,
    pub pass_over_relays: u32,
    pub trace: CarryTrace,
}

impl Packet {
    pub fn new(id: u64, source: usize, dest: usize, dest_pos: Point, created_at: u64, carrier: &Walker) -> Self {
        Packet {
            id,
            source,
            dest,
            dest_pos,
            created_at,
            hops: 0,
            attempts: 0,
            delivered_at: None,
            initial_distance: carrier.pos.distance(dest_pos),
            turn_relays: 0,
            pass_over_relays: 0,
            trace: CarryTrace { fresh: true, turn_mark: carrier.turns },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayDecision {
    Deliver,
    Carry,
    Transmit,
}

/// The three-branch rule. A carrier sitting exactly on the destination
/// point has no bearing and transmits.
pub fn decide(carrier: &Walker, pkt: &Packet, params: &CrbParams, in_dest_range: bool) -> RelayDecision {
    if in_dest_range {
        return RelayDecision::Deliver;
    }
    match relative_bearing(carrier.heading, carrier.pos, pkt.dest_pos) {
        Some(b) if b.value() < params.carry_angle => RelayDecision::Carry,
        _ => RelayDecision::Transmit,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandshakeOutcome {
    Delivered,
    Relayed(usize),
    Failed,
}

pub struct SelectionContext<'a> {
    pub sender: Point,
    pub dest: Point,
    pub positions: &'a [Point],
}

/// Picks the next relay among the nodes that accepted a call.
///
/// `candidates` is sorted by node id and never empty.
pub trait RelaySelector: Send + Sync {
    fn select(&self, ctx: &SelectionContext<'_>, candidates: &[usize], rng: &mut SimRng) -> usize;
}

/// Each accepting node is equally likely to reply first.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformSelector;

impl RelaySelector for UniformSelector {
    fn select(&self, _ctx: &SelectionContext<'_>, candidates: &[usize], rng: &mut SimRng) -> usize {
        candidates[rng.random_range(0..candidates.len())]
    }
}

/// Positions of every mobile node at one slot boundary, bucketed for
/// range queries.
pub struct Snapshot<'a> {
    positions: &'a [Point],
    grid: SpatialGrid,
}

impl<'a> Snapshot<'a> {
    pub fn new(positions: &'a [Point]) -> Self {
        Snapshot { positions, grid: SpatialGrid::build(positions, 2.0) }
    }

    pub fn positions(&self) -> &'a [Point] {
        self.positions
    }
}

/// Mobile nodes transmitting in the current slot.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    nodes: Vec<usize>,
    mask: Vec<bool>,
}

impl ActiveSet {
    pub fn new(n: usize, nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; n];
        let mut list: Vec<usize> = nodes.into_iter().collect();
        list.sort_unstable();
        list.dedup();
        for &i in &list {
            mask[i] = true;
        }
        ActiveSet { nodes: list, mask }
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    #[inline]
    pub fn contains(&self, node: usize) -> bool {
        self.mask.get(node).copied().unwrap_or(false)
    }
}

/// Mobile nodes within radio range of `sender` and inside its emission cone.
pub fn disk_candidates(sender: usize, dest_pos: Point, snap: &Snapshot<'_>, chan: &DiskChannel, params: &CrbParams) -> Vec<usize> {
    let origin = snap.positions[sender];
    let mut out = Vec::new();
    snap.grid.for_each_near(origin, chan.radius(), |j| {
        let p = snap.positions[j];
        if j != sender && chan.can_receive(origin.distance(p)) && in_emission_cone(origin, dest_pos, p, params.emission_angle) {
            out.push(j);
        }
    });
    out.sort_unstable();
    out
}

/// Handshake under the unit disk model.
pub fn handshake_disk(
    sender: usize,
    dest_pos: Point,
    snap: &Snapshot<'_>,
    chan: &DiskChannel,
    params: &CrbParams,
    selector: &dyn RelaySelector,
    rng: &mut SimRng,
) -> HandshakeOutcome {
    let origin = snap.positions[sender];
    if chan.can_receive(origin.distance(dest_pos)) {
        return HandshakeOutcome::Delivered;
    }
    let candidates = disk_candidates(sender, dest_pos, snap, chan, params);
    pick(origin, dest_pos, snap, &candidates, selector, rng)
}

/// Idle mobile nodes in the emission cone that decode `sender` against every
/// other active transmitter.
pub fn sinr_candidates(
    sender: usize,
    dest_pos: Point,
    snap: &Snapshot<'_>,
    active: &ActiveSet,
    chan: &SinrChannel,
    params: &CrbParams,
) -> Result<Vec<usize>, ChannelError> {
    let origin = snap.positions[sender];
    let mut interferers = interferer_positions(sender, snap, active);
    interferers.sort_by(|a, b| a.distance_sq(origin).total_cmp(&b.distance_sq(origin)));
    let radius = pruning_radius(origin, &interferers, chan).min(2.0);
    // Decoding needs the signal to beat each interferer on its own, so a
    // receiver at distance d from the sender must sit farther than K^{1/α}·d
    // from every interferer. This rejects most nodes without evaluating any
    // path gain.
    let dominance = chan.threshold.powf(2.0 / chan.exponent);
    let cone = ConeFilter::new(origin, dest_pos, params.emission_angle);
    let (x0, x1, y0, y1) = cone.bounding_box(radius);

    let mut out = Vec::new();
    let mut failure = None;
    snap.grid.for_each_in_box(x0, x1, y0, y1, |j| {
        if failure.is_some() || j == sender || active.contains(j) {
            return;
        }
        let p = snap.positions[j];
        let d2 = origin.distance_sq(p);
        if d2 >= radius * radius || !cone.maybe_inside(p) {
            return;
        }
        if interferers.iter().any(|k| k.distance_sq(p) <= dominance * d2) {
            return;
        }
        if !in_emission_cone(origin, dest_pos, p, params.emission_angle) {
            return;
        }
        match chan.decodes(origin, p, &interferers) {
            Ok(true) => out.push(j),
            Ok(false) => {}
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    out.sort_unstable();
    Ok(out)
}

/// Cheap, slightly permissive stand-in for [`in_emission_cone`] used to
/// skip most nodes before the exact test.
struct ConeFilter {
    apex: Point,
    axis: (f64, f64),
    half_angle: f64,
    cos_slack: f64,
}

impl ConeFilter {
    fn new(apex: Point, toward: Point, half_angle: f64) -> Self {
        let (ax, ay) = (toward.x - apex.x, toward.y - apex.y);
        let len = (ax * ax + ay * ay).sqrt();
        let axis = if len > 0.0 { (ax / len, ay / len) } else { (1.0, 0.0) };
        ConeFilter { apex, axis, half_angle, cos_slack: half_angle.cos() - 1e-9 }
    }

    #[inline]
    fn maybe_inside(&self, p: Point) -> bool {
        let (vx, vy) = (p.x - self.apex.x, p.y - self.apex.y);
        let dot = vx * self.axis.0 + vy * self.axis.1;
        dot >= self.cos_slack * (vx * vx + vy * vy).sqrt()
    }

    /// Axis-aligned box around the sector of radius `r`.
    fn bounding_box(&self, r: f64) -> (f64, f64, f64, f64) {
        let a = self.apex;
        if self.half_angle >= FRAC_PI_2 {
            return (a.x - r, a.x + r, a.y - r, a.y + r);
        }
        let (ux, uy) = self.axis;
        let (s, c) = self.half_angle.sin_cos();
        let mut xs = vec![a.x, a.x + r * (ux * c - uy * s), a.x + r * (ux * c + uy * s)];
        let mut ys = vec![a.y, a.y + r * (uy * c + ux * s), a.y + r * (uy * c - ux * s)];
        // the arc reaches an axis extreme when that direction is inside the cone
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            if dx * ux + dy * uy >= c {
                xs.push(a.x + r * dx);
                ys.push(a.y + r * dy);
            }
        }
        let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min) - 1e-9;
        let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1e-9;
        (lo(&xs), hi(&xs), lo(&ys), hi(&ys))
    }
}

/// Handshake under the SINR model. The destination replies with priority
/// whenever it decodes the call.
#[allow(clippy::too_many_arguments)]
pub fn handshake_sinr(
    sender: usize,
    dest_pos: Point,
    snap: &Snapshot<'_>,
    active: &ActiveSet,
    chan: &SinrChannel,
    params: &CrbParams,
    selector: &dyn RelaySelector,
    rng: &mut SimRng,
) -> Result<HandshakeOutcome, ChannelError> {
    let origin = snap.positions[sender];
    let interferers = interferer_positions(sender, snap, active);
    if chan.can_receive(origin, dest_pos, interferers.iter().copied())? {
        return Ok(HandshakeOutcome::Delivered);
    }
    let candidates = sinr_candidates(sender, dest_pos, snap, active, chan, params)?;
    Ok(pick(origin, dest_pos, snap, &candidates, selector, rng))
}

fn interferer_positions(sender: usize, snap: &Snapshot<'_>, active: &ActiveSet) -> Vec<Point> {
    active.nodes.iter().filter(|&&k| k != sender).map(|&k| snap.positions[k]).collect()
}

fn pruning_radius(origin: Point, interferers: &[Point], chan: &SinrChannel) -> f64 {
    let ds: Vec<f64> = interferers.iter().map(|p| p.distance(origin)).collect();
    chan.reception_radius_bound(&ds)
}

fn pick(
    origin: Point,
    dest_pos: Point,
    snap: &Snapshot<'_>,
    candidates: &[usize],
    selector: &dyn RelaySelector,
    rng: &mut SimRng,
) -> HandshakeOutcome {
    if candidates.is_empty() {
        return HandshakeOutcome::Failed;
    }
    let ctx = SelectionContext { sender: origin, dest: dest_pos, positions: snap.positions };
    HandshakeOutcome::Relayed(selector.select(&ctx, candidates, rng))
}

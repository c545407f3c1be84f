//! What a run hands back.

use serde::{Deserialize, Serialize};

/// One delivered packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub packet_id: u64,
    pub source: usize,
    pub created_at: u64,
    /// Slots from creation to reception at the destination.
    pub delay: u64,
    pub hops: u32,
    pub attempts: u32,
    /// Source-to-destination distance at creation.
    pub initial_distance: f64,
    pub turn_relays: u32,
    pub pass_over_relays: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayCounts {
    pub turn: u64,
    pub pass_over: u64,
}

impl RelayCounts {
    pub fn total(&self) -> u64 {
        self.turn + self.pass_over
    }
}

/// Outcome of one run.
///
/// Per-packet figures cover the measurement cohort: packets created at or
/// after the end of warm-up. Handshake and relay counters cover every
/// handshake that happened during the measurement window. The `total_*`
/// fields count everything since slot 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub nodes: usize,
    pub seed: u64,
    pub delivered: Vec<DeliveryRecord>,
    pub generated_count: u64,
    pub delivered_count: u64,
    pub in_flight_count: u64,
    pub failed_handshake_count: u64,
    pub handshake_attempts: u64,
    pub relay_changes: RelayCounts,
    /// Cohort deliveries per slot per node.
    pub lambda_n: f64,
    pub measurement_slots: u64,
    /// Slots actually simulated; a single-packet run stops once its packet
    /// arrives.
    pub slots_simulated: u64,
    pub total_generated: u64,
    pub total_delivered: u64,
    pub total_in_flight: u64,
}

fn mean_of(records: &[DeliveryRecord], f: impl Fn(&DeliveryRecord) -> f64) -> Option<f64> {
    if records.is_empty() {
        None
    } else {
        Some(records.iter().map(f).sum::<f64>() / records.len() as f64)
    }
}

impl RunReport {
    pub fn mean_delay(&self) -> Option<f64> {
        mean_of(&self.delivered, |r| r.delay as f64)
    }

    /// Mean hops per delivered packet, `h_n`.
    pub fn mean_hops(&self) -> Option<f64> {
        mean_of(&self.delivered, |r| r.hops as f64)
    }

    /// Mean handshake attempts per delivered packet, `t_n`.
    pub fn mean_attempts(&self) -> Option<f64> {
        mean_of(&self.delivered, |r| r.attempts as f64)
    }

    /// Fraction of measured handshakes that found nobody to hand off to.
    pub fn failure_rate(&self) -> Option<f64> {
        (self.handshake_attempts > 0).then(|| self.failed_handshake_count as f64 / self.handshake_attempts as f64)
    }
}

//! Run configuration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{self, AnalysisError};
use crate::channel::{disk_radius, ChannelError, DiskChannel, SinrChannel};
use crate::crb::{CrbError, CrbParams};
use crate::mobility::{MobilityError, MobilityParams};

/// Which of the two experiment families a run belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One source and one fixed destination, unit disk reception, no
    /// interference.
    DiskSinglePacket,
    /// Every mobile node generates traffic toward its own fixed destination;
    /// receptions obey the SINR rule.
    SinrFullTraffic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelConfig {
    /// Unit disk. The radius follows from `beta0` and the node count unless
    /// given explicitly.
    Disk {
        beta0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    Sinr(SinrChannel),
}

impl ChannelConfig {
    pub fn disk_default() -> Self {
        ChannelConfig::Disk { beta0: 40.0, radius: None }
    }

    pub fn sinr_default() -> Self {
        ChannelConfig::Sinr(SinrChannel::default())
    }
}

/// Constants of the offered-load formula `1 / (β₁ ln(n/β₂) ln ln n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficParams {
    /// Infinite `beta1` disables traffic.
    #[serde(with = "crate::serde_float")]
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams { beta1: 500.0, beta2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("at least 2 mobile nodes are required, got {0}")]
    TooFewNodes(usize),
    #[error("max_slots ({max}) must exceed warmup_slots ({warmup})")]
    Horizon { max: u64, warmup: u64 },
    #[error("{mode:?} mode cannot use a {channel} channel")]
    ModeChannelMismatch { mode: Mode, channel: &'static str },
    #[error("initial state has {walkers} walkers and {destinations} destinations, which does not fit the configuration")]
    InitialState { walkers: usize, destinations: usize },
    #[error("{0} is only meaningful in disk single-packet mode")]
    DiskOnly(&'static str),
    #[error("per-node traffic rate must be below 1, got {0}")]
    TrafficRate(f64),
    #[error("initial distance must lie in (0, √2), got {0}")]
    InitialDistance(f64),
    #[error(transparent)]
    Traffic(#[from] AnalysisError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Crb(#[from] CrbError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    /// Number of mobile nodes.
    pub nodes: usize,
    pub mode: Mode,
    pub mobility: MobilityParams,
    pub crb: CrbParams,
    pub channel: ChannelConfig,
    pub traffic: TrafficParams,
    /// Total slots simulated, warm-up included.
    pub max_slots: u64,
    /// Slots simulated before measurement starts.
    pub warmup_slots: u64,
    pub seed: u64,
    /// Resolve a whole chain of handoffs inside one slot instead of
    /// spending a slot per handshake. Disk mode only.
    #[serde(default)]
    pub zero_time_handshake: bool,
    /// Place the destination at this distance from the source. Disk mode
    /// only; otherwise the destination is uniform on the square.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_distance: Option<f64>,
}

/// One map crossing at speed `speed`, rounded up.
pub fn default_warmup(speed: f64) -> u64 {
    (2.0 / speed).ceil() as u64
}

impl WorldConfig {
    /// Single-packet disk run with the reference parameters.
    pub fn disk_single_packet(nodes: usize, seed: u64) -> Self {
        let speed = 0.005;
        let warmup = default_warmup(speed);
        WorldConfig {
            nodes,
            mode: Mode::DiskSinglePacket,
            mobility: MobilityParams { speed, turn_rate: 0.1 },
            crb: CrbParams::default(),
            channel: ChannelConfig::disk_default(),
            traffic: TrafficParams::default(),
            // generous: the delay bound for the longest diagonal is ~330 slots
            max_slots: warmup + (20.0 / speed) as u64,
            warmup_slots: warmup,
            seed,
            zero_time_handshake: false,
            initial_distance: None,
        }
    }

    /// Full-traffic SINR run with the reference parameters.
    pub fn sinr_full_traffic(nodes: usize, seed: u64) -> Self {
        let speed = 0.01;
        let warmup = default_warmup(speed);
        WorldConfig {
            nodes,
            mode: Mode::SinrFullTraffic,
            mobility: MobilityParams { speed, turn_rate: 0.1 },
            crb: CrbParams::default(),
            channel: ChannelConfig::sinr_default(),
            traffic: TrafficParams::default(),
            max_slots: warmup + 50_000,
            warmup_slots: warmup,
            seed,
            zero_time_handshake: false,
            initial_distance: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.nodes < 2 {
            return Err(ConfigError::TooFewNodes(self.nodes));
        }
        if self.max_slots <= self.warmup_slots {
            return Err(ConfigError::Horizon { max: self.max_slots, warmup: self.warmup_slots });
        }
        self.mobility.validate()?;
        self.crb.validate()?;
        match (self.mode, &self.channel) {
            (Mode::DiskSinglePacket, ChannelConfig::Disk { .. }) => {
                self.disk_channel()?;
            }
            (Mode::SinrFullTraffic, ChannelConfig::Sinr(chan)) => {
                chan.validate()?;
                if self.zero_time_handshake {
                    return Err(ConfigError::DiskOnly("zero_time_handshake"));
                }
                if self.initial_distance.is_some() {
                    return Err(ConfigError::DiskOnly("initial_distance"));
                }
                let rate = self.traffic_rate()?;
                if rate >= 1.0 {
                    return Err(ConfigError::TrafficRate(rate));
                }
            }
            (mode, ChannelConfig::Disk { .. }) => return Err(ConfigError::ModeChannelMismatch { mode, channel: "disk" }),
            (mode, ChannelConfig::Sinr(_)) => return Err(ConfigError::ModeChannelMismatch { mode, channel: "SINR" }),
        }
        if let Some(r) = self.initial_distance {
            if !(r > 0.0 && r < std::f64::consts::SQRT_2) {
                return Err(ConfigError::InitialDistance(r));
            }
        }
        Ok(())
    }

    /// The disk channel this configuration resolves to.
    pub fn disk_channel(&self) -> Result<DiskChannel, ConfigError> {
        match self.channel {
            ChannelConfig::Disk { radius: Some(r), .. } => Ok(DiskChannel::new(r)?),
            ChannelConfig::Disk { beta0, radius: None } => Ok(DiskChannel::new(disk_radius(self.nodes as f64, beta0)?)?),
            ChannelConfig::Sinr(_) => Err(ConfigError::ModeChannelMismatch { mode: self.mode, channel: "SINR" }),
        }
    }

    /// Packets generated per node per slot.
    pub fn traffic_rate(&self) -> Result<f64, ConfigError> {
        Ok(analysis::traffic_rate(self.nodes as f64, self.traffic.beta1, self.traffic.beta2)?)
    }

    pub fn measurement_slots(&self) -> u64 {
        self.max_slots - self.warmup_slots
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_configs_validate() {
        WorldConfig::disk_single_packet(10_000, 1).validate().unwrap();
        WorldConfig::sinr_full_traffic(1000, 1).validate().unwrap();
        assert_eq!(WorldConfig::disk_single_packet(100, 1).warmup_slots, 400);
        assert_eq!(WorldConfig::sinr_full_traffic(100, 1).warmup_slots, 200);
    }

    #[test]
    fn mode_channel_mismatch_is_rejected() {
        let mut c = WorldConfig::disk_single_packet(1000, 1);
        c.channel = ChannelConfig::sinr_default();
        assert!(matches!(c.validate(), Err(ConfigError::ModeChannelMismatch { .. })));
        let mut c = WorldConfig::sinr_full_traffic(1000, 1);
        c.channel = ChannelConfig::disk_default();
        assert!(matches!(c.validate(), Err(ConfigError::ModeChannelMismatch { .. })));
    }

    #[test]
    fn structural_checks() {
        let mut c = WorldConfig::disk_single_packet(1, 1);
        assert_eq!(c.validate(), Err(ConfigError::TooFewNodes(1)));
        c.nodes = 100;
        c.max_slots = c.warmup_slots;
        assert!(matches!(c.validate(), Err(ConfigError::Horizon { .. })));
        let mut c = WorldConfig::sinr_full_traffic(100, 1);
        c.zero_time_handshake = true;
        assert_eq!(c.validate(), Err(ConfigError::DiskOnly("zero_time_handshake")));
    }

    #[test]
    fn saturating_traffic_is_rejected() {
        let mut c = WorldConfig::sinr_full_traffic(100, 1);
        c.traffic.beta1 = 0.01;
        assert!(matches!(c.validate(), Err(ConfigError::TrafficRate(_))));
    }

    #[test]
    fn json_round_trip_keeps_infinite_beta1() {
        let mut c = WorldConfig::sinr_full_traffic(100, 7);
        c.traffic.beta1 = f64::INFINITY;
        let text = serde_json::to_string(&c).unwrap();
        let back: WorldConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}

//! Reception feasibility under the two interference backends.
//!
//! The unit disk backend connects two nodes iff they are closer than a
//! radius `r_n`. The SINR backend uses power-law path loss `d^{-α}` and
//! accepts a reception iff the signal-to-interference-plus-noise ratio
//! strictly exceeds the threshold `K`. Logarithms are natural throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("ln ln n must be positive (n > e), got n = {0}")]
    NodeCountDomain(f64),
    #[error("beta0 must be positive, got {0}")]
    Beta0(f64),
    #[error("disk radius must lie in (0, 1), got {0}")]
    Radius(f64),
    #[error("path gain is singular at zero distance")]
    Singular,
    #[error("invalid SINR parameter {name} = {value}")]
    SinrParam { name: &'static str, value: f64 },
}

/// `r_n = sqrt(β₀ ln ln n / (π n))`.
pub fn disk_radius(n: f64, beta0: f64) -> Result<f64, ChannelError> {
    if !(beta0 > 0.0 && beta0.is_finite()) {
        return Err(ChannelError::Beta0(beta0));
    }
    let lnln = n.ln().ln();
    if !(lnln > 0.0) || !n.is_finite() {
        return Err(ChannelError::NodeCountDomain(n));
    }
    Ok((beta0 * lnln / (PI * n)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskChannel {
    radius: f64,
}

impl DiskChannel {
    pub fn new(radius: f64) -> Result<Self, ChannelError> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(ChannelError::Radius(radius));
        }
        Ok(DiskChannel { radius })
    }

    /// Channel for `n` nodes with neighbor constant `beta0`.
    pub fn for_nodes(n: usize, beta0: f64) -> Result<Self, ChannelError> {
        DiskChannel::new(disk_radius(n as f64, beta0)?)
    }

    #[inline]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn can_receive(&self, d: f64) -> bool {
        d < self.radius
    }
}

/// Strict inequality: a node exactly at `r_n` is out of range.
#[inline]
pub fn disk_can_receive(d: f64, chan: &DiskChannel) -> bool {
    chan.can_receive(d)
}

/// `d^{-α}`.
#[inline]
pub fn path_gain(d: f64, alpha: f64) -> Result<f64, ChannelError> {
    if d <= 0.0 {
        return Err(ChannelError::Singular);
    }
    // half-integer exponents avoid the general power routine
    let twice = 2.0 * alpha;
    if twice.fract() == 0.0 && twice <= 16.0 {
        Ok(1.0 / d.sqrt().powi(twice as i32))
    } else {
        Ok(d.powf(-alpha))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrChannel {
    /// SINR threshold `K`.
    pub threshold: f64,
    /// Attenuation exponent `α`.
    pub exponent: f64,
    /// Background noise power `N₀`.
    pub noise: f64,
    /// Nominal transmit power, equal for every node.
    pub power: f64,
}

impl Default for SinrChannel {
    fn default() -> Self {
        SinrChannel { threshold: 1.0, exponent: 2.5, noise: 0.0, power: 1.0 }
    }
}

impl SinrChannel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |name, value| Err(ChannelError::SinrParam { name, value });
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return bad("threshold", self.threshold);
        }
        if !(self.exponent > 2.0 && self.exponent.is_finite()) {
            return bad("exponent", self.exponent);
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad("noise", self.noise);
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad("power", self.power);
        }
        Ok(())
    }

    /// SINR at `rx` for a transmission from `tx`, with every point in
    /// `interferers` transmitting at the same power. Infinite when there is
    /// neither noise nor interference.
    pub fn sinr<I>(&self, tx: Point, rx: Point, interferers: I) -> Result<f64, ChannelError>
    where
        I: IntoIterator<Item = Point>,
    {
        let signal = self.power * path_gain(tx.distance(rx), self.exponent)?;
        let mut denom = self.noise;
        for k in interferers {
            denom += self.power * path_gain(k.distance(rx), self.exponent)?;
        }
        if denom == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(signal / denom)
    }

    pub fn can_receive<I>(&self, tx: Point, rx: Point, interferers: I) -> Result<bool, ChannelError>
    where
        I: IntoIterator<Item = Point>,
    {
        Ok(self.sinr(tx, rx, interferers)? > self.threshold)
    }

    /// Same answer as [`can_receive`](Self::can_receive), but stops summing
    /// interference once reception is already ruled out. Listing the
    /// strongest interferers first makes that happen sooner.
    pub fn decodes(&self, tx: Point, rx: Point, interferers: &[Point]) -> Result<bool, ChannelError> {
        let signal = self.power * path_gain(tx.distance(rx), self.exponent)?;
        let mut denom = self.noise;
        for k in interferers {
            if denom > 0.0 && signal / denom <= self.threshold {
                return Ok(false);
            }
            denom += self.power * path_gain(k.distance(rx), self.exponent)?;
        }
        if denom == 0.0 {
            return Ok(true);
        }
        Ok(signal / denom > self.threshold)
    }

    /// Distance from `tx` beyond which no receiver can decode it, given the
    /// distances from `tx` to every other concurrent transmitter.
    ///
    /// A receiver at distance `d` from `tx` sees each interferer `k` no
    /// farther than `s_k + d`, so its SINR is at most
    /// `d^{-α} / (N₀/P + Σ (s_k + d)^{-α})`. That upper bound decreases in
    /// `d`; the returned radius is where it falls to `K`. Returns infinity
    /// when the bound never drops that low.
    pub fn reception_radius_bound(&self, other_tx_distances: &[f64]) -> f64 {
        let k = self.threshold;
        let a = self.exponent;
        let noise = self.noise / self.power;
        // decodable at distance d only if excess(d) < 1
        let excess = |d: f64| -> f64 {
            let ratio: f64 = other_tx_distances.iter().map(|&s| (d / (s + d)).powf(a)).sum();
            k * (noise * d.powf(a) + ratio)
        };
        let mut hi = 1.0;
        while excess(hi) < 1.0 {
            hi *= 2.0;
            if hi > 1e6 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        // `hi` always fails the test, so stopping early only loosens the bound
        for _ in 0..32 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Whether `rx` decodes `tx` against `interferers` (which must exclude both).
pub fn sinr_can_receive(tx: Point, rx: Point, interferers: &[Point], chan: &SinrChannel) -> Result<bool, ChannelError> {
    chan.can_receive(tx, rx, interferers.iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn radius_examples() {
        assert_relative_eq!(disk_radius(1e6, 40.0).unwrap(), 0.005_782_094_864_109_986, max_relative = 1e-12);
        let ee = std::f64::consts::E.powf(std::f64::consts::E);
        assert_relative_eq!(disk_radius(ee, PI).unwrap(), 0.256_881_365_313_470_2, max_relative = 1e-12);
        for n in [16.0, 100.0, 1e4, 1e7] {
            assert!(disk_radius(4.0 * n, 40.0).unwrap() < disk_radius(n, 40.0).unwrap());
        }
    }

    #[test]
    fn radius_identity() {
        for n in [20.0, 1e3, 1e5, 2e6] {
            let r = disk_radius(n, 40.0).unwrap();
            assert_relative_eq!(n * PI * r * r / n.ln().ln(), 40.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn radius_domain() {
        assert!(matches!(disk_radius(2.0, 40.0), Err(ChannelError::NodeCountDomain(_))));
        assert!(matches!(disk_radius(std::f64::consts::E, 40.0), Err(ChannelError::NodeCountDomain(_))));
        assert!(matches!(disk_radius(100.0, 0.0), Err(ChannelError::Beta0(_))));
    }

    #[test]
    fn disk_reception_is_strict() {
        let c = DiskChannel::new(0.1).unwrap();
        assert!(disk_can_receive(0.0, &c));
        assert!(!disk_can_receive(0.1, &c));
        assert!(disk_can_receive(0.05, &c));
        assert!(DiskChannel::new(1.0).is_err());
    }

    #[test]
    fn gain_examples() {
        assert_eq!(path_gain(1.0, 2.5).unwrap(), 1.0);
        assert_relative_eq!(path_gain(0.1, 2.5).unwrap(), 316.227_766_016_837_9, max_relative = 1e-12);
        assert_relative_eq!(path_gain(0.5, 2.5).unwrap(), 5.656_854_249_492_38, max_relative = 1e-12);
        assert_eq!(path_gain(0.0, 2.5), Err(ChannelError::Singular));
    }

    #[test]
    fn sinr_examples() {
        let c = SinrChannel::default();
        let rx = Point::new(0.5, 0.5);
        assert!(sinr_can_receive(Point::new(0.6, 0.5), rx, &[], &c).unwrap());

        let near = Point::new(0.6, 0.5);
        let far = Point::new(0.5, 0.7);
        assert_relative_eq!(c.sinr(near, rx, [far]).unwrap(), 5.656_854_249_492_38, max_relative = 1e-12);
        assert!(sinr_can_receive(near, rx, &[far], &c).unwrap());
        assert_relative_eq!(c.sinr(far, rx, [near]).unwrap(), 0.176_776_695_296_636_9, max_relative = 1e-12);
        assert!(!sinr_can_receive(far, rx, &[near], &c).unwrap());

        assert_eq!(sinr_can_receive(near, rx, &[rx], &c), Err(ChannelError::Singular));
    }

    #[test]
    fn sinr_validation() {
        assert!(SinrChannel::default().validate().is_ok());
        let mut c = SinrChannel { exponent: 2.0, ..Default::default() };
        assert!(c.validate().is_err());
        c = SinrChannel { threshold: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn radius_bound_lone_transmitter_is_unbounded() {
        assert_eq!(SinrChannel::default().reception_radius_bound(&[]), f64::INFINITY);
        // one equal-power interferer at K = 1 never pushes the bound below 1
        assert_eq!(SinrChannel::default().reception_radius_bound(&[0.1]), f64::INFINITY);
    }

    #[test]
    fn radius_bound_single_interferer_closed_form() {
        // K > 1, one interferer at s: d/(s+d) = K^{-1/α} ⇒ d = s·c/(1-c)
        let ch = SinrChannel { threshold: 4.0, ..Default::default() };
        let c = 4f64.powf(-1.0 / 2.5);
        assert_relative_eq!(ch.reception_radius_bound(&[0.2]), 0.2 * c / (1.0 - c), max_relative = 1e-8);
    }

    #[test]
    fn radius_bound_with_noise_is_finite() {
        let ch = SinrChannel { noise: 1.0, ..Default::default() };
        // d^{-α} > K N₀ ⇒ d < 1
        assert_abs_diff_eq!(ch.reception_radius_bound(&[]), 1.0, epsilon = 1e-8);
    }
}

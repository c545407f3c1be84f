//! Closed-form bounds, traffic-rate formulas and normalized diagnostics.
//!
//! The bounds describe a packet created at distance `r` from its
//! destination:
//!
//! * delivery delay: `r / (v cos θ_c)`
//! * relay changes caused by turns: `((π − θ_c)/θ_c) · (τ / (v cos θ_c)) · r`
//! * relay changes caused by passing over the destination:
//!   `(π tan θ_c / θ_c²) · ln(r / r_n)`
//!
//! Offered load per node is `ρ_n = 1 / (β₁ ln(n/β₂) ln ln n)`; normalized
//! metrics divide measured quantities by their predicted scaling factor so
//! that a flat curve over `n` confirms the scaling law.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{RunReport, WorldConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("carry angle must lie in (0, π/2), got {0}")]
    CarryAngle(f64),
    #[error("distance {r} is below the radio range {radius}")]
    InsideRange { r: f64, radius: f64 },
    #[error("traffic formula needs n/β₂ > 1 and ln ln n > 0 (n = {n}, β₂ = {beta2})")]
    TrafficDomain { n: f64, beta2: f64 },
    #[error("β₁ must be positive, got {0}")]
    Beta1(f64),
    #[error("efficiency must lie in (0, 1), got {0}")]
    Efficiency(f64),
    #[error("no packet was delivered; diagnostics are undefined")]
    NoDeliveries,
    #[error("no handshake was attempted")]
    NoAttempts,
}

fn check_carry(carry_angle: f64) -> Result<(), AnalysisError> {
    if carry_angle > 0.0 && carry_angle < FRAC_PI_2 {
        Ok(())
    } else {
        Err(AnalysisError::CarryAngle(carry_angle))
    }
}

/// Upper bound on delivery delay, in slots.
pub fn delay_bound(r: f64, speed: f64, carry_angle: f64) -> Result<f64, AnalysisError> {
    check_carry(carry_angle)?;
    Ok(r / (speed * carry_angle.cos()))
}

/// Upper bound on the expected number of relay changes caused by turns.
pub fn turn_relay_bound(r: f64, turn_rate: f64, speed: f64, carry_angle: f64) -> Result<f64, AnalysisError> {
    let relays_per_turn = (PI - carry_angle) / carry_angle;
    Ok(relays_per_turn * turn_rate * delay_bound(r, speed, carry_angle)?)
}

/// Upper bound on the expected number of relay changes caused by passing
/// over the destination.
pub fn passover_relay_bound(r: f64, radius: f64, carry_angle: f64) -> Result<f64, AnalysisError> {
    check_carry(carry_angle)?;
    if r < radius {
        return Err(AnalysisError::InsideRange { r, radius });
    }
    Ok(PI * carry_angle.tan() / (carry_angle * carry_angle) * (r / radius).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub r: f64,
    pub speed: f64,
    pub turn_rate: f64,
    pub carry_angle: f64,
    pub radius: f64,
}

/// Sum of the turn and pass-over bounds.
pub fn total_relay_bound(inputs: &BoundInputs) -> Result<f64, AnalysisError> {
    Ok(turn_relay_bound(inputs.r, inputs.turn_rate, inputs.speed, inputs.carry_angle)?
        + passover_relay_bound(inputs.r, inputs.radius, inputs.carry_angle)?)
}

/// `β₁ ln(n/β₂) ln ln n`, the predicted inverse per-node throughput.
pub fn scaling_factor(n: f64, beta1: f64, beta2: f64) -> Result<f64, AnalysisError> {
    if !(beta1 > 0.0) {
        return Err(AnalysisError::Beta1(beta1));
    }
    let log_ratio = (n / beta2).ln();
    let lnln = n.ln().ln();
    if !(log_ratio > 0.0 && lnln > 0.0) {
        return Err(AnalysisError::TrafficDomain { n, beta2 });
    }
    Ok(beta1 * log_ratio * lnln)
}

/// Packet generation rate per node per slot. An infinite `β₁` disables
/// traffic.
pub fn traffic_rate(n: f64, beta1: f64, beta2: f64) -> Result<f64, AnalysisError> {
    Ok(1.0 / scaling_factor(n, beta1, beta2)?)
}

/// Model throughput per node, `η ρ_n`.
pub fn capacity_model(n: f64, efficiency: f64, beta1: f64, beta2: f64) -> Result<f64, AnalysisError> {
    if !(efficiency > 0.0 && efficiency < 1.0) {
        return Err(AnalysisError::Efficiency(efficiency));
    }
    Ok(efficiency * traffic_rate(n, beta1, beta2)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingDiagnostics {
    pub m_rho: f64,
    pub m_lambda: f64,
    pub m_h: f64,
    pub m_t: f64,
    /// Capacity efficiency estimate; equals `m_lambda`.
    pub eta: f64,
}

/// Normalized metrics for one run.
pub fn normalize(report: &RunReport, config: &WorldConfig) -> Result<ScalingDiagnostics, AnalysisError> {
    let (h, t) = match (report.mean_hops(), report.mean_attempts()) {
        (Some(h), Some(t)) => (h, t),
        _ => return Err(AnalysisError::NoDeliveries),
    };
    normalize_values(config.nodes as f64, config.traffic.beta1, config.traffic.beta2, report.lambda_n, h, t)
}

/// Normalization on raw values; used for both single runs and averages.
pub fn normalize_values(
    n: f64,
    beta1: f64,
    beta2: f64,
    lambda: f64,
    hops: f64,
    attempts: f64,
) -> Result<ScalingDiagnostics, AnalysisError> {
    let factor = scaling_factor(n, beta1, beta2)?;
    let log_ratio = (n / beta2).ln();
    let rho = traffic_rate(n, beta1, beta2)?;
    let m_lambda = lambda * factor;
    Ok(ScalingDiagnostics { m_rho: rho * factor, m_lambda, m_h: hops / log_ratio, m_t: attempts / log_ratio, eta: m_lambda })
}

/// Fraction of handshakes in the measurement window that found no receiver.
pub fn empirical_failure_rate(report: &RunReport) -> Result<f64, AnalysisError> {
    if report.handshake_attempts == 0 {
        return Err(AnalysisError::NoAttempts);
    }
    Ok(report.failed_handshake_count as f64 / report.handshake_attempts as f64)
}

/// Independent check on the pass-over distance: march a straight-moving
/// carrier from distance `r` with bearing `theta` in increments of `step`
/// and report its distance to the destination when the bearing first
/// reaches `carry_angle`. Arrival within one step reports 0.
pub fn ray_march_oracle(theta: f64, r: f64, carry_angle: f64, step: f64) -> f64 {
    // destination at the origin, carrier on the positive x axis
    let (ux, uy) = (-theta.cos(), theta.sin());
    let mut k = 0u64;
    loop {
        let s = k as f64 * step;
        let (px, py) = (r + ux * s, uy * s);
        let dist = (px * px + py * py).sqrt();
        if dist <= step {
            return 0.0;
        }
        let cos_bearing = (-(px * ux) - py * uy) / dist;
        if cos_bearing.clamp(-1.0, 1.0).acos() >= carry_angle {
            return dist.min(r);
        }
        k += 1;
    }
}

/// Sample mean with its standard error across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Absent with fewer than two samples.
    pub std_err: Option<f64>,
    pub count: usize,
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

impl Estimate {
    /// `None` when there are no samples.
    pub fn from_samples(samples: &[f64]) -> Option<Estimate> {
        let count = samples.len();
        if count == 0 {
            return None;
        }
        let mean = samples.iter().sum::<f64>() / count as f64;
        let std_err = (count >= 2).then(|| {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        });
        Some(Estimate { mean, std_err, count })
    }

    /// 95% normal-approximation confidence interval.
    pub fn ci95(&self) -> Option<(f64, f64)> {
        self.std_err.map(|se| (self.mean - Z_95 * se, self.mean + Z_95 * se))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn delay_bound_examples() {
        assert_relative_eq!(delay_bound(0.5, 0.005, FRAC_PI_6).unwrap(), 115.470_053_837_925_15, max_relative = 1e-12);
        assert_relative_eq!(delay_bound(0.5, 0.005, 1e-9).unwrap(), 100.0, max_relative = 1e-12);
        assert_eq!(delay_bound(0.0, 0.005, FRAC_PI_6).unwrap(), 0.0);
        assert!(delay_bound(0.5, 0.005, FRAC_PI_2).is_err());
    }

    #[test]
    fn turn_bound_examples() {
        assert_eq!(turn_relay_bound(0.5, 0.0, 0.005, FRAC_PI_6).unwrap(), 0.0);
        assert_relative_eq!(turn_relay_bound(0.5, 0.1, 0.005, FRAC_PI_6).unwrap(), 57.735_026_918_962_58, max_relative = 1e-12);
        let one = turn_relay_bound(0.3, 0.1, 0.005, FRAC_PI_6).unwrap();
        assert_relative_eq!(turn_relay_bound(0.6, 0.1, 0.005, FRAC_PI_6).unwrap(), 2.0 * one, max_relative = 1e-14);
    }

    #[test]
    fn passover_bound_examples() {
        assert_eq!(passover_relay_bound(0.01, 0.01, FRAC_PI_6).unwrap(), 0.0);
        assert_relative_eq!(passover_relay_bound(0.5, 0.005_782_1, FRAC_PI_6).unwrap(), 29.506_071_605_490_38, max_relative = 1e-12);
        assert_relative_eq!(
            passover_relay_bound(0.5, 0.01, FRAC_PI_6).unwrap(),
            passover_relay_bound(5.0, 0.1, FRAC_PI_6).unwrap(),
            max_relative = 1e-14
        );
        assert!(matches!(passover_relay_bound(0.001, 0.01, FRAC_PI_6), Err(AnalysisError::InsideRange { .. })));
    }

    #[test]
    fn total_bound_examples() {
        let zero = BoundInputs { r: 0.01, speed: 0.005, turn_rate: 0.0, carry_angle: FRAC_PI_6, radius: 0.01 };
        assert_eq!(total_relay_bound(&zero).unwrap(), 0.0);
        let inputs = BoundInputs { r: 0.5, speed: 0.005, turn_rate: 0.1, carry_angle: FRAC_PI_6, radius: 0.005_782_1 };
        assert_relative_eq!(total_relay_bound(&inputs).unwrap(), 57.735_026_918_962_58 + 29.506_071_605_490_38, max_relative = 1e-12);
        let farther = BoundInputs { r: 0.6, ..inputs };
        assert!(total_relay_bound(&farther).unwrap() > total_relay_bound(&inputs).unwrap());
    }

    #[test]
    fn traffic_rate_examples() {
        assert_relative_eq!(traffic_rate(1e5, 500.0, 1.0).unwrap(), 7.109_470_029_589_156e-5, max_relative = 1e-12);
        assert_relative_eq!(traffic_rate(1e5, 1000.0, 1.0).unwrap(), 0.5 * traffic_rate(1e5, 500.0, 1.0).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(traffic_rate(250.0, 500.0, 1.0).unwrap(), 2.119_945_970_701_626e-4, max_relative = 1e-12);
        assert_eq!(traffic_rate(1e5, f64::INFINITY, 1.0).unwrap(), 0.0);
        assert!(traffic_rate(10.0, 500.0, 20.0).is_err());
        assert!(traffic_rate(2.0, 500.0, 1.0).is_err());
    }

    #[test]
    fn capacity_model_examples() {
        assert_relative_eq!(capacity_model(1e5, 0.45, 500.0, 1.0).unwrap(), 3.199_261_513_315_12e-5, max_relative = 1e-12);
        assert!(capacity_model(1e5, 0.999_999, 500.0, 1.0).unwrap() < traffic_rate(1e5, 500.0, 1.0).unwrap());
        assert!(capacity_model(1e5, 1.0, 500.0, 1.0).is_err());
    }

    #[test]
    fn normalization_inverts_the_scaling_laws() {
        let n = 4000.0;
        let rho = traffic_rate(n, 500.0, 1.0).unwrap();
        let c = 1.7;
        let d = normalize_values(n, 500.0, 1.0, 0.45 * rho, c * n.ln(), 1.2 * c * n.ln()).unwrap();
        assert_relative_eq!(d.m_rho, 1.0, max_relative = 1e-12);
        assert_relative_eq!(d.m_lambda, 0.45, max_relative = 1e-12);
        assert_relative_eq!(d.m_h, c, max_relative = 1e-12);
        assert_relative_eq!(d.m_t, 1.2 * c, max_relative = 1e-12);
        assert_eq!(d.eta, d.m_lambda);
    }

    #[test]
    fn ray_march_examples() {
        assert_eq!(ray_march_oracle(0.0, 1.0, FRAC_PI_6, 1e-4), 0.0);
        let got = ray_march_oracle(PI / 12.0, 1.0, FRAC_PI_6, 1e-5);
        assert!((got - 0.517_638_090_205_041_5).abs() <= 2e-5, "{got}");
        let start = ray_march_oracle(FRAC_PI_6, 0.7, FRAC_PI_6, 1e-4);
        assert!((0.0..=0.7).contains(&start));
    }

    #[test]
    fn estimate_basics() {
        let e = Estimate::from_samples(&[10.0, 20.0]).unwrap();
        assert_eq!(e.mean, 15.0);
        let (lo, hi) = e.ci95().unwrap();
        assert!(lo < 15.0 && hi > 15.0);
        let flat = Estimate::from_samples(&[3.0; 5]).unwrap();
        assert_eq!(flat.ci95(), Some((3.0, 3.0)));
        assert_eq!(Estimate::from_samples(&[1.0]).unwrap().ci95(), None);
        assert!(Estimate::from_samples(&[]).is_none());
    }
}

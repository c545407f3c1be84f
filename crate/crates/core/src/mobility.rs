//! i.i.d. random-walk mobility on the unit square.
//!
//! Walkers start uniformly placed with uniform headings, move at one
//! constant speed, redraw their heading at the epochs of a Poisson process
//! of rate `turn_rate`, and bounce off the walls like billiard balls. Turn
//! epochs live in continuous time, so a walker may turn several times inside
//! one slot and its path is piecewise straight between epochs.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{advance_with_reflection, Heading, Point};

/// Random stream owned by a single walker.
pub type NodeRng = rand_pcg::Pcg64Mcg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("speed must be positive and finite, got {0}")]
    Speed(f64),
    #[error("turn rate must be non-negative and finite, got {0}")]
    TurnRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityParams {
    /// Unit distance per slot.
    pub speed: f64,
    /// Poisson heading changes per slot.
    pub turn_rate: f64,
}

impl MobilityParams {
    pub fn new(speed: f64, turn_rate: f64) -> Result<Self, MobilityError> {
        let p = MobilityParams { speed, turn_rate };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(MobilityError::Speed(self.speed));
        }
        if !(self.turn_rate >= 0.0 && self.turn_rate.is_finite()) {
            return Err(MobilityError::TurnRate(self.turn_rate));
        }
        Ok(())
    }

    /// Draw the waiting time until the next Poisson turn.
    pub fn sample_turn_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.turn_rate == 0.0 {
            f64::INFINITY
        } else {
            Exp::new(self.turn_rate).expect("validated rate").sample(rng)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Walker {
    pub pos: Point,
    pub heading: Heading,
    /// Absolute time (in slots) of the next Poisson turn.
    pub next_turn: f64,
    /// Number of Poisson turns taken so far. Wall reflections do not count.
    pub turns: u64,
}

impl Walker {
    pub fn new(pos: Point, heading: Heading, next_turn: f64) -> Self {
        Walker { pos, heading, next_turn, turns: 0 }
    }

    /// Advance from time `now` to `now + dt`.
    pub fn step<R: Rng + ?Sized>(&mut self, now: f64, dt: f64, params: &MobilityParams, rng: &mut R) {
        let end = now + dt;
        let mut t = now;
        while self.next_turn < end {
            let (pos, heading) = advance_with_reflection(self.pos, self.heading, params.speed, self.next_turn - t);
            self.pos = pos;
            self.heading = heading;
            t = self.next_turn;
            self.heading = sample_new_heading(rng);
            self.turns += 1;
            self.next_turn = t + params.sample_turn_gap(rng);
        }
        let (pos, heading) = advance_with_reflection(self.pos, self.heading, params.speed, end - t);
        self.pos = pos;
        self.heading = heading;
    }
}

/// Uniform heading on `[0, 2π)`.
pub fn sample_new_heading<R: Rng + ?Sized>(rng: &mut R) -> Heading {
    Heading::new(rng.random::<f64>() * TAU)
}

/// `n` walkers with uniform positions, uniform headings and exponential
/// time to first turn, all drawn from `rng`.
pub fn init_uniform<R: Rng + ?Sized>(n: usize, params: &MobilityParams, rng: &mut R) -> Vec<Walker> {
    (0..n)
        .map(|_| {
            let pos = Point::new(rng.random(), rng.random());
            let heading = sample_new_heading(rng);
            let next_turn = params.sample_turn_gap(rng);
            Walker::new(pos, heading, next_turn)
        })
        .collect()
}

/// Functional form of [`Walker::step`].
pub fn step<R: Rng + ?Sized>(state: Walker, params: &MobilityParams, now: f64, dt: f64, rng: &mut R) -> Walker {
    let mut next = state;
    next.step(now, dt, params, rng);
    next
}

/// Source of node motion for the engine.
///
/// Only the random walk ships; the trait is the seam for other models.
pub trait MobilityModel: Send + Sync {
    fn init(&self, n: usize, rng: &mut NodeRng) -> Vec<Walker>;
    fn advance(&self, walker: &mut Walker, now: f64, dt: f64, rng: &mut NodeRng);
}

/// The i.i.d. billiard random walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalk(pub MobilityParams);

impl MobilityModel for RandomWalk {
    fn init(&self, n: usize, rng: &mut NodeRng) -> Vec<Walker> {
        init_uniform(n, &self.0, rng)
    }

    fn advance(&self, walker: &mut Walker, now: f64, dt: f64, rng: &mut NodeRng) {
        walker.step(now, dt, &self.0, rng);
    }
}

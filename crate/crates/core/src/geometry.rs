//! Planar vector math on the unit square.
//!
//! Everything here is a pure function of its inputs. Angles are radians.
//! Bearings are unsigned: the angle between two directions folded into
//! `[0, π]`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    /// The carrier is already off the carry cone; a pass-over distance
    /// does not exist.
    #[error("bearing {bearing} exceeds carry angle {carry_angle}: relay is immediate")]
    ImmediateRelay { bearing: f64, carry_angle: f64 },
}

/// A position in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    #[inline]
    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Clamp both coordinates into `[0, 1]`.
    #[inline]
    pub fn clamp_unit(self) -> Point {
        Point::new(self.x.clamp(0.0, 1.0), self.y.clamp(0.0, 1.0))
    }

    pub fn in_unit_square(self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }
}

/// Euclidean distance between two points.
#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    a.distance(b)
}

/// Direction of motion, normalized to `[0, 2π)`, with its unit vector cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Heading {
    angle: f64,
    dx: f64,
    dy: f64,
}

impl Heading {
    pub fn new(angle: f64) -> Self {
        let mut angle = angle.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if angle >= TAU {
            angle = 0.0;
        }
        let (dy, dx) = angle.sin_cos();
        Heading { angle, dx, dy }
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.angle
    }

    /// Unit direction vector `(cos, sin)`.
    #[inline]
    pub fn direction(self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    /// Mirror across a vertical wall: the x component flips.
    pub fn reflect_x(self) -> Self {
        Heading::new(PI - self.angle)
    }

    /// Mirror across a horizontal wall: the y component flips.
    pub fn reflect_y(self) -> Self {
        Heading::new(-self.angle)
    }
}

impl From<f64> for Heading {
    fn from(angle: f64) -> Self {
        Heading::new(angle)
    }
}

impl From<Heading> for f64 {
    fn from(h: Heading) -> f64 {
        h.angle
    }
}

/// Unsigned angle in `[0, π]` between a heading and a bearing vector.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BearingAngle(f64);

impl BearingAngle {
    /// Clamps into `[0, π]`.
    pub fn new(value: f64) -> Self {
        BearingAngle(value.clamp(0.0, PI))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Unsigned angle between vectors `a` and `b`, in `[0, π]`.
///
/// Uses `atan2(|a × b|, a · b)`, which stays accurate near 0 and π where
/// `acos` of a normalized dot product does not.
#[inline]
pub fn angle_between(a: (f64, f64), b: (f64, f64)) -> f64 {
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    cross.abs().atan2(dot)
}

/// Relative bearing of a node at `from` heading `heading`, toward `to`.
///
/// Returns `None` when `from == to`: the node sits on its target and the
/// caller should have delivered already.
pub fn relative_bearing(heading: Heading, from: Point, to: Point) -> Option<BearingAngle> {
    let bx = to.x - from.x;
    let by = to.y - from.y;
    if bx == 0.0 && by == 0.0 {
        return None;
    }
    Some(BearingAngle::new(angle_between(heading.direction(), (bx, by))))
}

/// Whether `candidate` lies strictly inside the emission cone of half-angle
/// `half_angle` whose apex is `sender` and whose axis points at `dest`.
pub fn in_emission_cone(sender: Point, dest: Point, candidate: Point, half_angle: f64) -> bool {
    let axis = (dest.x - sender.x, dest.y - sender.y);
    let arm = (candidate.x - sender.x, candidate.y - sender.y);
    if arm == (0.0, 0.0) || axis == (0.0, 0.0) {
        return false;
    }
    angle_between(axis, arm) < half_angle
}

/// Straight-line motion of length `speed * dt` inside the unit square with
/// specular reflection at the walls.
///
/// The path is walked wall to wall, so arbitrarily long moves are handled.
/// A corner hit flips both heading components.
pub fn advance_with_reflection(pos: Point, heading: Heading, speed: f64, dt: f64) -> (Point, Heading) {
    let mut remaining = speed * dt;
    let mut p = pos.clamp_unit();
    let mut h = heading;

    // most moves never touch a wall
    let (dx, dy) = h.direction();
    let (nx, ny) = (p.x + dx * remaining, p.y + dy * remaining);
    if nx > 0.0 && nx < 1.0 && ny > 0.0 && ny < 1.0 {
        return (Point::new(nx, ny), h);
    }

    while remaining > 0.0 {
        let (dx, dy) = h.direction();
        let tx = time_to_wall(p.x, dx);
        let ty = time_to_wall(p.y, dy);
        let t_wall = tx.min(ty);

        if remaining < t_wall {
            p = Point::new(p.x + dx * remaining, p.y + dy * remaining);
            break;
        }

        p = Point::new(p.x + dx * t_wall, p.y + dy * t_wall);
        remaining -= t_wall;
        if tx <= t_wall {
            p.x = if dx > 0.0 { 1.0 } else { 0.0 };
            h = h.reflect_x();
        }
        if ty <= t_wall {
            p.y = if dy > 0.0 { 1.0 } else { 0.0 };
            h = h.reflect_y();
        }
    }

    (p.clamp_unit(), h)
}

#[inline]
fn time_to_wall(coord: f64, velocity: f64) -> f64 {
    if velocity > 0.0 {
        (1.0 - coord) / velocity
    } else if velocity < 0.0 {
        -coord / velocity
    } else {
        f64::INFINITY
    }
}

/// Distance from the destination at which a straight-moving carrier, now at
/// distance `r` with bearing `theta`, reaches the carry angle:
/// `r · sin θ / sin θ_c`.
pub fn pass_over_distance(theta: BearingAngle, r: f64, carry_angle: f64) -> Result<f64, GeometryError> {
    if theta.value() > carry_angle {
        return Err(GeometryError::ImmediateRelay { bearing: theta.value(), carry_angle });
    }
    Ok(theta.value().sin() / carry_angle.sin() * r)
}

//! Follow-target control law: proportional velocity toward a goal offset
//! from the target, saturated at the follower's top speed, with a dead-band
//! around the goal and a hard minimum separation from the target.

use libm::{atan2, cos, sin};

use crate::tf::Vec3;

pub const DEAD_BAND_M: f64 = 0.25;
pub const DEFAULT_GAIN: f64 = 4.0;
/// Below this ground speed the heading estimate is considered undefined.
pub const MIN_HEADING_SPEED: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowLaw {
    /// Proportional gain, 1/s.
    pub gain: f64,
    pub dead_band: f64,
}

impl Default for FollowLaw {
    fn default() -> Self {
        Self {
            gain: DEFAULT_GAIN,
            dead_band: DEAD_BAND_M,
        }
    }
}

/// Heading (radians, counter-clockwise from east) of the motion between two
/// timed positions, or `None` when the target is too slow to tell.
pub fn heading_between(prev: (f64, Vec3), last: (f64, Vec3)) -> Option<f64> {
    let dt = last.0 - prev.0;
    let d = last.1 - prev.1;
    let horiz = libm::hypot(d.x, d.y);
    (dt > 0.0 && horiz / dt >= MIN_HEADING_SPEED).then(|| atan2(d.y, d.x))
}

/// Goal point: `target + R(heading) * offset`, offset given as
/// (forward, left) in the target's heading frame.
pub fn goal_point(target: Vec3, heading: f64, offset: [f64; 2]) -> Vec3 {
    let (s, c) = (sin(heading), cos(heading));
    target + Vec3::new(c * offset[0] - s * offset[1], s * offset[0] + c * offset[1], 0.0)
}

fn saturate(v: Vec3, max: f64) -> Vec3 {
    let n = v.norm();
    if n > max {
        v.scale(max / n)
    } else {
        v
    }
}

impl FollowLaw {
    /// Velocity command for a follower at `follower` chasing `goal` while
    /// keeping at least `standoff` from `target`.
    pub fn command(&self, follower: Vec3, goal: Vec3, target: Vec3, standoff: f64, max_speed: f64, dt: f64) -> Vec3 {
        let err = goal - follower;
        if err.norm() <= self.dead_band {
            return Vec3::ZERO;
        }
        let mut v = saturate(err.scale(self.gain), max_speed);

        let away = follower - target;
        let dist = away.norm();
        if dist < standoff {
            // Already too close: back off radially.
            let dir = if dist > 0.0 { away.scale(1.0 / dist) } else { Vec3::new(1.0, 0.0, 0.0) };
            return dir.scale(max_speed.min((standoff - dist) / dt));
        }
        if (follower + v.scale(dt) - target).norm() < standoff {
            let dir = away.scale(1.0 / dist);
            let radial = v.dot(dir);
            if radial < 0.0 {
                v = v - dir.scale(radial);
            }
            // Tangential motion can still clip the circle; shrink until clear.
            let mut k = 1.0;
            while k > 1e-6 && (follower + v.scale(dt * k) - target).norm() < standoff {
                k *= 0.5;
            }
            v = v.scale(if k > 1e-6 { k } else { 0.0 });
        }
        v
    }
}

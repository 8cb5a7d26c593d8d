use core::ops::{Add, Mul, Neg, Sub};

use libm::{acos, atan2, cos, sin, sqrt};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn scale(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }

    /// `self + (other - self) * alpha`; exact at `alpha == 0`.
    pub fn lerp(self, other: Vec3, alpha: f64) -> Vec3 {
        self + (other - self).scale(alpha)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

/// Rotation quaternion stored as (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const UNIT_NORM_TOLERANCE: f64 = 1e-9;

impl Default for Quat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quat {
    pub const IDENTITY: Quat = Quat::new(1.0, 0.0, 0.0, 0.0);

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        let half = 0.5 * angle;
        let s = sin(half) / n;
        Quat::new(cos(half), axis.x * s, axis.y * s, axis.z * s)
    }

    /// Rotation about +z (up), counter-clockwise seen from above.
    pub fn from_yaw(yaw: f64) -> Self {
        Quat::new(cos(0.5 * yaw), 0.0, 0.0, sin(0.5 * yaw))
    }

    pub fn yaw(self) -> f64 {
        atan2(
            2.0 * (self.w * self.z + self.x * self.y),
            1.0 - 2.0 * (self.y * self.y + self.z * self.z),
        )
    }

    pub fn norm(self) -> f64 {
        sqrt(self.dot(self))
    }

    pub fn dot(self, o: Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn is_unit(self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_NORM_TOLERANCE
    }

    pub fn normalized(self) -> Quat {
        let n = self.norm();
        Quat::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Quat {
        Quat::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Same rotation with `w >= 0`.
    pub fn canonical(self) -> Quat {
        if self.w < 0.0 {
            Quat::new(-self.w, -self.x, -self.y, -self.z)
        } else {
            self
        }
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        // v' = v + 2w(u x v) + 2 u x (u x v)
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v).scale(2.0);
        v + t.scale(self.w) + u.cross(t)
    }

    /// Angle of the relative rotation between `self` and `o`, in radians.
    pub fn angle_to(self, o: Quat) -> f64 {
        // Half-angle via atan2 stays accurate near zero, where acos does not.
        let o = if self.dot(o) < 0.0 { Quat::new(-o.w, -o.x, -o.y, -o.z) } else { o };
        let diff = Quat::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z).norm();
        let sum = Quat::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z).norm();
        4.0 * atan2(diff, sum)
    }

    /// Shortest-arc spherical interpolation.
    pub fn slerp(self, other: Quat, alpha: f64) -> Quat {
        let mut end = other;
        let mut d = self.dot(other);
        if d < 0.0 {
            end = Quat::new(-other.w, -other.x, -other.y, -other.z);
            d = -d;
        }
        if d > 0.9995 {
            let q = Quat::new(
                self.w + (end.w - self.w) * alpha,
                self.x + (end.x - self.x) * alpha,
                self.y + (end.y - self.y) * alpha,
                self.z + (end.z - self.z) * alpha,
            );
            return q.normalized();
        }
        let theta = acos(d);
        let s = sin(theta);
        let a = sin((1.0 - alpha) * theta) / s;
        let b = sin(alpha * theta) / s;
        Quat::new(
            a * self.w + b * end.w,
            a * self.x + b * end.x,
            a * self.y + b * end.y,
            a * self.z + b * end.z,
        )
    }
}

impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

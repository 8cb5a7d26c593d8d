use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

use super::math::{Quat, Vec3};
use super::TfError;

/// Name of a coordinate frame, e.g. `world`, `spot/base`, `anafi/camera`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FrameId(String);

impl FrameId {
    pub const WORLD: &'static str = "world";

    pub fn new(name: impl Into<String>) -> Result<Self, TfError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '"') {
            return Err(TfError::InvalidFrame(name));
        }
        Ok(Self(name))
    }

    pub fn world() -> Self {
        Self(Self::WORLD.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for FrameId {
    type Error = TfError;
    fn try_from(s: String) -> Result<Self, TfError> {
        FrameId::new(s)
    }
}

impl From<FrameId> for String {
    fn from(f: FrameId) -> String {
        f.0
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Rigid transform mapping coordinates expressed in `child` into `parent`:
/// `p_parent = rotation * p_child + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub parent: FrameId,
    pub child: FrameId,
    pub translation: Vec3,
    pub rotation: Quat,
    pub stamp: f64,
}

impl Transform {
    pub fn new(parent: FrameId, child: FrameId, translation: Vec3, rotation: Quat, stamp: f64) -> Self {
        Self {
            parent,
            child,
            translation,
            rotation,
            stamp,
        }
    }

    pub fn identity(frame: FrameId, stamp: f64) -> Self {
        Self::new(frame.clone(), frame, Vec3::ZERO, Quat::IDENTITY, stamp)
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// `self ∘ other`: maps `other.child` coordinates into `self.parent`.
    pub fn compose(&self, other: &Transform) -> Result<Transform, TfError> {
        if self.child != other.parent {
            return Err(TfError::FrameMismatch {
                expected: self.child.clone(),
                found: other.parent.clone(),
            });
        }
        Ok(self.compose_unchecked(other))
    }

    pub(crate) fn compose_unchecked(&self, other: &Transform) -> Transform {
        Transform {
            parent: self.parent.clone(),
            child: other.child.clone(),
            translation: self.rotation.rotate(other.translation) + self.translation,
            rotation: self.rotation * other.rotation,
            stamp: self.stamp.max(other.stamp),
        }
    }

    pub fn invert(&self) -> Transform {
        let inv = self.rotation.conjugate();
        Transform {
            parent: self.child.clone(),
            child: self.parent.clone(),
            translation: -inv.rotate(self.translation),
            rotation: inv,
            stamp: self.stamp,
        }
    }

    /// True when both transforms relate the same frames and agree within `tol`
    /// in translation (meters) and rotation angle (radians).
    pub fn approx_eq(&self, other: &Transform, tol: f64) -> bool {
        self.parent == other.parent
            && self.child == other.child
            && (self.translation - other.translation).norm() <= tol
            && self.rotation.angle_to(other.rotation) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> FrameId {
        FrameId::new(s).unwrap()
    }

    #[test]
    fn compose_with_identity() {
        let a = Transform::new(f("world"), f("a"), Vec3::new(1.0, 2.0, 3.0), Quat::from_yaw(0.3), 2.0);
        let c = a.compose(&Transform::identity(f("a"), 2.0)).unwrap();
        assert_eq!(c, a);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let a = Transform::new(f("world"), f("a"), Vec3::new(1.0, -2.0, 0.5), Quat::new(0.5, 0.5, 0.5, 0.5), 0.0);
        let c = a.compose(&a.invert()).unwrap();
        assert!(c.approx_eq(&Transform::identity(f("world"), 0.0), 1e-9));
    }

    #[test]
    fn compose_rejects_mismatch() {
        let a = Transform::identity(f("a"), 0.0);
        let b = Transform::identity(f("b"), 0.0);
        assert!(matches!(a.compose(&b), Err(TfError::FrameMismatch { .. })));
    }

    #[test]
    fn frame_names() {
        assert!(FrameId::new("").is_err());
        assert!(FrameId::new("a b").is_err());
        assert!(FrameId::new("spot/gps_antenna").is_ok());
    }
}

//! Transform tree relating world, agent and sensor frames.

mod math;
mod transform;
mod tree;

pub use math::{Quat, Vec3, UNIT_NORM_TOLERANCE};
pub use transform::{FrameId, Transform};
pub use tree::{TransformTree, DEFAULT_BUFFER_HORIZON};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TfError {
    #[error("invalid frame name `{0}`")]
    InvalidFrame(String),
    #[error("unknown frame `{0}`")]
    UnknownFrame(FrameId),
    #[error("frames `{0}` and `{1}` are not connected")]
    Disconnected(FrameId, FrameId),
    #[error("edge {parent} -> {child} would create a cycle")]
    Cycle { parent: FrameId, child: FrameId },
    #[error("rotation is not a unit quaternion (norm {0})")]
    NonUnitQuaternion(f64),
    #[error("non-finite translation or stamp")]
    NonFinite,
    #[error("stamp {stamp} is older than the buffer horizon (newest {newest})")]
    TooOld { stamp: f64, newest: f64 },
    #[error("time {at} outside buffered span [{first}, {last}] of {child}")]
    OutOfRange {
        child: FrameId,
        at: f64,
        first: f64,
        last: f64,
    },
    #[error("frame mismatch: expected `{expected}`, found `{found}`")]
    FrameMismatch { expected: FrameId, found: FrameId },
}

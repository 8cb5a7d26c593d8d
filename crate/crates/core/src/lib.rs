//! Allocation-only core of the HMAS kit.
//!
//! Everything in here is pure computation: name resolution and QoS history
//! semantics for the bus, the rigid-transform tree, WGS84 geodesy anchored at
//! an RTK base, the stochastic rover model, the four-rover board rig and the
//! distance analysis used to judge RTK accuracy. IO, threads, the bus itself
//! and the CLI live in the `hmas` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod bagfmt;
pub mod follow;
pub mod geo;
pub mod name;
pub mod qos;
pub mod rig;
pub mod tf;

pub use analysis::{DistanceSeries, Peak, Report, Side, SideReport, SummaryOptions};
pub use geo::{
    CorrectionLink, CorrectionMsg, EcefCoord, EnuCoord, FixQuality, GeodeticCoord, RoverConfig,
    RoverState, RtkFix,
};
pub use name::QualifiedName;
pub use qos::{Durability, KeepLast, QosProfile, Reliability};
pub use tf::{FrameId, Quat, Transform, TransformTree, Vec3};

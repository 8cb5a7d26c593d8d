//! Std side of the HMAS kit: the shared bus, bag files, agents, scenarios,
//! the board experiment harness and CSV formats. Pure computation lives in
//! [`hmas_core`].

pub mod bag;
pub mod bench;
pub mod bus;
pub mod csvio;
pub mod scenario;
pub mod world;

pub use hmas_core as core;

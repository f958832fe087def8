//! VECM–GARCH econometrics for a stablecoin peg and its reserve-asset index,
//! with a regime-switching scenario simulator.

pub mod error;
pub mod garch;
pub mod io;
pub mod johansen;
pub mod numerics;
pub mod report;
pub mod series;
pub mod simulator;
pub mod tailrisk;
pub mod vecm;

pub use error::{Error, Result};

//! Union-closed block families with small average overlap density.
//!
//! * [`setfam`]: bit-vector sets, families, union closure, separation, file format.
//! * [`metrics`]: exact abundance, average abundance and average overlap density.
//! * [`construction`]: the block family, its counts, exact statistics and bounds.
//! * [`asymptotics`]: parameter planning and the scaling sweep.
//! * [`oracle`]: brute-force cross-checks of the structured block representation.

pub mod asymptotics;
pub mod construction;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod rational;
pub mod setfam;

pub use error::{Error, Result};
pub use rational::Rational;
pub use setfam::{Family, SetBits};

/// Version of the family text format and JSON/CSV layouts.
pub const FORMAT_VERSION: &str = "1";

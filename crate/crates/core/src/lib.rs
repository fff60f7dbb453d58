//! Link-level engine for molecular communication via diffusion.
//!
//! Point transmitters release molecules into an unbounded 3D fluid; fully
//! absorbing spherical receivers count arrivals per time slot and decide
//! each on-off keyed bit against a threshold. Every receiver is sensitive to
//! exactly one molecule type, so links using different types never
//! interfere with each other.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom-up:
//!
//! * [`special`]: `erf`, `erfc` and the inverse complementary error function.
//! * [`channel`]: first-passage density, hitting probability, per-slot
//!   arrival probabilities and an exact first-passage sampler.
//! * [`statistics`]: Gaussian moments of slot counts including inter-symbol
//!   interference.
//! * [`detection`]: threshold detection, closed-form BER, optimal threshold.
//! * [`system`]: topologies and SISO/SIMO/MISO/MIMO BER assembly.
//! * [`montecarlo`]: seeded arrival simulator used as the BER oracle.
//! * [`optimizer`]: dosage allocation under a per-transmitter budget.
//! * [`scenario`]: the reference configuration and scenario validation.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channel;
pub mod detection;
mod error;
pub mod montecarlo;
pub mod optimizer;
pub mod scenario;
pub mod special;
pub mod statistics;
pub mod system;

pub use error::{Error, Result};

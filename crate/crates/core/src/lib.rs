//! Simulation and optimization toolkit for a secure full-duplex multi-user
//! system whose base station carries movable transmit and receive antennas.
//!
//! The crate builds field-response channels as functions of antenna
//! positions, evaluates the sum-of-secrecy-rates objective, and solves the
//! joint design problem by alternating between a multi-velocity particle
//! swarm over antenna positions, a successive-convex-approximation step for
//! the transmit/jamming covariances and uplink powers, and a closed-form
//! receive beamformer. A benchmark harness reproduces the comparative
//! experiments at desk scale and emits CSV results.

pub mod ao;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mvpso;
pub mod objective;
pub mod receiver;
pub mod sca;
pub mod scenario;
pub mod schemes;
pub mod verify;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVec = nalgebra::DVector<C64>;

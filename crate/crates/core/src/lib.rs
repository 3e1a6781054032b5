//! Exact simulation of conditional partial teleportation of polarization and
//! time-bin qubits, the protocol family that realizes optimal quantum cloning
//! between distant parties.
//!
//! The crate is organized around a small dense state-vector engine:
//!
//! * [`hilbert`]: qubit registers, operators, partial traces, fidelities;
//! * [`bell`]: the unbalanced-beam-splitter conditional projector that drives
//!   every protocol here, parameterized by a reflectivity `R in [0, 1/2]`;
//! * [`protocols`]: partial teleportation, local unitary reversal on either
//!   side, sequential distribution to several receivers, the symmetric
//!   N -> N+1 cloning chain, the local universal-NOT port, and the time-bin
//!   variant of the protocol;
//! * [`bounds`]: closed-form fidelity trade-offs, classical baselines, and a
//!   solver for reflectivity schedules that equalize clone fidelities;
//! * [`montecarlo`]: seeded shot-based estimators for the same quantities.

#![warn(clippy::all)]

pub mod bell;
pub mod bounds;
pub mod error;
pub mod hilbert;
pub mod montecarlo;
pub mod protocols;

pub use error::{Error, Result};

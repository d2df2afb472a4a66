//! Probabilistic entanglement amplification with local two-outcome weak
//! measurements.
//!
//! A partially entangled pure state `α|0>|φ0> + β|1>|φ1>` is driven to the
//! maximally entangled state by measuring system A with a sequence of
//! symmetric weak measurements whose strengths follow a fixed recurrence.
//! The crate also covers the single-shot version of the protocol on mixed
//! two-qubit inputs, the criterion on the separable part that guarantees
//! amplification, and the Monte Carlo over random separable states used to
//! probe it.

pub mod entanglement;
pub mod error;
pub mod measurements;
pub mod mixed;
pub mod numerics;
pub mod output;
pub mod protocol;
pub mod sampling;
pub mod states;
pub mod tolerance;

pub use error::{Error, Result};
pub use numerics::CMat;
pub use states::{LSDecomposition, SchmidtState, TwoQubitDensity};

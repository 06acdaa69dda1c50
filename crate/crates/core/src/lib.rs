//! Simulator and analysis toolkit for single-qubit deterministic secure
//! direct communication.
//!
//! Alice sends a qubit prepared in `|0>` or `|φ0>` to Bob, who either
//! encodes a bit on it with `I` / `iσ_y` or replaces it with a random BB84
//! test state, and returns it. Control rounds catch eavesdroppers; message
//! rounds deliver bits deterministically.
//!
//! - [`qstate`]: exact single-qubit algebra.
//! - [`protocol`]: rounds, sessions and transcripts.
//! - [`adversary`]: eavesdropping strategies.
//! - [`analysis`]: closed forms, exact enumeration and Monte Carlo estimators.
//! - [`keyxfer`]: key transfer with Toeplitz privacy amplification.
//! - [`selftest`]: reduced-size acceptance checks runnable from a binary.

pub mod adversary;
pub mod analysis;
pub mod fmt;
pub mod keyxfer;
pub mod protocol;
pub mod qstate;
pub mod seed;
pub mod selftest;

pub use adversary::{BasisPolicy, EveKind, EveStrategySpec};
pub use analysis::{AnalysisError, EstimateWithCI, SecurityParams};
pub use protocol::{ProtocolConfig, ProtocolError, SessionResult, SessionStats};

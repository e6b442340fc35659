//! Finite-key security analysis and pulse-level simulation for a
//! phase-coding side-channel-secure (PC-SCS) QKD protocol.
//!
//! Two symmetric senders modulate only two phases on identical coherent
//! pulses; an untrusted middle node announces single-detector clicks. The
//! only trusted property of the source is an upper bound `mu` on the pulse
//! intensity, which lower-bounds the vacuum amplitude and so caps the
//! weight of the phase-error-carrying odd-odd component. The crates here
//! turn that into numbers:
//!
//! * [`bounds`] - Kato martingale bounds (four inverse forms) and the
//!   multiplicative Chernoff upper bound, the concentration toolkit the
//!   finite-key chain is built from.
//! * [`channel`] - analytic model of the honest channel and interferometric
//!   detection: transmittance, click rates, bit error rate.
//! * [`security`] - certified phase-error bound, key length and key rate,
//!   in finite-key and asymptotic modes.
//! * [`sim`] - deterministic pulse-level Monte Carlo simulator, the
//!   cross-validation oracle for the analytic channel model.
//! * [`optimize`] - grid-refinement maximization of the key rate over the
//!   free parameters (intensity, estimation probability) and rate-loss
//!   curve generation.

pub mod bounds;
pub mod channel;
mod dd;
pub mod error;
pub mod optimize;
pub mod security;
pub mod sim;

pub use bounds::{BoundInput, KatoCoefficients};
pub use channel::{ChannelParams, ClickRates, ExpectedTallies};
pub use error::{Error, Result};
pub use optimize::{CurvePoint, Mode, OptimizedPoint, SearchSpec};
pub use security::{KeyRateResult, PhaseErrorCertificate, ProtocolParams, Tallies};
pub use sim::{SimConfig, SimTallies};

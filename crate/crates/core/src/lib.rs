//! Reinforcement-based link adaptation over temporally-correlated Rayleigh
//! block-fading channels.
//!
//! Two problems are covered:
//!
//! * **Rate adaptation with 1-bit feedback** ([`rate_adapt`]): a
//!   reward/punishment rate controller against the static CSI quantizer,
//!   plus the no-CSIT and perfect-CSIT closed forms.
//! * **HARQ power adaptation** ([`harq`]): repetition-time-diversity HARQ
//!   with maximum ratio combining, outage-constrained static power
//!   allocation, and an ACK/NACK-driven power controller.
//!
//! The fading process lives in [`channel`], numerical building blocks in
//! [`numerics`], replication and sweep orchestration in [`engine`], and the
//! figure/CLI front-end in [`cli`].

pub mod channel;
pub mod cli;
pub mod config;
pub mod engine;
mod error;
pub mod figures;
pub mod harq;
pub mod numerics;
pub mod rate_adapt;

pub use error::{Error, Result};

//! Generalized spatial modulation over affine frequency division multiplexing
//! (GSM-AFDM): bit mapping, chirp modulation, doubly selective channels,
//! detectors and analytic performance predictors, plus a Monte-Carlo harness.
//!
//! Module map:
//! - [`mapper`]: TAP codebooks, constellations, group and frame mapping.
//! - [`waveform`]: DAFT/IDAFT, chirp parameter rules, chirp-periodic prefix.
//! - [`channel`]: path generation, per-path DAFT-domain operators, effective
//!   MIMO channel, noise and imperfect CSI.
//! - [`detect`]: joint MLD and the LMMSE-based per-group detectors.
//! - [`analysis`]: union bound, diversity/coding gain, DCMC capacity.
//! - [`sim`]: configuration, BER/bound/capacity sweeps, CSV and SVG output.

pub mod analysis;
pub mod channel;
pub mod detect;
mod error;
pub mod linalg;
pub mod mapper;
pub mod sim;
pub mod waveform;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix type used throughout.
pub type CMatrix = nalgebra::DMatrix<C64>;

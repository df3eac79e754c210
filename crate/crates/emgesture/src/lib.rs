//! Gesture sensing from wireless-charger electromagnetic emissions.
//!
//! The pipeline: load (or synthesize) a two-channel IQ recording, slice it
//! into gesture segments, reduce each segment to an averaged short-window
//! power spectrum, strip ambient noise by mode-wise spectral subtraction on
//! top of a variational mode decomposition, and classify with a random
//! forest. A physics-inspired synthetic signal generator stands in for the
//! charger/antenna hardware so the whole chain runs and validates offline.
//!
//! See the `examples/` directory for one runnable example per capability,
//! or drive everything through the `emgesture` binary (`run-all` chains
//! synth -> features -> denoise -> train deterministically).

pub mod cli;
pub mod config;
pub mod denoise;
pub mod error;
pub mod ml;
pub mod plot;
pub mod signal_io;
pub mod spectrum;
pub mod synth;
pub mod vmd;

pub use error::{Error, Result};

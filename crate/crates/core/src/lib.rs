//! Numerical toolkit for witnessing path entanglement with threshold
//! detectors (single-photon counters and a human-eye model) upgraded by
//! phase-space displacements.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] truncated single- and two-mode Fock-space linear algebra;
//! * [`detector`] threshold-detector POVMs and Bloch-sphere restrictions;
//! * [`witness`] displaced ±1 observables and the phase-randomised witness;
//! * [`bounds`] calibration amplitudes, photon-number bounds and the
//!   separable bound `W_PPT`;
//! * [`source`] heralded SPDC state and the closed-form expected witness;
//! * [`jet`] truncated Taylor arithmetic used by the closed form;
//! * [`mc`] event-sampling Monte Carlo validator;
//! * [`optimize`] scalar root finding and golden-section search;
//! * [`sweep`] the `ΔW` versus beamsplitter-transmission scan.

pub mod bounds;
pub mod detector;
pub mod error;
pub mod fock;
pub mod jet;
pub mod mc;
pub mod optimize;
pub mod source;
pub mod sweep;
pub mod witness;

pub use error::{Error, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

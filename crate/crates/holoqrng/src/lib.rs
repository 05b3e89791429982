//! Simulation and processing pipeline for a holographically-controlled
//! quantum random number generator.
//!
//! The physical device this models produces photon pairs by spontaneous
//! parametric down-conversion. One photon (arm A) heralds its twin, which is
//! steered by a spatial light modulator displaying a blazed grating: the
//! grating depth splits the twin between two output fibres (B0/B1), and the
//! detector that fires becomes one raw bit. The crate covers the full chain:
//!
//! * [`spdc`] — the orbital-angular-momentum spiral spectrum of the pair
//!   source and projective filtering of either arm;
//! * [`hologram`] — blazed-grating diffraction efficiency, the bit-bias it
//!   induces, and calibration of the grating depth that balances the split;
//! * [`sim`] / [`tags`] — a time-tag-level Monte Carlo of the source,
//!   optics and detectors, and the on-disk time-tag record format;
//! * [`coincidence`] — pairing herald clicks with B0/B1 clicks inside a
//!   coincidence window and reading out the bit stream;
//! * [`entropy`] — Shannon/min-entropy point estimates with statistical
//!   error bars;
//! * [`stattests`] — the NIST SP 800-22 statistical test battery;
//! * [`oam`] — joint-spectrum scans and entropy tailoring by projecting the
//!   herald arm onto a chosen angular-momentum mode.

pub mod coincidence;
pub mod entropy;
pub mod hologram;
pub mod oam;
pub mod sim;
pub mod spdc;
pub mod stattests;
pub mod tags;

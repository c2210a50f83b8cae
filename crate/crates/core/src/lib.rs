//! Twin-beam photon statistics toolkit.
//!
//! Library for modeling and analyzing correlated photon-pair sources in warm
//! atomic vapor:
//!
//! - [`physmodel`] — Doppler-averaged susceptibilities, phase matching, the
//!   biphoton temporal wavefunction and the composite coincidence profile;
//! - [`timetags`] — two-channel time-tag ingestion (CSV / TTAG binary),
//!   windowed coincidence histogramming, dead-time filtering;
//! - [`counting`] — binned counting statistics: Mandel-Q with bootstrap
//!   uncertainties and bin-width sweeps;
//! - [`synth`] — synthetic photon streams with known statistics (coherent,
//!   twin pairs, sub-Poissonian renewal pairs) and a detector model;
//! - [`squeezing`] — intensity-difference noise spectra normalized to the
//!   shot-noise level.
//!
//! All integer timestamps are picoseconds. Seeded operations are
//! deterministic per seed and independent of thread count.

// Validation guards are written as `!(v > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod counting;
pub mod physmodel;
pub mod squeezing;
pub mod synth;
pub mod timetags;

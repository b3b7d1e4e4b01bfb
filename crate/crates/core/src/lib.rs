//! Downlink area spectral efficiency of LEO satellite constellations.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] places satellites and terminals (hexagonal lattices, spherical
//!   caps, planar projection) and measures off-axis angles.
//! * [`antenna`] provides the unit-peak Bessel beam pattern and its monotone
//!   variants.
//! * [`link`] turns a [`link::Scenario`] and a [`link::Constellation`] into link
//!   gains, SINRs and spectral efficiency, single-channel or wideband.
//! * [`regular`] holds the closed-form analytics of the regular configuration.
//! * [`assoc`] associates satellites with terminals (exact Hungarian matching and
//!   the block shuffling family).
//! * [`spectrum`] builds hexagonal subband reuse plans.
//! * [`montecarlo`] draws random constellations and fading and aggregates trials.
//!
//! Spectral efficiencies are returned in bits/s/Hz/km²; use [`per_1000_km2`] for
//! the bits/s/Hz/1000 km² reporting unit.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod assoc;
pub mod error;
pub mod geometry;
pub mod link;
pub mod montecarlo;
pub mod quad;
pub mod regular;
pub mod spectrum;

pub use antenna::{BeamPattern, PatternKind};
pub use assoc::{Assignment, ShufflePlan};
pub use error::{Error, Result};
pub use geometry::{EarthModel, LatticeIndex, Point3, SurfaceMode, Torus};
pub use link::{Constellation, LinkGain, Scenario};
pub use montecarlo::{FadingParams, FadingRegime, RngStream, SweepRow};
pub use regular::{RegularAnalysis, Truncation};
pub use spectrum::SpectrumPlan;

/// Converts bits/s/Hz/km² into bits/s/Hz/1000 km².
#[inline]
pub fn per_1000_km2(efficiency_per_km2: f64) -> f64 {
    efficiency_per_km2 * 1000.0
}

/// Converts a power ratio in dB to linear scale.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

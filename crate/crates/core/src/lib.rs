//! Correlation-based information metrics for sampled 1D/2D/3D measurements.
//!
//! Fourier shell/ring correlation and its ½-bit threshold, the
//! Fisher-transformed information per shell (FSI/FRI) with radial and
//! filling-degree weighting, band-integrated global information (GIC),
//! local information maps (LID/LCID), transducer efficiency (TIE), packet
//! information (PIC), sampling/apodization compliance checks, map
//! preparation for cross-comparison, and a signal-plus-noise model
//! experiment.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the `*64` / `*32` aliases name the common choices.

pub mod compliance;
pub mod curve;
pub mod error;
pub mod grid;
pub mod info;
pub mod locality;
pub mod metrics;
pub mod modelx;
pub mod packet;
pub mod prep;
pub mod scalar;
pub mod transducer;

pub use curve::{Curve, CurveKind, ShellFlags};
pub use error::{Error, Result};
pub use grid::{forward_transform, inverse_transform, radial_bins, shell_power, RadialBins, Spectrum, Volume};
pub use info::{fisher_bits, integrated_information, weighted_information, InfoParams};
pub use locality::{lcid_map, lid_map, local_fsc, InfoMap, WindowSpec};
pub use metrics::{fsc, half_bit_threshold, resolution_crossing, CrossingReport, ThresholdParams};
pub use packet::{pic_fourier, pic_real, Packet};
pub use scalar::Real;

pub type Volume64 = Volume<f64>;
pub type Volume32 = Volume<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type Curve64 = Curve<f64>;
pub type Curve32 = Curve<f32>;
pub type RadialBins64 = RadialBins<f64>;
pub type RadialBins32 = RadialBins<f32>;
pub type InfoMap64 = InfoMap<f64>;
pub type InfoMap32 = InfoMap<f32>;
pub type Packet64 = Packet<f64>;
pub type Packet32 = Packet<f32>;

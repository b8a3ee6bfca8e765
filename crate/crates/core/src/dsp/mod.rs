//! Signal-processing building blocks shared by the effects rack and the
//! spatializer.

pub mod biquad;
pub mod convolution;
pub mod math;

pub use biquad::{Biquad, BiquadCascade, BiquadCoeffs, BiquadError, BiquadKind};
pub use convolution::{fft_convolve, OverlapAddConvolver};

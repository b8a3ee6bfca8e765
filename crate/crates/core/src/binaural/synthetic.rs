//! Analytic spherical-head HRIR set.
//!
//! Each ear gets the one-pole/one-zero head-shadow filter of a rigid sphere
//! (bilinear transform of `H(s) = (α s + β) / (s + β)`, `β = 2c/a`), where
//! the high-frequency gain `α` falls from 2 (source on the ear axis) to 0.1
//! at 150° of incidence:
//!
//! ```text
//! α(θ) = 1.05 + 0.95 cos(180° · θ / 150°)
//! ```
//!
//! A −8 dB notch that moves from 6.2 kHz (elevation −30°) to 9.8 kHz (+30°)
//! stands in for the pinna. The right ear of direction `(az, el)` is the left
//! ear of `(−az, el)`, copied, so the set is exactly left-right symmetric.
//! Responses carry no interaural delay.

use super::hrir::{Direction, HrirSet};
use crate::dsp::{math, BiquadCoeffs, BiquadKind};

pub const HEAD_RADIUS: f64 = 0.0875;
pub const SPEED_OF_SOUND: f64 = 343.0;
pub const TAPS: usize = 128;
pub const AZIMUTH_STEP: f64 = 5.0;
pub const ELEVATIONS: [f64; 3] = [-30.0, 0.0, 30.0];

fn shadow_alpha(incidence_deg: f64) -> f64 {
    1.05 + 0.95 * math::cos((incidence_deg / 150.0 * 180.0).to_radians())
}

/// Left-ear response for a direction on an `fs` grid.
fn left_ear(d: Direction, fs: f64) -> Vec<f32> {
    let (az, el) = (d.azimuth.to_radians(), d.elevation.to_radians());
    // angle between the source and the left-ear axis
    let cos_inc = (math::cos(el) * math::sin(az)).clamp(-1.0, 1.0);
    let incidence = (std::f64::consts::FRAC_PI_2 - math::asin(cos_inc)).to_degrees();
    let alpha = shadow_alpha(incidence);
    let beta = 2.0 * SPEED_OF_SOUND / HEAD_RADIUS;
    let k = 2.0 * fs;
    let den = k + beta;
    let shadow = BiquadCoeffs {
        b0: (k * alpha + beta) / den,
        b1: (beta - k * alpha) / den,
        b2: 0.0,
        a1: (beta - k) / den,
        a2: 0.0,
    };
    let notch_fc = 8000.0 + 60.0 * d.elevation;
    let pinna = BiquadCoeffs::design(BiquadKind::Peaking, notch_fc, 2.0, -8.0, fs).expect("notch below Nyquist");
    let mut stages = [crate::dsp::Biquad::new(shadow), crate::dsp::Biquad::new(pinna)];
    (0..TAPS)
        .map(|n| {
            let x = if n == 0 { 1.0 } else { 0.0 };
            stages.iter_mut().fold(x, |acc, s| s.process_sample(acc)) as f32
        })
        .collect()
}

/// The shipped default set: 5° azimuth steps at three elevations.
pub fn spherical_head_set(sample_rate: u32) -> HrirSet {
    let per_ring = (360.0 / AZIMUTH_STEP) as usize;
    let mut grid = Vec::with_capacity(per_ring * ELEVATIONS.len());
    for &el in &ELEVATIONS {
        for k in 0..per_ring {
            grid.push(Direction::new(k as f64 * AZIMUTH_STEP, el));
        }
    }
    let fs = sample_rate as f64;
    let left: Vec<Vec<f32>> = grid.iter().map(|&d| left_ear(d, fs)).collect();
    let right = grid
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let ring = i / per_ring;
            let k = i % per_ring;
            left[ring * per_ring + (per_ring - k) % per_ring].clone()
        })
        .collect();
    HrirSet::new("spherical-head", sample_rate, grid, left, right).expect("generated set is valid")
}

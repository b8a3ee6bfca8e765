//! Closed-form localisation and distance cues.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::math;

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const AIR_CUTOFF_MAX_HZ: f64 = 20_000.0;
pub const AIR_CUTOFF_MIN_HZ: f64 = 1_000.0;
/// Distance beyond the far-field boundary over which the air-absorption
/// cutoff halves.
pub const AIR_HALVING_M: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItdDelays {
    pub left_s: f64,
    pub right_s: f64,
}

/// Woodworth spherical-head ITD, placed entirely on the far ear.
///
/// Positive azimuth is to the listener's left, so a positive lateral angle
/// delays the right ear.
pub fn itd_delays(head_circumference_m: f64, azimuth_rad: f64, elevation_rad: f64) -> ItdDelays {
    let r = head_circumference_m / (2.0 * std::f64::consts::PI);
    // work on |azimuth| so mirrored poses give bit-identical delays
    let az = math::wrap_pi(azimuth_rad);
    let t = math::asin((math::sin(az.abs()) * math::cos(elevation_rad)).clamp(-1.0, 1.0)).abs();
    let itd = r / SPEED_OF_SOUND * (t + math::sin(t));
    if itd == 0.0 {
        ItdDelays { left_s: 0.0, right_s: 0.0 }
    } else if az > 0.0 {
        ItdDelays { left_s: 0.0, right_s: itd }
    } else {
        ItdDelays { left_s: itd, right_s: 0.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DistanceModelError {
    #[error("reference_distance must be positive, got {0}")]
    Reference(f64),
    #[error("attenuation_db_per_m must be non-negative, got {0}")]
    Attenuation(f64),
    #[error("near_field_radius must be positive, got {0}")]
    NearField(f64),
    #[error("far_field_distance ({far}) must exceed near_field_radius ({near})")]
    FarField { near: f64, far: f64 },
    #[error("ild_max_db must be non-negative, got {0}")]
    Ild(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceModel {
    pub reference_distance: f64,
    pub attenuation_db_per_m: f64,
    pub near_field_radius: f64,
    pub far_field_distance: f64,
    /// Shelf gain on each ear for a source touching the head at 90°.
    pub ild_max_db: f64,
    pub ild_corner_hz: f64,
}

impl Default for DistanceModel {
    fn default() -> Self {
        Self {
            reference_distance: 1.0,
            attenuation_db_per_m: 3.0,
            near_field_radius: 1.5,
            far_field_distance: 15.0,
            ild_max_db: 6.0,
            ild_corner_hz: 2_000.0,
        }
    }
}

impl DistanceModel {
    pub fn validate(&self) -> Result<(), DistanceModelError> {
        if !(self.reference_distance > 0.0) {
            return Err(DistanceModelError::Reference(self.reference_distance));
        }
        if !(self.attenuation_db_per_m >= 0.0) {
            return Err(DistanceModelError::Attenuation(self.attenuation_db_per_m));
        }
        if !(self.near_field_radius > 0.0) {
            return Err(DistanceModelError::NearField(self.near_field_radius));
        }
        if !(self.far_field_distance > self.near_field_radius) {
            return Err(DistanceModelError::FarField {
                near: self.near_field_radius,
                far: self.far_field_distance,
            });
        }
        if !(self.ild_max_db >= 0.0) {
            return Err(DistanceModelError::Ild(self.ild_max_db));
        }
        Ok(())
    }
}

/// Linear gain for `d` metres: a fixed dB loss per metre beyond the
/// reference distance and no boost inside it.
pub fn distance_gain(d: f64, model: &DistanceModel) -> f64 {
    let excess = (d - model.reference_distance).max(0.0);
    if excess == 0.0 {
        return 1.0;
    }
    math::db_to_gain(-model.attenuation_db_per_m * excess)
}

pub fn air_absorption_cutoff(d: f64, model: &DistanceModel) -> f64 {
    if d <= model.far_field_distance {
        return AIR_CUTOFF_MAX_HZ;
    }
    let fc = AIR_CUTOFF_MAX_HZ * math::pow(2.0, -(d - model.far_field_distance) / AIR_HALVING_M);
    fc.max(AIR_CUTOFF_MIN_HZ)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IldGains {
    pub left_db: f64,
    pub right_db: f64,
}

/// High-shelf gains for a near-field source: the near ear is boosted and the
/// far ear cut by the same amount.
pub fn near_field_ild_gains(d: f64, azimuth_rad: f64, model: &DistanceModel) -> IldGains {
    if d >= model.near_field_radius {
        return IldGains { left_db: 0.0, right_db: 0.0 };
    }
    let az = math::wrap_pi(azimuth_rad);
    let g = model.ild_max_db * (1.0 - d / model.near_field_radius) * math::sin(az.abs());
    if g == 0.0 || az == 0.0 {
        IldGains { left_db: 0.0, right_db: 0.0 }
    } else if az > 0.0 {
        IldGains { left_db: g, right_db: -g }
    } else {
        IldGains { left_db: -g, right_db: g }
    }
}

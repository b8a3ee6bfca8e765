//! Scalar math used on the rendering path.
//!
//! Transcendentals go through the pure-Rust `libm` port instead of the
//! platform C library so rendered output does not depend on the host libm.

pub use libm::{asin, atan2, cos, exp, fabs, floor, log, log10, pow, sin, sqrt, tan};

/// Decibels to linear amplitude.
#[inline]
pub fn db_to_gain(db: f64) -> f64 {
    pow(10.0, db / 20.0)
}

/// Linear amplitude to decibels. Non-positive input maps to `-inf`.
#[inline]
pub fn gain_to_db(gain: f64) -> f64 {
    if gain <= 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * log10(gain)
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
#[inline]
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg - 360.0 * floor(deg / 360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wraps an angle in radians into `(-pi, pi]`.
#[inline]
pub fn wrap_pi(rad: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if rad > -PI && rad <= PI {
        return rad;
    }
    let mut w = rad - TAU * floor(rad / TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        for db in [-60.0, -6.0, 0.0, 3.5, 12.0] {
            assert!((gain_to_db(db_to_gain(db)) - db).abs() < 1e-12);
        }
        assert_eq!(db_to_gain(0.0), 1.0);
        assert_eq!(gain_to_db(0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_degrees(-90.0), 270.0);
        assert_eq!(wrap_degrees(360.0), 0.0);
        assert_eq!(wrap_degrees(725.0), 5.0);
        assert!((wrap_pi(3.0 * std::f64::consts::PI / 2.0) + std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}

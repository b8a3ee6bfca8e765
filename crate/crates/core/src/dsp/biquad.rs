//! Second-order sections using the Audio EQ Cookbook (R. Bristow-Johnson)
//! coefficient formulas, run in direct form II transposed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiquadKind {
    Lowpass,
    Highpass,
    /// Constant 0 dB peak gain band-pass.
    Bandpass,
    Lowshelf,
    Highshelf,
    Peaking,
    Notch,
}

impl BiquadKind {
    pub fn uses_gain(self) -> bool {
        matches!(self, Self::Lowshelf | Self::Highshelf | Self::Peaking)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BiquadError {
    #[error("cutoff {fc} Hz must lie in (0, {nyquist}) Hz")]
    Cutoff { fc: f64, nyquist: f64 },
    #[error("q must be positive and finite, got {0}")]
    Q(f64),
    #[error("gain must be finite, got {0} dB")]
    Gain(f64),
    #[error("sample rate must be positive, got {0}")]
    SampleRate(f64),
}

/// a0-normalized biquad coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    pub const IDENTITY: Self = Self {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    pub fn design(kind: BiquadKind, fc: f64, q: f64, gain_db: f64, fs: f64) -> Result<Self, BiquadError> {
        if !(fs > 0.0 && fs.is_finite()) {
            return Err(BiquadError::SampleRate(fs));
        }
        let nyquist = fs / 2.0;
        if !(fc > 0.0 && fc < nyquist) {
            return Err(BiquadError::Cutoff { fc, nyquist });
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(BiquadError::Q(q));
        }
        if !gain_db.is_finite() {
            return Err(BiquadError::Gain(gain_db));
        }

        let w0 = std::f64::consts::TAU * fc / fs;
        let cos_w0 = math::cos(w0);
        let alpha = math::sin(w0) / (2.0 * q);
        let a = math::pow(10.0, gain_db / 40.0);
        let two_sqrt_a_alpha = 2.0 * math::sqrt(a) * alpha;

        let (b0, b1, b2, a0, a1, a2) = match kind {
            BiquadKind::Lowpass => {
                let b1 = 1.0 - cos_w0;
                (b1 / 2.0, b1, b1 / 2.0, 1.0 + alpha, -2.0 * cos_w0, 1.0 - alpha)
            }
            BiquadKind::Highpass => {
                let b0 = (1.0 + cos_w0) / 2.0;
                (b0, -(1.0 + cos_w0), b0, 1.0 + alpha, -2.0 * cos_w0, 1.0 - alpha)
            }
            BiquadKind::Bandpass => (alpha, 0.0, -alpha, 1.0 + alpha, -2.0 * cos_w0, 1.0 - alpha),
            BiquadKind::Notch => (1.0, -2.0 * cos_w0, 1.0, 1.0 + alpha, -2.0 * cos_w0, 1.0 - alpha),
            BiquadKind::Peaking => (
                1.0 + alpha * a,
                -2.0 * cos_w0,
                1.0 - alpha * a,
                1.0 + alpha / a,
                -2.0 * cos_w0,
                1.0 - alpha / a,
            ),
            BiquadKind::Lowshelf => (
                a * ((a + 1.0) - (a - 1.0) * cos_w0 + two_sqrt_a_alpha),
                2.0 * a * ((a - 1.0) - (a + 1.0) * cos_w0),
                a * ((a + 1.0) - (a - 1.0) * cos_w0 - two_sqrt_a_alpha),
                (a + 1.0) + (a - 1.0) * cos_w0 + two_sqrt_a_alpha,
                -2.0 * ((a - 1.0) + (a + 1.0) * cos_w0),
                (a + 1.0) + (a - 1.0) * cos_w0 - two_sqrt_a_alpha,
            ),
            BiquadKind::Highshelf => (
                a * ((a + 1.0) + (a - 1.0) * cos_w0 + two_sqrt_a_alpha),
                -2.0 * a * ((a - 1.0) + (a + 1.0) * cos_w0),
                a * ((a + 1.0) + (a - 1.0) * cos_w0 - two_sqrt_a_alpha),
                (a + 1.0) - (a - 1.0) * cos_w0 + two_sqrt_a_alpha,
                2.0 * ((a - 1.0) - (a + 1.0) * cos_w0),
                (a + 1.0) - (a - 1.0) * cos_w0 - two_sqrt_a_alpha,
            ),
        };

        Ok(Self {
            b0: b0 / a0,
            b1: b1 / a0,
            b2: b2 / a0,
            a1: a1 / a0,
            a2: a2 / a0,
        })
    }

    /// Squared magnitude response at normalized angular frequency `w` (rad/sample).
    pub fn magnitude_sq(&self, w: f64) -> f64 {
        let (c1, s1) = (math::cos(w), math::sin(w));
        let (c2, s2) = (math::cos(2.0 * w), math::sin(2.0 * w));
        let nr = self.b0 + self.b1 * c1 + self.b2 * c2;
        let ni = -(self.b1 * s1 + self.b2 * s2);
        let dr = 1.0 + self.a1 * c1 + self.a2 * c2;
        let di = -(self.a1 * s1 + self.a2 * s2);
        (nr * nr + ni * ni) / (dr * dr + di * di)
    }

    /// Magnitude response in dB at `freq` Hz for sample rate `fs`.
    pub fn magnitude_db(&self, freq: f64, fs: f64) -> f64 {
        10.0 * math::log10(self.magnitude_sq(std::f64::consts::TAU * freq / fs))
    }

    /// Largest pole radius of the denominator `1 + a1 z^-1 + a2 z^-2`.
    pub fn max_pole_radius(&self) -> f64 {
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc >= 0.0 {
            let r = math::sqrt(disc);
            ((-self.a1 + r) / 2.0).abs().max(((-self.a1 - r) / 2.0).abs())
        } else {
            // complex conjugate pair, |p|^2 = a2
            math::sqrt(self.a2)
        }
    }
}

/// One biquad section with direct-form-II-transposed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub coeffs: BiquadCoeffs,
    s1: f64,
    s2: f64,
}

impl Biquad {
    pub fn new(coeffs: BiquadCoeffs) -> Self {
        Self { coeffs, s1: 0.0, s2: 0.0 }
    }

    pub fn identity() -> Self {
        Self::new(BiquadCoeffs::IDENTITY)
    }

    /// Replaces the coefficients, keeping the state.
    pub fn set_coeffs(&mut self, coeffs: BiquadCoeffs) {
        self.coeffs = coeffs;
    }

    pub fn reset(&mut self) {
        self.s1 = 0.0;
        self.s2 = 0.0;
    }

    pub fn is_at_rest(&self) -> bool {
        self.s1 == 0.0 && self.s2 == 0.0
    }

    #[inline]
    pub fn process_sample(&mut self, x: f64) -> f64 {
        let c = &self.coeffs;
        let y = c.b0 * x + self.s1;
        self.s1 = c.b1 * x - c.a1 * y + self.s2;
        self.s2 = c.b2 * x - c.a2 * y;
        y
    }

    pub fn process_in_place(&mut self, buf: &mut [f32]) {
        for s in buf.iter_mut() {
            *s = self.process_sample(*s as f64) as f32;
        }
    }
}

/// Cascade of biquad sections with an overall linear gain.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    pub gain: f64,
    pub sections: Vec<Biquad>,
}

impl BiquadCascade {
    pub fn new(gain: f64, coeffs: &[BiquadCoeffs]) -> Self {
        Self {
            gain,
            sections: coeffs.iter().copied().map(Biquad::new).collect(),
        }
    }

    #[inline]
    pub fn process_sample(&mut self, x: f64) -> f64 {
        let mut y = x * self.gain;
        for s in &mut self.sections {
            y = s.process_sample(y);
        }
        y
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }
}

//! Feed-forward peak compressor with a soft knee.
//!
//! The detector follows the channel-linked peak `max_c |x_c[n]|` with a
//! one-pole smoother whose coefficient depends on direction: attack while the
//! input rises above the envelope, release otherwise. Each time constant is
//! the time to cover `1 - 1/e` of a step. The static curve works in dB:
//!
//! ```text
//! L < T - W/2          : out = L
//! |L - T| <= W/2       : out = L + (1/R - 1) (L - T + W/2)^2 / (2W)
//! L > T + W/2          : out = T + (L - T) / R
//! ```
//!
//! and the applied gain is `out - L` dB. No make-up gain is added.

use crate::dsp::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressorParams {
    pub threshold_db: f64,
    pub ratio: f64,
    pub attack_s: f64,
    pub release_s: f64,
    pub knee_db: f64,
}

impl Default for CompressorParams {
    fn default() -> Self {
        Self {
            threshold_db: -24.0,
            ratio: 12.0,
            attack_s: 0.003,
            release_s: 0.25,
            knee_db: 30.0,
        }
    }
}

fn smoothing(tau: f64, fs: f64) -> f64 {
    if tau <= 0.0 {
        0.0
    } else {
        math::exp(-1.0 / (tau * fs))
    }
}

impl CompressorParams {
    /// Static gain in dB (never positive) for a detector level in dB.
    pub fn static_gain_db(&self, level_db: f64) -> f64 {
        let (t, w, r) = (self.threshold_db, self.knee_db.max(0.0), self.ratio);
        let over = level_db - t;
        if 2.0 * over < -w || level_db == f64::NEG_INFINITY {
            0.0
        } else if w > 0.0 && 2.0 * over.abs() <= w {
            let x = over + w / 2.0;
            (1.0 / r - 1.0) * x * x / (2.0 * w)
        } else {
            t + over / r - level_db
        }
    }

    /// Per-frame linear gain for a planar buffer at rate `fs`.
    pub fn gain_trace(&self, channels: &[Vec<f32>], fs: f64) -> Vec<f64> {
        let frames = channels.first().map_or(0, Vec::len);
        let a_att = smoothing(self.attack_s, fs);
        let a_rel = smoothing(self.release_s, fs);
        let mut env = 0.0f64;
        let mut out = Vec::with_capacity(frames);
        for n in 0..frames {
            let peak = channels.iter().map(|c| (c[n] as f64).abs()).fold(0.0, f64::max);
            let a = if peak > env { a_att } else { a_rel };
            env = a * env + (1.0 - a) * peak;
            let gdb = self.static_gain_db(math::gain_to_db(env));
            out.push(if gdb == 0.0 { 1.0 } else { math::db_to_gain(gdb) });
        }
        out
    }
}

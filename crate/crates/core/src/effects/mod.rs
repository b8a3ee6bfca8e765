//! Offline processing rack: cookbook biquads, a dynamics compressor,
//! convolution, gain and linear fades, applied to whole buffers in order.

mod compressor;
mod doc;

use thiserror::Error;

use crate::audio::{resample, AudioBuffer};
use crate::dsp::{fft_convolve, math, Biquad, BiquadCoeffs, BiquadError, BiquadKind};

pub use compressor::CompressorParams;
pub use doc::{parse_effects, EffectsDocError};

/// Longest impulse response the convolver accepts, seconds.
pub const MAX_IMPULSE_SECS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: BiquadKind,
    pub fc: f64,
    pub q: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EffectSpec {
    Filter(FilterSpec),
    Compressor(CompressorParams),
    Convolver { impulse: AudioBuffer },
    Gain { gain_db: f64 },
    FadeIn { duration_s: f64 },
    FadeOut { duration_s: f64 },
}

impl EffectSpec {
    pub fn filter(kind: BiquadKind, fc: f64, q: f64, gain_db: f64) -> Self {
        Self::Filter(FilterSpec { kind, fc, q, gain_db })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Filter(f) => match f.kind {
                BiquadKind::Lowpass => "lowpass",
                BiquadKind::Highpass => "highpass",
                BiquadKind::Bandpass => "bandpass",
                BiquadKind::Lowshelf => "lowshelf",
                BiquadKind::Highshelf => "highshelf",
                BiquadKind::Peaking => "peaking",
                BiquadKind::Notch => "notch",
            },
            Self::Compressor(_) => "compressor",
            Self::Convolver { .. } => "convolver",
            Self::Gain { .. } => "gain",
            Self::FadeIn { .. } => "fade_in",
            Self::FadeOut { .. } => "fade_out",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EffectError {
    #[error(transparent)]
    Filter(#[from] BiquadError),
    #[error("invalid {param}: {message}")]
    Param { param: &'static str, message: String },
    #[error("impulse response of {secs:.2} s exceeds the {MAX_IMPULSE_SECS} s limit")]
    ImpulseTooLong { secs: f64 },
    #[error("impulse has {impulse} channels, input has {input}; use a mono impulse or match the input")]
    ImpulseChannels { impulse: usize, input: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("effect {index} ({name}): {error}")]
pub struct ChainError {
    pub index: usize,
    pub name: &'static str,
    pub error: EffectError,
}

fn check(cond: bool, param: &'static str, message: impl FnOnce() -> String) -> Result<(), EffectError> {
    if cond {
        Ok(())
    } else {
        Err(EffectError::Param { param, message: message() })
    }
}

fn fade_len(duration_s: f64, fs: u32, frames: usize) -> Result<usize, EffectError> {
    check(duration_s >= 0.0 && duration_s.is_finite(), "duration_s", || {
        format!("must be finite and non-negative, got {duration_s}")
    })?;
    Ok(((duration_s * fs as f64).round() as usize).min(frames))
}

/// Applies one effect to a whole buffer.
pub fn process_effect(buf: &AudioBuffer, spec: &EffectSpec) -> Result<AudioBuffer, EffectError> {
    let fs = buf.sample_rate();
    let mut out = buf.clone();
    match spec {
        EffectSpec::Filter(f) => {
            let coeffs = BiquadCoeffs::design(f.kind, f.fc, f.q, f.gain_db, fs as f64)?;
            for ch in out.channels_mut() {
                Biquad::new(coeffs).process_in_place(ch);
            }
        }
        EffectSpec::Compressor(p) => {
            check(p.ratio >= 1.0 && p.ratio.is_finite(), "ratio", || format!("must be >= 1, got {}", p.ratio))?;
            check(p.attack_s >= 0.0 && p.attack_s.is_finite(), "attack_s", || {
                format!("must be >= 0, got {}", p.attack_s)
            })?;
            check(p.release_s >= 0.0 && p.release_s.is_finite(), "release_s", || {
                format!("must be >= 0, got {}", p.release_s)
            })?;
            check(p.knee_db >= 0.0 && p.knee_db.is_finite(), "knee_db", || {
                format!("must be >= 0, got {}", p.knee_db)
            })?;
            check(p.threshold_db.is_finite(), "threshold_db", || "must be finite".into())?;
            let gains = p.gain_trace(buf.channels(), fs as f64);
            for ch in out.channels_mut() {
                for (s, g) in ch.iter_mut().zip(&gains) {
                    if *g != 1.0 {
                        *s = (*s as f64 * g) as f32;
                    }
                }
            }
        }
        EffectSpec::Convolver { impulse } => {
            let secs = impulse.duration_secs();
            if secs > MAX_IMPULSE_SECS {
                return Err(EffectError::ImpulseTooLong { secs });
            }
            let (ni, nb) = (impulse.num_channels(), buf.num_channels());
            if ni != 1 && ni != nb {
                return Err(EffectError::ImpulseChannels { impulse: ni, input: nb });
            }
            let impulse = resample(impulse, fs);
            let channels = buf
                .channels()
                .iter()
                .enumerate()
                .map(|(c, x)| {
                    let h: Vec<f64> = impulse.channel(if ni == 1 { 0 } else { c }).iter().map(|&v| v as f64).collect();
                    let x: Vec<f64> = x.iter().map(|&v| v as f64).collect();
                    fft_convolve(&x, &h).into_iter().map(|v| v as f32).collect()
                })
                .collect();
            out = AudioBuffer::new(fs, channels).expect("equal-length convolutions");
        }
        EffectSpec::Gain { gain_db } => {
            check(gain_db.is_finite(), "gain_db", || "must be finite".into())?;
            let g = math::db_to_gain(*gain_db);
            for ch in out.channels_mut() {
                ch.iter_mut().for_each(|s| *s = (*s as f64 * g) as f32);
            }
        }
        EffectSpec::FadeIn { duration_s } => {
            let d = fade_len(*duration_s, fs, buf.frames())?;
            for ch in out.channels_mut() {
                for (n, s) in ch.iter_mut().take(d).enumerate() {
                    *s = (*s as f64 * n as f64 / d as f64) as f32;
                }
            }
        }
        EffectSpec::FadeOut { duration_s } => {
            let d = fade_len(*duration_s, fs, buf.frames())?;
            for ch in out.channels_mut() {
                for (k, s) in ch.iter_mut().rev().take(d).enumerate() {
                    *s = (*s as f64 * k as f64 / d as f64) as f32;
                }
            }
        }
    }
    Ok(out)
}

/// Applies `specs` left to right.
pub fn render_chain(buf: &AudioBuffer, specs: &[EffectSpec]) -> Result<AudioBuffer, ChainError> {
    specs.iter().enumerate().try_fold(buf.clone(), |acc, (index, spec)| {
        process_effect(&acc, spec).map_err(|error| ChainError {
            index,
            name: spec.name(),
            error,
        })
    })
}

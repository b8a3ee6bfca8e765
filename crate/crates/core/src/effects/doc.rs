//! JSON form of an effect chain.
//!
//! ```json
//! {"effects": [
//!   {"kind": "highpass", "fc": 80, "q": 0.7071},
//!   {"kind": "compressor", "threshold_db": -18, "ratio": 3},
//!   {"kind": "convolver", "impulse": "hall.wav"},
//!   {"kind": "fade_out", "duration_s": 0.5}
//! ]}
//! ```
//!
//! A bare array is accepted too. Convolver impulses are file references
//! resolved by the caller.

use serde::Deserialize;
use thiserror::Error;

use super::{CompressorParams, EffectSpec, FilterSpec};
use crate::audio::AudioBuffer;
use crate::dsp::BiquadKind;

#[derive(Debug, Error)]
pub enum EffectsDocError {
    #[error("invalid effects document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("effect {index}: cannot load impulse {path:?}: {message}")]
    Impulse { index: usize, path: String, message: String },
}

fn default_q() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Entry {
    Lowpass { fc: f64, #[serde(default = "default_q")] q: f64 },
    Highpass { fc: f64, #[serde(default = "default_q")] q: f64 },
    Bandpass { fc: f64, #[serde(default = "default_q")] q: f64 },
    Notch { fc: f64, #[serde(default = "default_q")] q: f64 },
    Lowshelf { fc: f64, #[serde(default = "default_q")] q: f64, gain_db: f64 },
    Highshelf { fc: f64, #[serde(default = "default_q")] q: f64, gain_db: f64 },
    Peaking { fc: f64, #[serde(default = "default_q")] q: f64, gain_db: f64 },
    Compressor {
        threshold_db: Option<f64>,
        ratio: Option<f64>,
        attack_s: Option<f64>,
        release_s: Option<f64>,
        knee_db: Option<f64>,
    },
    Convolver { impulse: String },
    Gain { gain_db: f64 },
    FadeIn { duration_s: f64 },
    FadeOut { duration_s: f64 },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Document {
    Wrapped { effects: Vec<Entry> },
    Bare(Vec<Entry>),
}

/// Parses an effect chain, loading convolver impulses through `load_impulse`.
pub fn parse_effects<F, E>(json: &str, mut load_impulse: F) -> Result<Vec<EffectSpec>, EffectsDocError>
where
    F: FnMut(&str) -> Result<AudioBuffer, E>,
    E: std::fmt::Display,
{
    let entries = match serde_json::from_str::<Document>(json) {
        Ok(Document::Wrapped { effects }) | Ok(Document::Bare(effects)) => effects,
        // untagged enums swallow the real cause; retry to report it
        Err(_) => match serde_json::from_str::<serde_json::Value>(json)? {
            serde_json::Value::Object(mut m) if m.contains_key("effects") => {
                serde_json::from_value::<Vec<Entry>>(m.remove("effects").expect("checked"))?
            }
            other => serde_json::from_value::<Vec<Entry>>(other)?,
        },
    };
    let filter = |kind, fc, q, gain_db| EffectSpec::Filter(FilterSpec { kind, fc, q, gain_db });
    entries
        .into_iter()
        .enumerate()
        .map(|(index, e)| {
            Ok(match e {
                Entry::Lowpass { fc, q } => filter(BiquadKind::Lowpass, fc, q, 0.0),
                Entry::Highpass { fc, q } => filter(BiquadKind::Highpass, fc, q, 0.0),
                Entry::Bandpass { fc, q } => filter(BiquadKind::Bandpass, fc, q, 0.0),
                Entry::Notch { fc, q } => filter(BiquadKind::Notch, fc, q, 0.0),
                Entry::Lowshelf { fc, q, gain_db } => filter(BiquadKind::Lowshelf, fc, q, gain_db),
                Entry::Highshelf { fc, q, gain_db } => filter(BiquadKind::Highshelf, fc, q, gain_db),
                Entry::Peaking { fc, q, gain_db } => filter(BiquadKind::Peaking, fc, q, gain_db),
                Entry::Compressor {
                    threshold_db,
                    ratio,
                    attack_s,
                    release_s,
                    knee_db,
                } => {
                    let d = CompressorParams::default();
                    EffectSpec::Compressor(CompressorParams {
                        threshold_db: threshold_db.unwrap_or(d.threshold_db),
                        ratio: ratio.unwrap_or(d.ratio),
                        attack_s: attack_s.unwrap_or(d.attack_s),
                        release_s: release_s.unwrap_or(d.release_s),
                        knee_db: knee_db.unwrap_or(d.knee_db),
                    })
                }
                Entry::Convolver { impulse } => EffectSpec::Convolver {
                    impulse: load_impulse(&impulse).map_err(|e| EffectsDocError::Impulse {
                        index,
                        path: impulse.clone(),
                        message: e.to_string(),
                    })?,
                },
                Entry::Gain { gain_db } => EffectSpec::Gain { gain_db },
                Entry::FadeIn { duration_s } => EffectSpec::FadeIn { duration_s },
                Entry::FadeOut { duration_s } => EffectSpec::FadeOut { duration_s },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_impulses(_: &str) -> Result<AudioBuffer, String> {
        Err("not available".into())
    }

    #[test]
    fn parses_wrapped_and_bare() {
        let a = parse_effects(r#"{"effects":[{"kind":"gain","gain_db":-3}]}"#, no_impulses).unwrap();
        let b = parse_effects(r#"[{"kind":"gain","gain_db":-3}]"#, no_impulses).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![EffectSpec::Gain { gain_db: -3.0 }]);
        assert!(parse_effects("[]", no_impulses).unwrap().is_empty());
    }

    #[test]
    fn defaults_fill_in() {
        let fx = parse_effects(r#"[{"kind":"lowpass","fc":500},{"kind":"compressor","ratio":2}]"#, no_impulses).unwrap();
        assert_eq!(fx[0], EffectSpec::filter(BiquadKind::Lowpass, 500.0, default_q(), 0.0));
        match &fx[1] {
            EffectSpec::Compressor(p) => {
                assert_eq!(p.ratio, 2.0);
                assert_eq!(p.knee_db, CompressorParams::default().knee_db);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn impulse_loader_errors_carry_index() {
        let err = parse_effects(r#"[{"kind":"gain","gain_db":0},{"kind":"convolver","impulse":"ir.wav"}]"#, no_impulses)
            .unwrap_err();
        assert!(matches!(err, EffectsDocError::Impulse { index: 1, .. }));
    }

    #[test]
    fn unknown_kind_is_reported() {
        let err = parse_effects(r#"[{"kind":"flanger"}]"#, no_impulses).unwrap_err();
        assert!(err.to_string().contains("flanger"), "{err}");
    }
}

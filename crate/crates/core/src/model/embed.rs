use thiserror::Error;

use super::{AssetSource, AudioMeta, EmbeddedData, Soundscape};
use crate::audio::{probe_wav, WavError};

pub const WAV_MEDIA_TYPE: &str = "audio/wav";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("source {source_id:?}: could not fetch {uri}: {message}")]
    Resolve {
        source_id: String,
        uri: String,
        message: String,
    },
    #[error("source {source_id:?}: {uri} is not a usable WAV file: {error}")]
    Decode {
        source_id: String,
        uri: String,
        error: WavError,
    },
}

/// Replaces every remote asset reference with its bytes, fetched through
/// `resolver`, and recomputes the asset metadata from the fetched file.
/// Already-embedded assets are left untouched, so the operation is idempotent.
pub fn embed_assets<F, E>(s: &Soundscape, mut resolver: F) -> Result<Soundscape, EmbedError>
where
    F: FnMut(&str) -> Result<Vec<u8>, E>,
    E: std::fmt::Display,
{
    let mut out = s.clone();
    for src in &mut out.sources {
        let AssetSource::Uri(uri) = &src.asset.source else { continue };
        let bytes = resolver(uri).map_err(|e| EmbedError::Resolve {
            source_id: src.id.clone(),
            uri: uri.clone(),
            message: e.to_string(),
        })?;
        let info = probe_wav(&bytes).map_err(|error| EmbedError::Decode {
            source_id: src.id.clone(),
            uri: uri.clone(),
            error,
        })?;
        src.asset.meta = Some(AudioMeta {
            channels: info.channels,
            sample_rate: info.sample_rate,
            duration: info.duration_secs(),
        });
        src.asset.source = AssetSource::Embedded(EmbeddedData {
            media_type: WAV_MEDIA_TYPE.to_owned(),
            data: bytes,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{encode_wav, AudioBuffer, BitDepth};
    use crate::model::{serialize, AssetRef, Room, SoundSource, Vec2};

    fn one_second_wav() -> Vec<u8> {
        encode_wav(&AudioBuffer::mono(22_050, vec![0.1; 22_050]), BitDepth::Pcm16)
    }

    fn scape() -> Soundscape {
        let mut s = Soundscape::new(Room::rectangular(5.0, 5.0, 3.0));
        s.sources.push(SoundSource::new("birds", AssetRef::uri("https://x/birds.wav"), Vec2::ZERO));
        s
    }

    #[test]
    fn embeds_and_reads_metadata() {
        let out = embed_assets(&scape(), |_| Ok::<_, String>(one_second_wav())).unwrap();
        let a = &out.sources[0].asset;
        assert!(a.is_embedded());
        let meta = a.meta.unwrap();
        assert_eq!(meta.duration, 1.0);
        assert_eq!((meta.channels, meta.sample_rate), (1, 22_050));
        assert!(!serialize(&out).unwrap().contains("\"uri\""));
    }

    #[test]
    fn embedding_is_idempotent() {
        let once = embed_assets(&scape(), |_| Ok::<_, String>(one_second_wav())).unwrap();
        let twice = embed_assets(&once, |_| -> Result<Vec<u8>, String> { panic!("nothing to fetch") }).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn resolver_failure_names_the_source() {
        let mut s = scape();
        s.sources[0].id = "bees".into();
        let err = embed_assets(&s, |_| Err("connection refused")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"bees\"") && msg.contains("https://x/birds.wav"), "{msg}");
    }

    #[test]
    fn non_wav_payload_is_rejected() {
        let err = embed_assets(&scape(), |_| Ok::<_, String>(b"ID3 mp3 data".to_vec())).unwrap_err();
        assert!(matches!(err, EmbedError::Decode { .. }));
    }
}

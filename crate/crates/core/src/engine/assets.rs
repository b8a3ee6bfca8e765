use std::collections::HashMap;

use thiserror::Error;

use crate::audio::{decode_wav, AudioBuffer, WavError};
use crate::model::{AssetSource, Soundscape};

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("source {source_id:?}: could not fetch {uri}: {message}")]
    Fetch {
        source_id: String,
        uri: String,
        message: String,
    },
    #[error("source {source_id:?}: {error}")]
    Decode { source_id: String, error: WavError },
}

/// Decodes every source's audio, keyed by source id. Embedded payloads are
/// decoded in place; URI references go through `fetch`.
pub fn load_assets<F, E>(s: &Soundscape, mut fetch: F) -> Result<HashMap<String, AudioBuffer>, AssetError>
where
    F: FnMut(&str) -> Result<Vec<u8>, E>,
    E: std::fmt::Display,
{
    let mut out = HashMap::with_capacity(s.sources.len());
    for src in &s.sources {
        let fetched;
        let bytes = match &src.asset.source {
            AssetSource::Embedded(e) => &e.data,
            AssetSource::Uri(uri) => {
                fetched = fetch(uri).map_err(|e| AssetError::Fetch {
                    source_id: src.id.clone(),
                    uri: uri.clone(),
                    message: e.to_string(),
                })?;
                &fetched
            }
        };
        let buf = decode_wav(bytes).map_err(|error| AssetError::Decode {
            source_id: src.id.clone(),
            error,
        })?;
        out.insert(src.id.clone(), buf);
    }
    Ok(out)
}

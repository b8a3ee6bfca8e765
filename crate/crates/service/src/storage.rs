//! Content-addressed file storage.
//!
//! ```text
//! <root>/index.json
//! <root>/assets/<id>.wav
//! <root>/soundscapes/<id>.json
//! ```
//!
//! Ids are the first 16 hex digits of the SHA-256 of the stored bytes, so
//! storing the same thing twice yields the same id. Every file is written to
//! a temporary file in the same directory and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use soundscape::audio::{probe_wav, WavError};
use thiserror::Error;

pub const ID_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("storage I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("storage index is corrupt: {0}")]
    Index(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub id: String,
    pub sha256: String,
    pub bytes: u64,
    pub created_at: u64,
    pub duration: f64,
    pub channels: u16,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundscapeRecord {
    pub id: String,
    pub sha256: String,
    pub created_at: u64,
    pub title: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    assets: BTreeMap<String, AssetRecord>,
    soundscapes: BTreeMap<String, SoundscapeRecord>,
}

#[derive(Debug)]
pub struct Storage {
    root: PathBuf,
    index: Mutex<Index>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// True for strings shaped like a storage id.
pub fn is_id(s: &str) -> bool {
    s.len() == ID_LEN && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl Storage {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let root = root.into();
        fs::create_dir_all(root.join("assets"))?;
        fs::create_dir_all(root.join("soundscapes"))?;
        let index = match fs::read(root.join("index.json")) {
            Ok(bytes) => serde_json::from_slice(&bytes)?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Index::default(),
            Err(e) => return Err(e.into()),
        };
        Ok(Self {
            root,
            index: Mutex::new(index),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn save_index(&self, index: &Index) -> Result<(), StorageError> {
        let text = serde_json::to_vec_pretty(index)?;
        write_atomic(&self.root.join("index.json"), &text)?;
        Ok(())
    }

    fn asset_path(&self, id: &str) -> PathBuf {
        self.root.join("assets").join(format!("{id}.wav"))
    }

    fn soundscape_path(&self, id: &str) -> PathBuf {
        self.root.join("soundscapes").join(format!("{id}.json"))
    }

    /// Stores a WAV file after checking that it decodes.
    pub fn put_asset(&self, bytes: &[u8]) -> Result<AssetRecord, StorageError> {
        let info = probe_wav(bytes)?;
        let sha256 = sha256_hex(bytes);
        let id = sha256[..ID_LEN].to_owned();
        let mut index = self.index.lock().expect("storage lock");
        if let Some(r) = index.assets.get(&id) {
            if self.asset_path(&id).exists() {
                return Ok(r.clone());
            }
        }
        write_atomic(&self.asset_path(&id), bytes)?;
        let record = AssetRecord {
            id: id.clone(),
            sha256,
            bytes: bytes.len() as u64,
            created_at: now(),
            duration: info.duration_secs(),
            channels: info.channels,
            sample_rate: info.sample_rate,
        };
        index.assets.insert(id, record.clone());
        self.save_index(&index)?;
        Ok(record)
    }

    pub fn asset_record(&self, id: &str) -> Option<AssetRecord> {
        self.index.lock().expect("storage lock").assets.get(id).cloned()
    }

    pub fn asset(&self, id: &str) -> Result<Option<Vec<u8>>, StorageError> {
        if !is_id(id) || self.asset_record(id).is_none() {
            return Ok(None);
        }
        match fs::read(self.asset_path(id)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Stores a canonical soundscape document.
    pub fn put_soundscape(&self, doc: &str, title: &str) -> Result<SoundscapeRecord, StorageError> {
        let sha256 = sha256_hex(doc.as_bytes());
        let id = sha256[..ID_LEN].to_owned();
        let mut index = self.index.lock().expect("storage lock");
        if let Some(r) = index.soundscapes.get(&id) {
            if self.soundscape_path(&id).exists() {
                return Ok(r.clone());
            }
        }
        write_atomic(&self.soundscape_path(&id), doc.as_bytes())?;
        let record = SoundscapeRecord {
            id: id.clone(),
            sha256,
            created_at: now(),
            title: title.to_owned(),
        };
        index.soundscapes.insert(id, record.clone());
        self.save_index(&index)?;
        Ok(record)
    }

    pub fn soundscape(&self, id: &str) -> Result<Option<String>, StorageError> {
        if !is_id(id) || !self.index.lock().expect("storage lock").soundscapes.contains_key(id) {
            return Ok(None);
        }
        match fs::read_to_string(self.soundscape_path(id)) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Maps an asset URI naming this store (`/assets/<id>`, `assets/<id>` or a
    /// bare id) to the stored id.
    pub fn asset_id_for_uri(&self, uri: &str) -> Option<String> {
        let id = uri
            .strip_prefix("/assets/")
            .or_else(|| uri.strip_prefix("assets/"))
            .unwrap_or(uri);
        let id = id.strip_suffix(".wav").unwrap_or(id);
        (is_id(id) && self.asset_record(id).is_some()).then(|| id.to_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use soundscape::audio::{encode_wav, AudioBuffer, BitDepth};

    fn wav(n: usize) -> Vec<u8> {
        encode_wav(&AudioBuffer::mono(48_000, vec![0.1; n]), BitDepth::Pcm16)
    }

    #[test]
    fn content_addressed_and_persistent() {
        let dir = tempfile::tempdir().unwrap();
        let s = Storage::open(dir.path()).unwrap();
        let a = s.put_asset(&wav(48_000)).unwrap();
        assert_eq!(a.duration, 1.0);
        assert!(is_id(&a.id));
        assert_eq!(s.put_asset(&wav(48_000)).unwrap(), a);
        let b = s.put_asset(&wav(100)).unwrap();
        assert_ne!(a.id, b.id);
        drop(s);
        let s = Storage::open(dir.path()).unwrap();
        assert_eq!(s.asset(&a.id).unwrap().unwrap(), wav(48_000));
        assert_eq!(s.asset_id_for_uri(&format!("/assets/{}", a.id)), Some(a.id.clone()));
        assert_eq!(s.asset_id_for_uri("birds.wav"), None);
    }

    #[test]
    fn rejects_non_wav_and_odd_ids() {
        let dir = tempfile::tempdir().unwrap();
        let s = Storage::open(dir.path()).unwrap();
        assert!(matches!(s.put_asset(b"not audio"), Err(StorageError::Wav(_))));
        assert_eq!(s.asset("../index").unwrap(), None);
        assert_eq!(s.soundscape("0123456789abcdef").unwrap(), None);
    }

    #[test]
    fn soundscapes_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = Storage::open(dir.path()).unwrap();
        let r = s.put_soundscape("{\"a\":1}", "t").unwrap();
        assert_eq!(s.soundscape(&r.id).unwrap().as_deref(), Some("{\"a\":1}"));
        assert!(!dir.path().read_dir().unwrap().any(|e| e.unwrap().file_name().to_string_lossy().starts_with(".tmp")));
    }
}

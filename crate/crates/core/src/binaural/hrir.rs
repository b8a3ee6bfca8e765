//! Head-related impulse response sets.
//!
//! Azimuth is measured counterclockwise from straight ahead, so 90° is the
//! listener's left; elevation is positive upward. Impulse responses are
//! expected to be time-aligned: interaural delay is added separately by the
//! spatializer.
//!
//! On disk a set is a directory holding `index.json` and one stereo WAV per
//! direction (channel 0 = left ear, channel 1 = right ear):
//!
//! ```json
//! {"name": "kemar-lite", "sample_rate": 48000, "length": 256,
//!  "grid": [{"azimuth": 0, "elevation": 0}, {"azimuth": 5, "elevation": 0, "file": "custom.wav"}]}
//! ```
//!
//! Without a `file` entry the WAV is looked up as `az{A}_el{E}.wav`, with
//! angles printed as integers when whole (`az355_el-30.wav`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{decode_wav, encode_wav, resample, AudioBuffer, BitDepth, WavError};
use crate::dsp::math;

#[derive(Debug, Error)]
pub enum HrirError {
    #[error("HRIR set has no directions")]
    EmptyGrid,
    #[error("direction {index}: azimuth {azimuth} must be in [0, 360) and elevation {elevation} in [-90, 90]")]
    Angle { index: usize, azimuth: f64, elevation: f64 },
    #[error("direction {index}: impulse responses must both be {expected} taps, got {left} and {right}")]
    Length { index: usize, expected: usize, left: usize, right: usize },
    #[error("HRIR length must be at least one tap")]
    ZeroLength,
    #[error("sample rate must be positive")]
    SampleRate,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid index: {source}")]
    Index { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Wav { path: PathBuf, source: WavError },
    #[error("{path}: expected a stereo file, found {channels} channel(s)")]
    NotStereo { path: PathBuf, channels: usize },
    #[error("{path}: sample rate {found} differs from the index's {expected}")]
    RateMismatch { path: PathBuf, found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    fn unit_vector(self) -> [f64; 3] {
        let (az, el) = (self.azimuth.to_radians(), self.elevation.to_radians());
        let ce = math::cos(el);
        [ce * math::cos(az), ce * math::sin(az), math::sin(el)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrirSet {
    name: String,
    sample_rate: u32,
    length: usize,
    grid: Vec<Direction>,
    left: Vec<Vec<f32>>,
    right: Vec<Vec<f32>>,
    unit: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    azimuth: f64,
    elevation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Index {
    #[serde(default)]
    name: String,
    sample_rate: u32,
    length: usize,
    grid: Vec<IndexEntry>,
}

fn fmt_angle(a: f64) -> String {
    if a.fract() == 0.0 {
        format!("{}", a as i64)
    } else {
        format!("{a}")
    }
}

/// Conventional file name for a direction inside a set directory.
pub fn direction_file_name(d: Direction) -> String {
    format!("az{}_el{}.wav", fmt_angle(d.azimuth), fmt_angle(d.elevation))
}

impl HrirSet {
    pub fn new(
        name: impl Into<String>,
        sample_rate: u32,
        grid: Vec<Direction>,
        left: Vec<Vec<f32>>,
        right: Vec<Vec<f32>>,
    ) -> Result<Self, HrirError> {
        if grid.is_empty() {
            return Err(HrirError::EmptyGrid);
        }
        if sample_rate == 0 {
            return Err(HrirError::SampleRate);
        }
        let length = left.first().map_or(0, Vec::len);
        if length == 0 {
            return Err(HrirError::ZeroLength);
        }
        for (index, d) in grid.iter().enumerate() {
            if !(0.0..360.0).contains(&d.azimuth) || !(-90.0..=90.0).contains(&d.elevation) {
                return Err(HrirError::Angle {
                    index,
                    azimuth: d.azimuth,
                    elevation: d.elevation,
                });
            }
            let (l, r) = (left.get(index).map_or(0, Vec::len), right.get(index).map_or(0, Vec::len));
            if l != length || r != length {
                return Err(HrirError::Length {
                    index,
                    expected: length,
                    left: l,
                    right: r,
                });
            }
        }
        let unit = grid.iter().map(|d| d.unit_vector()).collect();
        Ok(Self {
            name: name.into(),
            sample_rate,
            length,
            grid,
            left,
            right,
            unit,
        })
    }

    /// A set whose every response is a unit impulse on both ears.
    pub fn identity(sample_rate: u32, grid: Vec<Direction>) -> Self {
        let n = grid.len();
        Self::new("identity", sample_rate, grid, vec![vec![1.0]; n], vec![vec![1.0]; n]).expect("valid identity set")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Taps per impulse response.
    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> &[Direction] {
        &self.grid
    }

    pub fn left(&self, index: usize) -> &[f32] {
        &self.left[index]
    }

    pub fn right(&self, index: usize) -> &[f32] {
        &self.right[index]
    }

    /// Index of the grid direction at the smallest great-circle angle from
    /// the query; the lowest index wins ties.
    pub fn select(&self, azimuth_deg: f64, elevation_deg: f64) -> usize {
        let q = Direction::new(azimuth_deg, elevation_deg.clamp(-90.0, 90.0)).unit_vector();
        let mut best = 0;
        let mut best_cos = f64::NEG_INFINITY;
        for (i, u) in self.unit.iter().enumerate() {
            // larger cosine = smaller angle
            let c = u[0] * q[0] + u[1] * q[1] + u[2] * q[2];
            if c > best_cos {
                best_cos = c;
                best = i;
            }
        }
        best
    }

    /// Converts every response to `rate`, keeping the tap count consistent.
    pub fn resampled(&self, rate: u32) -> Self {
        if rate == self.sample_rate {
            return self.clone();
        }
        let conv = |irs: &[Vec<f32>]| -> Vec<Vec<f32>> {
            irs.iter()
                .map(|ir| resample(&AudioBuffer::mono(self.sample_rate, ir.clone()), rate).into_channels().remove(0))
                .collect()
        };
        Self::new(self.name.clone(), rate, self.grid.clone(), conv(&self.left), conv(&self.right))
            .expect("resampling preserves a valid set")
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, HrirError> {
        let dir = dir.as_ref();
        let index_path = dir.join("index.json");
        let text = fs::read_to_string(&index_path).map_err(|source| HrirError::Io {
            path: index_path.clone(),
            source,
        })?;
        let index: Index = serde_json::from_str(&text).map_err(|source| HrirError::Index {
            path: index_path.clone(),
            source,
        })?;
        let mut grid = Vec::with_capacity(index.grid.len());
        let mut left = Vec::with_capacity(index.grid.len());
        let mut right = Vec::with_capacity(index.grid.len());
        for e in &index.grid {
            let d = Direction::new(e.azimuth, e.elevation);
            let path = dir.join(e.file.clone().unwrap_or_else(|| direction_file_name(d)));
            let bytes = fs::read(&path).map_err(|source| HrirError::Io {
                path: path.clone(),
                source,
            })?;
            let buf = decode_wav(&bytes).map_err(|source| HrirError::Wav {
                path: path.clone(),
                source,
            })?;
            if buf.num_channels() != 2 {
                return Err(HrirError::NotStereo {
                    path,
                    channels: buf.num_channels(),
                });
            }
            if buf.sample_rate() != index.sample_rate {
                return Err(HrirError::RateMismatch {
                    path,
                    found: buf.sample_rate(),
                    expected: index.sample_rate,
                });
            }
            let mut ch = buf.into_channels();
            let r = ch.pop().expect("two channels");
            let l = ch.pop().expect("two channels");
            grid.push(d);
            left.push(l);
            right.push(r);
        }
        let set = Self::new(index.name, index.sample_rate, grid, left, right)?;
        if set.length != index.length {
            return Err(HrirError::Length {
                index: 0,
                expected: index.length,
                left: set.length,
                right: set.length,
            });
        }
        Ok(set)
    }

    /// Writes the set in the directory format read by [`Self::load_dir`].
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), HrirError> {
        let dir = dir.as_ref();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| HrirError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let index = Index {
            name: self.name.clone(),
            sample_rate: self.sample_rate,
            length: self.length,
            grid: self
                .grid
                .iter()
                .map(|d| IndexEntry {
                    azimuth: d.azimuth,
                    elevation: d.elevation,
                    file: None,
                })
                .collect(),
        };
        let index_path = dir.join("index.json");
        let text = serde_json::to_string_pretty(&index).expect("index serializes");
        fs::write(&index_path, text).map_err(io(&index_path))?;
        for (i, d) in self.grid.iter().enumerate() {
            let buf = AudioBuffer::stereo(self.sample_rate, self.left[i].clone(), self.right[i].clone())
                .expect("equal-length ears");
            let path = dir.join(direction_file_name(*d));
            fs::write(&path, encode_wav(&buf, BitDepth::Float32)).map_err(io(&path))?;
        }
        Ok(())
    }
}

//! Soundscape documents: rooms, listener defaults and sound sources.
//!
//! Coordinates are metres in a top-down room frame with the origin at the
//! room centre, `+x` toward the room's width (right on the floor plan) and
//! `+y` toward its depth (up on the floor plan). Yaw 0 faces `+y`; positive
//! yaw turns counterclockwise. Heights are measured from the listener's ear
//! plane, which sits [`EAR_HEIGHT`] metres above the floor.

mod embed;
mod json;
mod validate;

use std::collections::BTreeMap;

use crate::dsp::math;

pub use embed::{embed_assets, EmbedError, WAV_MEDIA_TYPE};
pub use json::{canonical_number, deserialize, serialize, to_canonical_json, ParseError, Parsed, SerializeError};
pub use validate::{validate, Issue, Severity, ValidationReport};

pub const FORMAT_VERSION: u32 = 1;
/// Listener ear height above the floor, metres.
pub const EAR_HEIGHT: f64 = 1.6;
pub const MIN_HEAD_CIRCUMFERENCE: f64 = 0.3;
pub const MAX_HEAD_CIRCUMFERENCE: f64 = 0.8;
pub const DEFAULT_HEAD_CIRCUMFERENCE: f64 = 0.55;

/// Fields a reader did not recognise, kept verbatim for the next writer.
pub type Extra = BTreeMap<String, serde_json::Value>;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.x * self.x + self.y * self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation by `angle` radians.
    pub fn rotated(self, angle: f64) -> Vec2 {
        let (s, c) = (math::sin(angle), math::cos(angle));
        Vec2::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RoomShape {
    #[default]
    Rectangular,
    /// Ellipse with semi-axes `width / 2` and `depth / 2`.
    Round,
}

/// Inline binary payload with its media type (base64 in documents).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddedData {
    pub media_type: String,
    pub data: Vec<u8>,
}

/// Floor-plan image, carried through untouched.
#[derive(Debug, Clone, PartialEq)]
pub enum Floorplan {
    Url(String),
    Embedded(EmbeddedData),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub shape: RoomShape,
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub floorplan: Option<Floorplan>,
    pub extra: Extra,
}

/// Slack allowed on boundary tests so points projected onto the boundary
/// still count as inside.
const BOUNDARY_EPS: f64 = 1e-9;

impl Room {
    pub fn rectangular(width: f64, depth: f64, height: f64) -> Self {
        Self {
            shape: RoomShape::Rectangular,
            width,
            depth,
            height,
            floorplan: None,
            extra: Extra::new(),
        }
    }

    pub fn round(width: f64, depth: f64, height: f64) -> Self {
        Self {
            shape: RoomShape::Round,
            ..Self::rectangular(width, depth, height)
        }
    }

    /// Boundary points count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        let (hw, hd) = (self.width / 2.0, self.depth / 2.0);
        match self.shape {
            RoomShape::Rectangular => {
                p.x.abs() <= hw * (1.0 + BOUNDARY_EPS) && p.y.abs() <= hd * (1.0 + BOUNDARY_EPS)
            }
            RoomShape::Round => {
                let q = (p.x / hw) * (p.x / hw) + (p.y / hd) * (p.y / hd);
                q <= 1.0 + BOUNDARY_EPS
            }
        }
    }

    /// Nearest admissible point: per-axis clamp for rectangular rooms,
    /// radial projection onto the ellipse for round ones.
    pub fn clamp(&self, p: Vec2) -> Vec2 {
        let (hw, hd) = (self.width / 2.0, self.depth / 2.0);
        match self.shape {
            RoomShape::Rectangular => Vec2::new(p.x.clamp(-hw, hw), p.y.clamp(-hd, hd)),
            RoomShape::Round => {
                let q = (p.x / hw) * (p.x / hw) + (p.y / hd) * (p.y / hd);
                if q <= 1.0 {
                    p
                } else {
                    let s = 1.0 / math::sqrt(q);
                    Vec2::new(p.x * s, p.y * s)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ListenerPose {
    pub position: Vec2,
    pub yaw: f64,
}

impl ListenerPose {
    pub fn new(position: Vec2, yaw: f64) -> Self {
        Self { position, yaw }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ListenerConfig {
    pub position: Vec2,
    pub yaw: f64,
    pub head_circumference: f64,
    pub master_gain_db: f64,
    pub extra: Extra,
}

impl Default for ListenerConfig {
    fn default() -> Self {
        Self {
            position: Vec2::ZERO,
            yaw: 0.0,
            head_circumference: DEFAULT_HEAD_CIRCUMFERENCE,
            master_gain_db: 0.0,
            extra: Extra::new(),
        }
    }
}

impl ListenerConfig {
    pub fn pose(&self) -> ListenerPose {
        ListenerPose::new(self.position, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositionMode {
    /// Room frame.
    #[default]
    Absolute,
    /// Listener frame; the source moves rigidly with the listener.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimingMode {
    #[default]
    AfterCompletes,
    AfterStarts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConstraint {
    pub after_source: String,
    pub mode: TimingMode,
    pub extra: Extra,
}

impl TimingConstraint {
    pub fn after_completes(id: impl Into<String>) -> Self {
        Self {
            after_source: id.into(),
            mode: TimingMode::AfterCompletes,
            extra: Extra::new(),
        }
    }

    pub fn after_starts(id: impl Into<String>) -> Self {
        Self {
            mode: TimingMode::AfterStarts,
            ..Self::after_completes(id)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssetSource {
    Uri(String),
    Embedded(EmbeddedData),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AudioMeta {
    pub channels: u16,
    pub sample_rate: u32,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetRef {
    pub source: AssetSource,
    pub meta: Option<AudioMeta>,
    pub extra: Extra,
}

impl AssetRef {
    pub fn uri(uri: impl Into<String>) -> Self {
        Self {
            source: AssetSource::Uri(uri.into()),
            meta: None,
            extra: Extra::new(),
        }
    }

    pub fn embedded(media_type: impl Into<String>, data: Vec<u8>) -> Self {
        Self {
            source: AssetSource::Embedded(EmbeddedData {
                media_type: media_type.into(),
                data,
            }),
            meta: None,
            extra: Extra::new(),
        }
    }

    pub fn is_embedded(&self) -> bool {
        matches!(self.source, AssetSource::Embedded(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundSource {
    pub id: String,
    pub name: String,
    pub asset: AssetRef,
    pub position_mode: PositionMode,
    pub position: Vec2,
    /// Height above the ear plane, metres.
    pub elevation: f64,
    pub gain_db: f64,
    pub looping: bool,
    pub reach_enabled: bool,
    pub reach_radius: f64,
    pub reach_fade_duration: f64,
    pub start_on_enter: bool,
    /// Editor-only flag; has no effect on audio.
    pub hidden: bool,
    pub spatialized: bool,
    pub timings: Vec<TimingConstraint>,
    pub extra: Extra,
}

impl SoundSource {
    /// An absolute, non-looping, spatialized source with reach disabled.
    pub fn new(id: impl Into<String>, asset: AssetRef, position: Vec2) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            asset,
            position_mode: PositionMode::Absolute,
            position,
            elevation: 0.0,
            gain_db: 0.0,
            looping: false,
            reach_enabled: false,
            reach_radius: 1.0,
            reach_fade_duration: 0.0,
            start_on_enter: false,
            hidden: false,
            spatialized: true,
            timings: Vec::new(),
            extra: Extra::new(),
        }
    }

    /// Room-frame position of this source for the given listener pose.
    pub fn resolve_position(&self, listener: &ListenerPose) -> Vec2 {
        match self.position_mode {
            PositionMode::Absolute => self.position,
            PositionMode::Relative => listener.position + self.position.rotated(listener.yaw),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Soundscape {
    pub format_version: u32,
    pub title: String,
    pub description: String,
    pub tags: Vec<String>,
    pub room: Room,
    pub listener: ListenerConfig,
    pub sources: Vec<SoundSource>,
    pub extra: Extra,
}

impl Soundscape {
    pub fn new(room: Room) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            title: String::new(),
            description: String::new(),
            tags: Vec::new(),
            room,
            listener: ListenerConfig::default(),
            sources: Vec::new(),
            extra: Extra::new(),
        }
    }

    pub fn source(&self, id: &str) -> Option<&SoundSource> {
        self.sources.iter().find(|s| s.id == id)
    }

    pub fn source_index(&self, id: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.id == id)
    }
}

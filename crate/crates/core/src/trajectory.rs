//! Scripted listener walks and offline rendering.
//!
//! ```json
//! {"duration": 6.0,
//!  "waypoints": [{"t": 0, "position": [0, -3], "yaw": 0},
//!                {"t": 4, "position": [0, 3], "yaw": 3.1416}]}
//! ```
//!
//! Positions are metres in the room frame and yaw is in radians.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioBuffer, ENGINE_SAMPLE_RATE};
use crate::binaural::{DistanceModel, HrirSet};
use crate::dsp::math;
use crate::engine::{BuildError, ControlMessage, Engine, EngineOptions, Transport, BLOCK_SIZE};
use crate::model::{ListenerPose, Soundscape, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    #[serde(with = "pair")]
    pub position: Vec2,
    pub yaw: f64,
}

mod pair {
    use super::Vec2;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Vec2, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq([v.x, v.y])
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec2, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Vec2::new(x, y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
    pub duration: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("trajectory needs at least one waypoint")]
    Empty,
    #[error("first waypoint must be at t = 0, found {0}")]
    FirstTime(f64),
    #[error("waypoint {0}: times must be strictly increasing")]
    NotIncreasing(usize),
    #[error("waypoint {0}: values must be finite")]
    NotFinite(usize),
    #[error("duration {duration} is shorter than the last waypoint time {last}")]
    Duration { duration: f64, last: f64 },
    #[error("time {t} is outside [0, {duration}]")]
    OutOfRange { t: f64, duration: f64 },
    #[error("invalid trajectory document: {0}")]
    Json(String),
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>, duration: f64) -> Result<Self, TrajectoryError> {
        let t = Self { waypoints, duration };
        t.check()?;
        Ok(t)
    }

    /// A single fixed pose held for `duration` seconds.
    pub fn stationary(pose: ListenerPose, duration: f64) -> Self {
        Self {
            waypoints: vec![Waypoint {
                t: 0.0,
                position: pose.position,
                yaw: pose.yaw,
            }],
            duration,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, TrajectoryError> {
        let t: Trajectory = serde_json::from_str(text).map_err(|e| TrajectoryError::Json(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    pub fn check(&self) -> Result<(), TrajectoryError> {
        let first = self.waypoints.first().ok_or(TrajectoryError::Empty)?;
        for (i, w) in self.waypoints.iter().enumerate() {
            if !(w.t.is_finite() && w.position.is_finite() && w.yaw.is_finite()) {
                return Err(TrajectoryError::NotFinite(i));
            }
        }
        if first.t != 0.0 {
            return Err(TrajectoryError::FirstTime(first.t));
        }
        if let Some(i) = self.waypoints.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(TrajectoryError::NotIncreasing(i + 1));
        }
        let last = self.waypoints.last().expect("nonempty").t;
        if !(self.duration >= last) {
            return Err(TrajectoryError::Duration {
                duration: self.duration,
                last,
            });
        }
        Ok(())
    }

    /// Pose at time `t`: linear in position, shortest arc in yaw, held after
    /// the last waypoint.
    pub fn pose_at(&self, t: f64) -> Result<ListenerPose, TrajectoryError> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(TrajectoryError::OutOfRange {
                t,
                duration: self.duration,
            });
        }
        let w = &self.waypoints;
        let k = w.partition_point(|p| p.t <= t);
        let a = w[k - 1];
        if k == w.len() || a.t == t {
            return Ok(ListenerPose::new(a.position, a.yaw));
        }
        let b = w[k];
        let u = (t - a.t) / (b.t - a.t);
        let position = Vec2::new(a.position.x + (b.position.x - a.position.x) * u, a.position.y + (b.position.y - a.position.y) * u);
        let turn = math::wrap_pi(b.yaw - a.yaw);
        Ok(ListenerPose::new(position, math::wrap_pi(a.yaw + turn * u)))
    }
}

/// Frames produced for a trajectory: the duration rounded up to whole blocks.
pub fn render_frames(duration: f64) -> usize {
    let blocks = (duration * ENGINE_SAMPLE_RATE as f64 / BLOCK_SIZE as f64).ceil() as usize;
    blocks * BLOCK_SIZE
}

/// Walks `traj` through a fresh engine and returns the recorded stereo output.
pub fn render_offline(
    scape: &Soundscape,
    traj: &Trajectory,
    assets: &HashMap<String, AudioBuffer>,
    hrirs: Arc<HrirSet>,
    model: DistanceModel,
    options: EngineOptions,
) -> Result<AudioBuffer, RenderError> {
    traj.check()?;
    let mut engine = Engine::build(scape.clone(), assets, hrirs, model, options)?;
    let set_pose = |engine: &mut Engine, p: ListenerPose| {
        engine
            .apply(ControlMessage::SetPose {
                position: p.position,
                yaw: p.yaw,
            })
            .expect("trajectory poses are finite")
    };
    set_pose(&mut engine, traj.pose_at(0.0)?);
    engine
        .apply(ControlMessage::SetTransport {
            state: Transport::Playing,
        })
        .expect("transport change cannot fail");
    engine.apply(ControlMessage::StartRecord).expect("start cannot fail");
    let blocks = render_frames(traj.duration) / BLOCK_SIZE;
    for b in 0..blocks {
        let t = (b * BLOCK_SIZE) as f64 / ENGINE_SAMPLE_RATE as f64;
        set_pose(&mut engine, traj.pose_at(t.min(traj.duration))?);
        engine.process_block();
    }
    Ok(engine
        .apply(ControlMessage::StopRecord)
        .expect("recording was started")
        .expect("stop returns the recording"))
}

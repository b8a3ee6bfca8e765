//! Reach gating: a source is audible only while the listener is within its
//! reach circle, with linear fades in time on the way in and out.

use crate::model::{ListenerPose, SoundSource};

/// Whether the listener is inside the reach circle. The boundary counts as
/// inside; sources without reach are always inside.
pub fn inside(src: &SoundSource, pose: &ListenerPose) -> bool {
    !src.reach_enabled || src.resolve_position(pose).distance(pose.position) <= src.reach_radius
}

pub fn target(src: &SoundSource, pose: &ListenerPose) -> f64 {
    if inside(src, pose) {
        1.0
    } else {
        0.0
    }
}

/// Per-sample gain change for the source's fade duration.
pub fn step(src: &SoundSource, fs: f64) -> f64 {
    if src.reach_fade_duration > 0.0 {
        1.0 / (src.reach_fade_duration * fs)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachSmoother {
    value: f64,
}

impl Default for ReachSmoother {
    fn default() -> Self {
        Self::new()
    }
}

impl ReachSmoother {
    pub fn new() -> Self {
        Self { value: 1.0 }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn snap(&mut self, target: f64) {
        self.value = target;
    }

    /// Moves one sample toward `target` and returns the new value.
    #[inline]
    pub fn advance(&mut self, target: f64, step: f64) -> f64 {
        if self.value < target {
            self.value = (self.value + step).min(target);
        } else if self.value > target {
            self.value = (self.value - step).max(target);
        }
        self.value
    }
}

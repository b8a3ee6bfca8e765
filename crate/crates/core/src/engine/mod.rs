//! The runtime audio graph.
//!
//! Every source gets a lane: a player reading its mono 48 kHz asset, a gain
//! node, a reach gate and either a binaural spatializer or a bypass that
//! copies the signal to both ears at unity. Lanes are summed, scaled by the
//! master gain and optionally teed into a recorder.
//!
//! The engine runs in blocks of [`BLOCK_SIZE`] frames. Control messages are
//! only applied at block boundaries, either directly through
//! [`Engine::apply`] or by draining the queue fed through
//! [`Engine::sender`], so a given message sequence always renders the same
//! samples.
//!
//! # Scheduling
//!
//! At each block boundary, while the transport plays, a source that is armed
//! starts when every `after_completes` dependency has completed at least once,
//! every `after_starts` dependency has started, and, for `start_on_enter`
//! sources with reach, the listener is inside the reach circle. The check is
//! repeated until nothing changes, so `after_starts` chains start together.
//! Completions are noticed while rendering, so `after_completes` dependents
//! start on the next boundary. Looping sources complete at every wrap and keep
//! playing. A `start_on_enter` source re-arms once it has completed and the
//! listener has left; entering again restarts it from the beginning.

mod assets;
mod control;
mod reach;

use std::collections::HashMap;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;

use thiserror::Error;

pub use assets::{load_assets, AssetError};
pub use control::{parse_value, ControlError, ControlMessage, ParamValue, SourceParam, Transport};
pub use reach::ReachSmoother;

use crate::audio::{to_engine_mono, AudioBuffer, ENGINE_SAMPLE_RATE};
use crate::binaural::{DistanceModel, HrirSet, SourcePose, SpatialMode, SpatializerError, SpatializerState};
use crate::dsp::math;
use crate::model::{validate, ListenerPose, Soundscape, TimingMode, ValidationReport};

pub const BLOCK_SIZE: usize = 128;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("soundscape is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("no audio supplied for source {0:?}")]
    MissingAsset(String),
    #[error("invalid distance model: {0}")]
    DistanceModel(#[from] crate::binaural::DistanceModelError),
    #[error(transparent)]
    Spatializer(#[from] SpatializerError),
}

/// Something the engine reports back while draining its queue.
#[derive(Debug, Clone, PartialEq)]
pub enum EngineEvent {
    Rejected { message: ControlMessage, error: ControlError },
    Recording(AudioBuffer),
}

#[derive(Debug, Clone)]
struct Lane {
    samples: Arc<Vec<f32>>,
    cursor: usize,
    playing: bool,
    armed: bool,
    started: u32,
    completed: u32,
    enabled: bool,
    gain: f64,
    applied_gain: Option<f64>,
    reach: ReachSmoother,
    spatializer: SpatializerState,
    quiet_blocks: usize,
    deps: Vec<(usize, TimingMode)>,
}

pub struct Engine {
    scape: Soundscape,
    lanes: Vec<Lane>,
    model: DistanceModel,
    pose: ListenerPose,
    master_gain: f64,
    applied_master: Option<f64>,
    transport: Transport,
    recorder: Option<[Vec<f32>; 2]>,
    clock: u64,
    tail_blocks: usize,
    queue: Receiver<ControlMessage>,
    sender: Sender<ControlMessage>,
    events: Vec<EngineEvent>,
    scratch: Vec<f32>,
    gains: Vec<f64>,
    ear: [Vec<f32>; 2],
    mix: [Vec<f64>; 2],
}

/// Options not carried by the soundscape document.
#[derive(Debug, Clone)]
pub struct EngineOptions {
    pub mode: SpatialMode,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            mode: SpatialMode::FullHrir,
        }
    }
}

impl Engine {
    /// Builds the graph for a validated soundscape. `assets` maps source ids
    /// to decoded audio in any layout and rate; each is mixed down to mono
    /// and resampled to 48 kHz here.
    pub fn build(
        scape: Soundscape,
        assets: &HashMap<String, AudioBuffer>,
        hrirs: Arc<HrirSet>,
        model: DistanceModel,
        options: EngineOptions,
    ) -> Result<Self, BuildError> {
        let report = validate(&scape);
        if report.has_errors() {
            return Err(BuildError::Invalid(report));
        }
        model.validate()?;
        let hrirs = if hrirs.sample_rate() == ENGINE_SAMPLE_RATE {
            hrirs
        } else {
            Arc::new(hrirs.resampled(ENGINE_SAMPLE_RATE))
        };
        let template = SpatializerState::new(Arc::clone(&hrirs), options.mode, scape.listener.head_circumference)?;
        let index: HashMap<&str, usize> = scape.sources.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let mut lanes = Vec::with_capacity(scape.sources.len());
        for src in &scape.sources {
            let buf = assets.get(&src.id).ok_or_else(|| BuildError::MissingAsset(src.id.clone()))?;
            let mono = to_engine_mono(buf).into_channels().remove(0);
            lanes.push(Lane {
                samples: Arc::new(mono),
                cursor: 0,
                playing: false,
                armed: false,
                started: 0,
                completed: 0,
                enabled: true,
                gain: math::db_to_gain(src.gain_db),
                applied_gain: None,
                reach: ReachSmoother::new(),
                spatializer: template.clone(),
                quiet_blocks: 0,
                deps: src.timings.iter().map(|t| (index[t.after_source.as_str()], t.mode)).collect(),
            });
        }
        let (sender, queue) = channel();
        let pose = ListenerPose::new(scape.room.clamp(scape.listener.position), scape.listener.yaw);
        Ok(Self {
            master_gain: math::db_to_gain(scape.listener.master_gain_db),
            tail_blocks: hrirs.len().div_ceil(BLOCK_SIZE) + 1,
            scape,
            lanes,
            model,
            pose,
            applied_master: None,
            transport: Transport::Stopped,
            recorder: None,
            clock: 0,
            queue,
            sender,
            events: Vec::new(),
            scratch: vec![0.0; BLOCK_SIZE],
            gains: vec![0.0; BLOCK_SIZE],
            ear: [vec![0.0; BLOCK_SIZE], vec![0.0; BLOCK_SIZE]],
            mix: [vec![0.0; BLOCK_SIZE], vec![0.0; BLOCK_SIZE]],
        })
    }

    /// A handle for queueing messages from other threads.
    pub fn sender(&self) -> Sender<ControlMessage> {
        self.sender.clone()
    }

    /// Rejections and finished recordings produced while draining the queue.
    pub fn take_events(&mut self) -> Vec<EngineEvent> {
        std::mem::take(&mut self.events)
    }

    pub fn soundscape(&self) -> &Soundscape {
        &self.scape
    }

    pub fn listener(&self) -> ListenerPose {
        self.pose
    }

    pub fn transport(&self) -> Transport {
        self.transport
    }

    /// Engine samples rendered so far.
    pub fn sample_clock(&self) -> u64 {
        self.clock
    }

    pub fn is_recording(&self) -> bool {
        self.recorder.is_some()
    }

    fn lane(&self, id: &str) -> Option<&Lane> {
        self.scape.source_index(id).map(|i| &self.lanes[i])
    }

    pub fn is_playing(&self, id: &str) -> bool {
        self.lane(id).is_some_and(|l| l.playing)
    }

    pub fn started_count(&self, id: &str) -> u32 {
        self.lane(id).map_or(0, |l| l.started)
    }

    pub fn completed_count(&self, id: &str) -> u32 {
        self.lane(id).map_or(0, |l| l.completed)
    }

    pub fn play_cursor(&self, id: &str) -> Option<usize> {
        self.lane(id).map(|l| l.cursor)
    }

    /// Current reach gate value, 1 for sources without reach.
    pub fn reach_gain(&self, id: &str) -> Option<f64> {
        self.lane(id).map(|l| l.reach.value())
    }

    /// Applies one message now. Stopping a recording returns it.
    pub fn apply(&mut self, msg: ControlMessage) -> Result<Option<AudioBuffer>, ControlError> {
        match msg {
            ControlMessage::SetPose { position, yaw } => {
                if !position.is_finite() || !yaw.is_finite() {
                    return Err(ControlError::BadPose);
                }
                self.pose = ListenerPose::new(self.scape.room.clamp(position), yaw);
            }
            ControlMessage::SetTransport { state } => self.set_transport(state),
            ControlMessage::SetSourceParam { id, path, value } => {
                let i = self.scape.source_index(&id).ok_or(ControlError::UnknownSource(id))?;
                let param = SourceParam::parse(&path).ok_or_else(|| ControlError::UnknownParam(path.clone()))?;
                let v = parse_value(param, &path, &value)?;
                self.set_param(i, param, v);
            }
            ControlMessage::SetMasterGain { gain_db } => {
                if !gain_db.is_finite() {
                    return Err(ControlError::BadGain);
                }
                self.master_gain = math::db_to_gain(gain_db);
            }
            ControlMessage::StartRecord => self.recorder = Some([Vec::new(), Vec::new()]),
            ControlMessage::StopRecord => {
                let [l, r] = self.recorder.take().ok_or(ControlError::NotRecording)?;
                return Ok(Some(AudioBuffer::stereo(ENGINE_SAMPLE_RATE, l, r).expect("equal channel lengths")));
            }
        }
        Ok(None)
    }

    fn set_param(&mut self, i: usize, param: SourceParam, v: ParamValue) {
        let src = &mut self.scape.sources[i];
        let lane = &mut self.lanes[i];
        match (param, v) {
            (SourceParam::GainDb, ParamValue::Number(x)) => {
                src.gain_db = x;
                lane.gain = math::db_to_gain(x);
            }
            (SourceParam::Volume, ParamValue::Number(x)) => {
                src.gain_db = math::gain_to_db(x);
                lane.gain = x;
            }
            (SourceParam::Position, ParamValue::Point(p)) => src.position = p,
            (SourceParam::Elevation, ParamValue::Number(x)) => src.elevation = x,
            (SourceParam::Loop, ParamValue::Bool(b)) => src.looping = b,
            (SourceParam::ReachEnabled, ParamValue::Bool(b)) => src.reach_enabled = b,
            (SourceParam::ReachRadius, ParamValue::Number(x)) => src.reach_radius = x,
            (SourceParam::ReachFadeDuration, ParamValue::Number(x)) => src.reach_fade_duration = x,
            (SourceParam::StartOnEnter, ParamValue::Bool(b)) => src.start_on_enter = b,
            (SourceParam::Spatialized, ParamValue::Bool(b)) => src.spatialized = b,
            (SourceParam::Hidden, ParamValue::Bool(b)) => src.hidden = b,
            (SourceParam::Enabled, ParamValue::Bool(b)) => lane.enabled = b,
            _ => unreachable!("parse_value returns the variant each parameter needs"),
        }
    }

    fn set_transport(&mut self, state: Transport) {
        if state == self.transport {
            return;
        }
        self.transport = state;
        for (lane, src) in self.lanes.iter_mut().zip(&self.scape.sources) {
            lane.cursor = 0;
            lane.playing = false;
            lane.started = 0;
            lane.completed = 0;
            lane.armed = state == Transport::Playing;
            lane.applied_gain = None;
            lane.quiet_blocks = 0;
            lane.spatializer.reset();
            lane.reach.snap(reach::target(src, &self.pose));
        }
        self.applied_master = None;
    }

    fn drain_queue(&mut self) {
        while let Ok(msg) = self.queue.try_recv() {
            match self.apply(msg.clone()) {
                Ok(Some(rec)) => self.events.push(EngineEvent::Recording(rec)),
                Ok(None) => {}
                Err(error) => self.events.push(EngineEvent::Rejected { message: msg, error }),
            }
        }
    }

    fn schedule(&mut self) {
        loop {
            let mut changed = false;
            for i in 0..self.lanes.len() {
                let src = &self.scape.sources[i];
                let inside = reach::inside(src, &self.pose);
                let lane = &self.lanes[i];
                if !lane.armed && !lane.playing && src.start_on_enter && lane.completed > 0 && !inside {
                    self.lanes[i].armed = true;
                }
                let lane = &self.lanes[i];
                if !lane.armed || lane.playing {
                    continue;
                }
                let ready = lane.deps.iter().all(|&(d, mode)| match mode {
                    TimingMode::AfterCompletes => self.lanes[d].completed > 0,
                    TimingMode::AfterStarts => self.lanes[d].started > 0,
                });
                let entered = !(src.start_on_enter && src.reach_enabled) || inside;
                if ready && entered {
                    let lane = &mut self.lanes[i];
                    lane.armed = false;
                    lane.playing = true;
                    lane.cursor = 0;
                    lane.started += 1;
                    if lane.samples.is_empty() {
                        lane.playing = false;
                        lane.completed += 1;
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Renders the next [`BLOCK_SIZE`] stereo frames.
    pub fn process_block(&mut self) -> [Vec<f32>; 2] {
        let mut left = vec![0.0; BLOCK_SIZE];
        let mut right = vec![0.0; BLOCK_SIZE];
        self.process_block_into(&mut left, &mut right);
        [left, right]
    }

    pub fn process_block_into(&mut self, left: &mut [f32], right: &mut [f32]) {
        assert!(left.len() == BLOCK_SIZE && right.len() == BLOCK_SIZE);
        self.drain_queue();
        if self.transport == Transport::Stopped {
            left.fill(0.0);
            right.fill(0.0);
        } else {
            self.schedule();
            self.render(left, right);
        }
        if let Some(rec) = &mut self.recorder {
            rec[0].extend_from_slice(left);
            rec[1].extend_from_slice(right);
        }
        self.clock += BLOCK_SIZE as u64;
    }

    fn render(&mut self, left: &mut [f32], right: &mut [f32]) {
        let fs = ENGINE_SAMPLE_RATE as f64;
        self.mix.iter_mut().for_each(|m| m.fill(0.0));
        for (lane, src) in self.lanes.iter_mut().zip(&self.scape.sources) {
            // player
            let x = &mut self.scratch;
            x.fill(0.0);
            if lane.playing {
                let data = &lane.samples;
                let mut filled = 0;
                while filled < BLOCK_SIZE && lane.playing {
                    let take = (BLOCK_SIZE - filled).min(data.len() - lane.cursor);
                    x[filled..filled + take].copy_from_slice(&data[lane.cursor..lane.cursor + take]);
                    filled += take;
                    lane.cursor += take;
                    if lane.cursor == data.len() {
                        lane.completed += 1;
                        if src.looping {
                            lane.cursor = 0;
                        } else {
                            lane.playing = false;
                            lane.cursor = 0;
                        }
                    }
                }
            }

            // gain node and reach gate, per sample
            let target = if lane.enabled { lane.gain } else { 0.0 };
            let from = lane.applied_gain.unwrap_or(target);
            lane.applied_gain = Some(target);
            let reach_target = reach::target(src, &self.pose);
            let step = reach::step(src, fs);
            let mut any = false;
            for (n, (s, g)) in x.iter_mut().zip(self.gains.iter_mut()).enumerate() {
                let lg = if from == target {
                    target
                } else {
                    from + (target - from) * ((n + 1) as f64 / BLOCK_SIZE as f64)
                };
                *g = lg * lane.reach.advance(reach_target, step);
                *s = (*s as f64 * *g) as f32;
                any |= *s != 0.0;
            }

            if !src.spatialized {
                for (n, &s) in x.iter().enumerate() {
                    self.mix[0][n] += s as f64;
                    self.mix[1][n] += s as f64;
                }
                continue;
            }
            // after a silent stretch long enough to flush the HRIR tail the
            // lane is skipped until it has signal again
            if !any {
                if lane.quiet_blocks >= self.tail_blocks {
                    continue;
                }
                lane.quiet_blocks += 1;
            } else {
                lane.quiet_blocks = 0;
            }
            let position = src.resolve_position(&self.pose);
            let pose = SourcePose::from_positions(&self.pose, position, src.elevation);
            let [el, er] = &mut self.ear;
            lane.spatializer.process(x, &pose, &self.model, el, er);
            for n in 0..BLOCK_SIZE {
                self.mix[0][n] += el[n] as f64;
                self.mix[1][n] += er[n] as f64;
            }
            if lane.quiet_blocks == self.tail_blocks {
                lane.spatializer.reset();
            }
        }

        let from = self.applied_master.unwrap_or(self.master_gain);
        let to = self.master_gain;
        self.applied_master = Some(to);
        for n in 0..BLOCK_SIZE {
            let g = if from == to {
                to
            } else {
                from + (to - from) * ((n + 1) as f64 / BLOCK_SIZE as f64)
            };
            left[n] = (self.mix[0][n] * g) as f32;
            right[n] = (self.mix[1][n] * g) as f32;
        }
    }
}

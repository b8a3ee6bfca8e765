//! Live audition sessions over a WebSocket at `/session/{soundscape id}`.
//!
//! Client text messages:
//!
//! ```json
//! {"type": "pose", "x": 1.0, "y": -0.5, "yaw": 0.3}
//! {"type": "transport", "value": "play"}
//! {"type": "set", "source": "birds", "path": "gain_db", "value": -6}
//! {"type": "record", "value": "start"}
//! {"type": "master_gain", "gain_db": -3}
//! ```
//!
//! The server first sends `{"type": "ready", ...}` and then one binary frame
//! every 20 ms of audio, silent while stopped. Errors come back as
//! `{"type": "error", code, message}` and leave the connection open. Stopping
//! a recording stores it as an asset and answers
//! `{"type": "recording", id, url, duration}`.
//!
//! Binary frame layout, little-endian:
//!
//! | offset | type | field |
//! |---|---|---|
//! | 0 | u32 | magic `0x50534F4E` |
//! | 4 | u32 | sequence |
//! | 8 | u64 | first sample index |
//! | 16 | u16 | frame count F |
//! | 18 | f32 × 2F | interleaved stereo samples |

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;
use serde::Deserialize;
use serde_json::{json, Value};
use soundscape::audio::{encode_wav, BitDepth, ENGINE_SAMPLE_RATE};
use soundscape::engine::{load_assets, ControlError, ControlMessage, Engine, EngineOptions, Transport, BLOCK_SIZE};
use soundscape::model::Vec2;
use tokio::time::MissedTickBehavior;

use crate::api::{load_soundscape, resolve_asset, ApiError, AppState};

pub const FRAME_MAGIC: u32 = 0x5053_4F4E;
/// Frames per wire message: 20 ms at 48 kHz.
pub const FRAME_SIZE: usize = 960;
pub const HEADER_BYTES: usize = 18;
pub const CHANNELS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub sequence: u32,
    pub start_sample: u64,
    pub frames: u16,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrameError {
    #[error("frame is {0} bytes, shorter than its header")]
    Short(usize),
    #[error("bad magic 0x{0:08X}")]
    Magic(u32),
    #[error("header announces {frames} frames but payload holds {bytes} bytes")]
    Length { frames: u16, bytes: usize },
}

pub fn encode_frame(header: FrameHeader, interleaved: &[f32]) -> Vec<u8> {
    debug_assert_eq!(interleaved.len(), header.frames as usize * CHANNELS);
    let mut out = Vec::with_capacity(HEADER_BYTES + interleaved.len() * 4);
    out.extend_from_slice(&FRAME_MAGIC.to_le_bytes());
    out.extend_from_slice(&header.sequence.to_le_bytes());
    out.extend_from_slice(&header.start_sample.to_le_bytes());
    out.extend_from_slice(&header.frames.to_le_bytes());
    for s in interleaved {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<(FrameHeader, Vec<f32>), FrameError> {
    if bytes.len() < HEADER_BYTES {
        return Err(FrameError::Short(bytes.len()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let magic = u32_at(0);
    if magic != FRAME_MAGIC {
        return Err(FrameError::Magic(magic));
    }
    let header = FrameHeader {
        sequence: u32_at(4),
        start_sample: u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")),
        frames: u16::from_le_bytes([bytes[16], bytes[17]]),
    };
    let payload = &bytes[HEADER_BYTES..];
    if payload.len() != header.frames as usize * CHANNELS * 4 {
        return Err(FrameError::Length {
            frames: header.frames,
            bytes: payload.len(),
        });
    }
    let samples = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((header, samples))
}

/// Re-chunks 128-frame engine blocks into fixed-size wire frames.
pub struct Framer {
    frame_size: usize,
    pending: Vec<f32>,
    sequence: u32,
    next_sample: u64,
}

impl Framer {
    pub fn new(frame_size: usize) -> Self {
        assert!(frame_size > 0 && frame_size <= u16::MAX as usize);
        Self {
            frame_size,
            pending: Vec::with_capacity((frame_size + BLOCK_SIZE) * CHANNELS),
            sequence: 0,
            next_sample: 0,
        }
    }

    /// Renders as many engine blocks as needed and returns the next frame.
    pub fn next_frame(&mut self, engine: &mut Engine) -> (FrameHeader, Vec<f32>) {
        let want = self.frame_size * CHANNELS;
        while self.pending.len() < want {
            let [l, r] = engine.process_block();
            for (a, b) in l.iter().zip(&r) {
                self.pending.push(*a);
                self.pending.push(*b);
            }
        }
        let rest = self.pending.split_off(want);
        let samples = std::mem::replace(&mut self.pending, rest);
        let header = FrameHeader {
            sequence: self.sequence,
            start_sample: self.next_sample,
            frames: self.frame_size as u16,
        };
        self.sequence = self.sequence.wrapping_add(1);
        self.next_sample += self.frame_size as u64;
        (header, samples)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PlayStop {
    Play,
    Stop,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum StartStop {
    Start,
    Stop,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Pose { x: f64, y: f64, yaw: f64 },
    Transport { value: PlayStop },
    Set { source: String, path: String, value: Value },
    Record { value: StartStop },
    MasterGain { gain_db: f64 },
}

impl ClientMessage {
    pub fn into_control(self) -> ControlMessage {
        match self {
            Self::Pose { x, y, yaw } => ControlMessage::SetPose {
                position: Vec2::new(x, y),
                yaw,
            },
            Self::Transport { value } => ControlMessage::SetTransport {
                state: match value {
                    PlayStop::Play => Transport::Playing,
                    PlayStop::Stop => Transport::Stopped,
                },
            },
            Self::Set { source, path, value } => ControlMessage::SetSourceParam { id: source, path, value },
            Self::Record { value: StartStop::Start } => ControlMessage::StartRecord,
            Self::Record { value: StartStop::Stop } => ControlMessage::StopRecord,
            Self::MasterGain { gain_db } => ControlMessage::SetMasterGain { gain_db },
        }
    }
}

pub fn control_error_code(e: &ControlError) -> &'static str {
    match e {
        ControlError::UnknownSource(_) => "unknown_source",
        ControlError::UnknownParam(_) => "unknown_param",
        ControlError::BadValue { .. } | ControlError::BadPose | ControlError::BadGain => "bad_value",
        ControlError::NotRecording => "not_recording",
    }
}

fn error_text(code: &str, message: impl std::fmt::Display) -> String {
    json!({"type": "error", "code": code, "message": message.to_string()}).to_string()
}

pub async fn upgrade(State(state): State<AppState>, Path(id): Path<String>, ws: WebSocketUpgrade) -> Result<Response, ApiError> {
    let build_state = state.clone();
    let engine = tokio::task::spawn_blocking(move || -> Result<Engine, ApiError> {
        let shared = &build_state.0;
        let scape = load_soundscape(&shared.storage, &id)?;
        let assets = load_assets(&scape, |uri| resolve_asset(&shared.storage, uri)).map_err(|e| {
            ApiError::new(axum::http::StatusCode::UNPROCESSABLE_ENTITY, "asset_unavailable", e.to_string())
        })?;
        Engine::build(scape, &assets, Arc::clone(&shared.hrirs), shared.model, EngineOptions::default())
            .map_err(|e| ApiError::new(axum::http::StatusCode::UNPROCESSABLE_ENTITY, "engine_failed", e.to_string()))
    })
    .await
    .map_err(|e| ApiError::new(axum::http::StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(ws.on_upgrade(move |socket| run(socket, engine, state)))
}

async fn run(mut socket: WebSocket, mut engine: Engine, state: AppState) {
    let ready = json!({
        "type": "ready",
        "sample_rate": ENGINE_SAMPLE_RATE,
        "frame_size": FRAME_SIZE,
        "channels": CHANNELS,
    });
    if socket.send(Message::Text(ready.to_string().into())).await.is_err() {
        return;
    }
    let period = Duration::from_secs_f64(FRAME_SIZE as f64 / ENGINE_SAMPLE_RATE as f64 / state.0.pace);
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Burst);
    let mut framer = Framer::new(FRAME_SIZE);
    loop {
        tokio::select! {
            _ = ticker.tick() => {
                let (header, samples) = framer.next_frame(&mut engine);
                if socket.send(Message::Binary(encode_frame(header, &samples).into())).await.is_err() {
                    break;
                }
            }
            msg = socket.recv() => {
                let reply = match msg {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                    Some(Ok(Message::Text(text))) => handle_text(&text, &mut engine, &state).await,
                    Some(Ok(Message::Binary(_))) => Some(error_text("bad_message", "binary messages are not accepted")),
                    Some(Ok(_)) => None,
                };
                if let Some(reply) = reply {
                    if socket.send(Message::Text(reply.into())).await.is_err() {
                        break;
                    }
                }
            }
        }
    }
}

async fn handle_text(text: &str, engine: &mut Engine, state: &AppState) -> Option<String> {
    let msg: ClientMessage = match serde_json::from_str(text) {
        Ok(m) => m,
        Err(e) => return Some(error_text("bad_message", e)),
    };
    match engine.apply(msg.into_control()) {
        Err(e) => Some(error_text(control_error_code(&e), e)),
        Ok(None) => None,
        Ok(Some(recording)) => {
            let duration = recording.duration_secs();
            let wav = encode_wav(&recording, BitDepth::Float32);
            let state = state.clone();
            let stored = tokio::task::spawn_blocking(move || state.0.storage.put_asset(&wav)).await;
            Some(match stored {
                Ok(Ok(r)) => json!({
                    "type": "recording",
                    "id": r.id,
                    "url": format!("/assets/{}", r.id),
                    "duration": duration,
                })
                .to_string(),
                Ok(Err(e)) => error_text("storage", e),
                Err(e) => error_text("internal", e),
            })
        }
    }
}

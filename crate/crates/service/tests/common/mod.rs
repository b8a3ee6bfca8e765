#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use soundscape::audio::{decode_wav, encode_wav, AudioBuffer, BitDepth};
use soundscape::binaural::{spherical_head_set, DistanceModel};
use soundscape::engine::{ControlMessage, Engine, EngineOptions, Transport};
use soundscape::model::{self, AssetRef, Room, SoundSource, Soundscape, Vec2};
use soundscape_service::api::{self, AppState, ServiceConfig};
use tempfile::TempDir;

pub struct Server {
    pub base: String,
    pub ws: String,
    pub state: AppState,
    _dir: TempDir,
}

pub async fn start(pace: f64) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ServiceConfig::new(dir.path());
    config.pace = pace;
    let state = AppState::new(&config).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(api::serve(listener, state.clone()));
    Server {
        base: format!("http://{addr}"),
        ws: format!("ws://{addr}"),
        state,
        _dir: dir,
    }
}

/// Sends a request and returns the status and body, whatever the status.
pub async fn request(method: &'static str, url: String, body: Vec<u8>) -> (u16, Vec<u8>) {
    tokio::task::spawn_blocking(move || {
        let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        let resp = match method {
            "GET" => agent.get(&url).call(),
            "PUT" => agent.put(&url).send(&body[..]),
            "POST" => agent.post(&url).send(&body[..]),
            other => panic!("unsupported method {other}"),
        };
        let mut resp = resp.unwrap();
        let status = resp.status().as_u16();
        (status, resp.body_mut().with_config().limit(1 << 30).read_to_vec().unwrap())
    })
    .await
    .unwrap()
}

pub fn json(body: &[u8]) -> serde_json::Value {
    serde_json::from_slice(body).unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(body)))
}

/// A decaying 440 Hz tone.
pub fn tone(secs: f64, rate: u32) -> AudioBuffer {
    let n = (secs * rate as f64).round() as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            (0.5 * (std::f64::consts::TAU * 440.0 * t).sin() * (-t).exp()) as f32
        })
        .collect();
    AudioBuffer::mono(rate, samples)
}

pub fn tone_wav(secs: f64, rate: u32) -> Vec<u8> {
    encode_wav(&tone(secs, rate), BitDepth::Pcm16)
}

/// One looping source referring to `uri`, ahead and to the left of a
/// listener standing off centre.
pub fn scene(uri: &str) -> Soundscape {
    let mut s = Soundscape::new(Room::rectangular(8.0, 6.0, 3.0));
    s.title = "test".into();
    s.listener.position = Vec2::new(-1.0, -0.5);
    s.listener.yaw = 0.4;
    let mut src = SoundSource::new("tone", AssetRef::uri(uri), Vec2::new(1.5, 1.0));
    src.looping = true;
    s.sources.push(src);
    s
}

pub async fn put_asset(server: &Server, wav: Vec<u8>) -> String {
    let (status, body) = request("PUT", format!("{}/assets", server.base), wav).await;
    assert_eq!(status, 200, "{}", String::from_utf8_lossy(&body));
    json(&body)["id"].as_str().unwrap().to_owned()
}

pub async fn put_scene(server: &Server, s: &Soundscape) -> String {
    let doc = model::serialize(s).unwrap();
    let (status, body) = request("PUT", format!("{}/soundscapes", server.base), doc.into_bytes()).await;
    assert_eq!(status, 200, "{}", String::from_utf8_lossy(&body));
    json(&body)["id"].as_str().unwrap().to_owned()
}

/// Stores a tone asset and a scene using it; returns the scene, the decoded
/// asset and the scene id.
pub async fn stored_scene(server: &Server) -> (Soundscape, AudioBuffer, String) {
    let wav = tone_wav(0.75, 44_100);
    let asset = put_asset(server, wav.clone()).await;
    let s = scene(&format!("/assets/{asset}"));
    let id = put_scene(server, &s).await;
    (s, decode_wav(&wav).unwrap(), id)
}

/// Interleaved output of a fresh engine that starts playing at once.
pub fn offline_stream(s: &Soundscape, audio: &AudioBuffer, frames: usize, extra: &[ControlMessage]) -> Vec<f32> {
    let assets = HashMap::from([(s.sources[0].id.clone(), audio.clone())]);
    let mut e = Engine::build(
        s.clone(),
        &assets,
        Arc::new(spherical_head_set(48_000)),
        DistanceModel::default(),
        EngineOptions::default(),
    )
    .unwrap();
    e.apply(ControlMessage::SetTransport { state: Transport::Playing }).unwrap();
    for m in extra {
        e.apply(m.clone()).unwrap();
    }
    let mut out = Vec::with_capacity(frames * 2);
    while out.len() < frames * 2 {
        let [l, r] = e.process_block();
        for (a, b) in l.iter().zip(&r) {
            out.push(*a);
            out.push(*b);
        }
    }
    out.truncate(frames * 2);
    out
}

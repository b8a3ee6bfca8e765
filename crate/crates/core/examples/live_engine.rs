//! Drive the block engine by hand: start playback, move the listener, change
//! a source while it runs, and capture a recording.
//!
//! ```text
//! cargo run -p soundscape --example live_engine
//! ```

use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use soundscape::binaural::{spherical_head_set, DistanceModel};
use soundscape::engine::{load_assets, ControlMessage, Engine, EngineEvent, EngineOptions, Transport, BLOCK_SIZE};
use soundscape::model::{self, Vec2};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let scene = model::deserialize(&std::fs::read_to_string(data.join("garden.json")).unwrap())
        .unwrap()
        .soundscape;
    let assets = load_assets(&scene, |uri| std::fs::read(data.join(uri))).unwrap();
    let mut engine = Engine::build(
        scene,
        &assets,
        Arc::new(spherical_head_set(48_000)),
        DistanceModel::default(),
        EngineOptions::default(),
    )
    .unwrap();

    // messages can come from another thread through the sender
    let tx = engine.sender();
    tx.send(ControlMessage::SetTransport { state: Transport::Playing }).unwrap();
    tx.send(ControlMessage::StartRecord).unwrap();

    let seconds = |e: &Engine| e.sample_clock() as f64 / 48_000.0;
    let blocks_per_second = 48_000 / BLOCK_SIZE;
    for step in 0..6 {
        for _ in 0..blocks_per_second {
            engine.process_block();
        }
        let ids: Vec<_> = engine.soundscape().sources.iter().map(|s| s.id.clone()).collect();
        let playing: Vec<_> = ids.iter().filter(|id| engine.is_playing(id)).collect();
        println!("t={:.2} s  playing {playing:?}  fountain reach {:?}", seconds(&engine), engine.reach_gain("fountain"));
        match step {
            1 => {
                // walk up to the fountain
                tx.send(ControlMessage::SetPose { position: Vec2::new(0.5, 1.0), yaw: 0.0 }).unwrap();
            }
            2 => {
                tx.send(ControlMessage::SetSourceParam {
                    id: "hum".into(),
                    path: "gain_db".into(),
                    value: json!(-12),
                })
                .unwrap();
                // rejected: no such source
                tx.send(ControlMessage::SetSourceParam { id: "owl".into(), path: "gain_db".into(), value: json!(0) })
                    .unwrap();
            }
            4 => tx.send(ControlMessage::StopRecord).unwrap(),
            _ => {}
        }
    }
    engine.process_block();
    for event in engine.take_events() {
        match event {
            EngineEvent::Rejected { message, error } => println!("rejected {message:?}: {error}"),
            EngineEvent::Recording(buf) => println!("recorded {:.2} s of stereo", buf.duration_secs()),
        }
    }
}

//! Offline binaural render of the garden scene along a scripted walk.
//!
//! ```text
//! cargo run -p soundscape --example render_walk [out.wav]
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use soundscape::audio::{encode_wav, BitDepth};
use soundscape::binaural::{spherical_head_set, DistanceModel};
use soundscape::engine::{load_assets, EngineOptions};
use soundscape::model;
use soundscape::trajectory::{render_offline, Trajectory};

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("garden_walk.wav"));

    let scene = model::deserialize(&std::fs::read_to_string(data.join("garden.json")).unwrap())
        .unwrap()
        .soundscape;
    let walk = Trajectory::from_json(&std::fs::read_to_string(data.join("walk.json")).unwrap()).unwrap();

    // asset URIs are relative to the scene file
    let assets: HashMap<_, _> = load_assets(&scene, |uri| std::fs::read(data.join(uri))).unwrap();
    for (id, buf) in &assets {
        println!("{id:<10} {} ch @ {} Hz, {:.2} s", buf.num_channels(), buf.sample_rate(), buf.duration_secs());
    }

    let hrirs = Arc::new(spherical_head_set(48_000));
    let stereo = render_offline(&scene, &walk, &assets, hrirs, DistanceModel::default(), EngineOptions::default())
        .expect("render");

    let peak = stereo.channels().iter().flatten().fold(0f32, |m, &x| m.max(x.abs()));
    std::fs::write(&out, encode_wav(&stereo, BitDepth::Float32)).unwrap();
    println!("{} frames, peak {:.3}, written to {}", stereo.frames(), peak, out.display());
}

//! End to end over the shipped example data: parse, validate, load assets,
//! render, and run the effects chain.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use soundscape::audio::{decode_wav, encode_wav, BitDepth};
use soundscape::binaural::{spherical_head_set, DistanceModel};
use soundscape::effects::{parse_effects, render_chain};
use soundscape::engine::{load_assets, EngineOptions};
use soundscape::model::{self, Soundscape};
use soundscape::trajectory::{render_frames, render_offline, Trajectory};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name)
}

fn garden() -> Soundscape {
    model::deserialize(&std::fs::read_to_string(data("garden.json")).unwrap())
        .unwrap()
        .soundscape
}

#[test]
fn example_scene_is_valid_and_canonical_round_trips() {
    let s = garden();
    assert!(!model::validate(&s).has_errors());
    let doc = model::serialize(&s).unwrap();
    assert_eq!(model::serialize(&model::deserialize(&doc).unwrap().soundscape).unwrap(), doc);
}

#[test]
fn example_walk_renders_the_expected_length_twice_alike() {
    let s = garden();
    let walk = Trajectory::from_json(&std::fs::read_to_string(data("walk.json")).unwrap()).unwrap();
    let assets = load_assets(&s, |uri| std::fs::read(data(uri))).unwrap();
    let hrirs = Arc::new(spherical_head_set(48_000));
    let render = || {
        render_offline(&s, &walk, &assets, Arc::clone(&hrirs), DistanceModel::default(), EngineOptions::default())
            .unwrap()
    };
    let (a, b) = (render(), render());
    assert_eq!(a.frames(), render_frames(walk.duration));
    assert_eq!(a.frames(), 384_000);
    assert_eq!(encode_wav(&a, BitDepth::Float32), encode_wav(&b, BitDepth::Float32));
    assert!(a.channels().iter().flatten().any(|&x| x != 0.0));
    assert!(a.channels().iter().flatten().all(|x| x.is_finite() && x.abs() <= 1.0));
}

#[test]
fn example_effects_chain_keeps_length_and_fades_the_ends() {
    let dry = decode_wav(&std::fs::read(data("fountain.wav")).unwrap()).unwrap();
    let specs = parse_effects(&std::fs::read_to_string(data("effects.json")).unwrap(), |_| {
        Err::<soundscape::audio::AudioBuffer, _>("no impulses here")
    })
    .unwrap();
    let wet = render_chain(&dry, &specs).unwrap();
    assert_eq!(wet.frames(), dry.frames());
    assert_eq!(wet.num_channels(), dry.num_channels());
    for ch in wet.channels() {
        assert_eq!(ch[0], 0.0);
        assert_eq!(*ch.last().unwrap(), 0.0);
    }
}

#[test]
fn missing_asset_names_the_source() {
    let s = garden();
    let err = load_assets(&s, |uri| if uri.contains("bell") { Err("gone") } else { std::fs::read(data(uri)).map_err(|_| "io") })
        .unwrap_err();
    assert!(err.to_string().contains("bell"), "{err}");
}

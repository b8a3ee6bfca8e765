mod common;

use common::*;
use soundscape::audio::decode_wav;
use soundscape::model::{self, AssetSource, TimingConstraint};
use soundscape::trajectory::{Trajectory, Waypoint};
use soundscape::model::Vec2;

fn error_shape(body: &[u8], code: &str) -> serde_json::Value {
    let v = json(body);
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
    assert!(v["path"].is_string());
    v
}

#[tokio::test(flavor = "multi_thread")]
async fn asset_upload_and_download() {
    let server = start(1.0).await;
    let wav = tone_wav(1.0, 48_000);
    let (status, body) = request("PUT", format!("{}/assets", server.base), wav.clone()).await;
    assert_eq!(status, 200);
    let v = json(&body);
    assert_eq!(v["duration"], 1.0);
    assert_eq!(v["channels"], 1);
    assert_eq!(v["sample_rate"], 48_000);
    let id = v["id"].as_str().unwrap();
    assert_eq!(id.len(), 16);

    let (status, back) = request("GET", format!("{}/assets/{id}", server.base), vec![]).await;
    assert_eq!(status, 200);
    assert_eq!(back, wav);

    let (status, again) = request("PUT", format!("{}/assets", server.base), wav).await;
    assert_eq!(status, 200);
    assert_eq!(json(&again)["id"], id);
}

#[tokio::test(flavor = "multi_thread")]
async fn non_wav_upload_is_rejected() {
    let server = start(1.0).await;
    let (status, body) = request("PUT", format!("{}/assets", server.base), b"ID3\x03 mp3 bytes".to_vec()).await;
    assert_eq!(status, 400);
    let v = error_shape(&body, "unsupported_audio");
    assert!(v["message"].as_str().unwrap().contains("RIFF"));

    let mut adpcm = tone_wav(0.1, 8000);
    adpcm[20] = 0x02;
    let (status, body) = request("PUT", format!("{}/assets", server.base), adpcm).await;
    assert_eq!(status, 400);
    assert!(error_shape(&body, "unsupported_audio")["message"].as_str().unwrap().contains("codec"));
}

#[tokio::test(flavor = "multi_thread")]
async fn unknown_ids_are_404() {
    let server = start(1.0).await;
    for path in ["assets/0123456789abcdef", "assets/nope", "soundscapes/0123456789abcdef"] {
        let (status, body) = request("GET", format!("{}/{path}", server.base), vec![]).await;
        assert_eq!(status, 404, "{path}");
        error_shape(&body, "not_found");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn timing_cycle_is_422_with_report() {
    let server = start(1.0).await;
    let mut s = scene("x.wav");
    let mut b = s.sources[0].clone();
    b.id = "b".into();
    s.sources[0].timings.push(TimingConstraint::after_completes("b"));
    b.timings.push(TimingConstraint::after_completes("tone"));
    s.sources.push(b);
    let doc = model::to_canonical_json(&s);
    let (status, body) = request("PUT", format!("{}/soundscapes", server.base), doc.into_bytes()).await;
    assert_eq!(status, 422);
    let v = error_shape(&body, "validation_failed");
    let issues = v["report"]["issues"].as_array().unwrap();
    assert!(issues.iter().any(|i| i["severity"] == "error" && i["message"].as_str().unwrap().contains("cycle")), "{v}");
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_documents_are_400_with_location() {
    let server = start(1.0).await;
    let (status, body) = request("PUT", format!("{}/soundscapes", server.base), b"{\"format_version\":1".to_vec()).await;
    assert_eq!(status, 400);
    error_shape(&body, "invalid_document");
    let doc = br#"{"format_version":1,"room":{"width":"wide","depth":1,"height":3},"sources":[]}"#.to_vec();
    let (status, body) = request("PUT", format!("{}/soundscapes", server.base), doc).await;
    assert_eq!(status, 400);
    assert_eq!(error_shape(&body, "invalid_document")["path"], "/room/width");
}

#[tokio::test(flavor = "multi_thread")]
async fn stored_documents_are_canonical_and_embeddable() {
    let server = start(1.0).await;
    let (s, _, id) = stored_scene(&server).await;

    let (status, body) = request("GET", format!("{}/soundscapes/{id}", server.base), vec![]).await;
    assert_eq!(status, 200);
    let text = String::from_utf8(body).unwrap();
    assert_eq!(text, model::serialize(&s).unwrap());

    let (status, body) = request("GET", format!("{}/soundscapes/{id}?embed=true", server.base), vec![]).await;
    assert_eq!(status, 200);
    let embedded = model::deserialize(std::str::from_utf8(&body).unwrap()).unwrap().soundscape;
    assert!(embedded.sources.iter().all(|src| matches!(src.asset.source, AssetSource::Embedded(_))));
    assert!(!String::from_utf8_lossy(&body).contains("\"uri\""));
    let meta = embedded.sources[0].asset.meta.unwrap();
    assert_eq!((meta.channels, meta.sample_rate, meta.duration), (1, 44_100, 0.75));

    let (status, body) = request("GET", format!("{}/soundscapes/{id}?embed=false", server.base), vec![]).await;
    assert_eq!(status, 200);
    assert_eq!(String::from_utf8(body).unwrap(), text);
}

#[tokio::test(flavor = "multi_thread")]
async fn render_returns_wav_and_limits_duration() {
    let server = start(1.0).await;
    let (_, _, id) = stored_scene(&server).await;
    let traj = Trajectory::new(
        vec![
            Waypoint { t: 0.0, position: Vec2::new(-1.0, -0.5), yaw: 0.0 },
            Waypoint { t: 1.0, position: Vec2::new(1.0, 0.5), yaw: 1.0 },
        ],
        1.0,
    )
    .unwrap();
    let req = serde_json::json!({"soundscape": id, "trajectory": traj, "depth": "pcm16"});
    let (status, body) = request("POST", format!("{}/render", server.base), req.to_string().into_bytes()).await;
    assert_eq!(status, 200, "{}", String::from_utf8_lossy(&body));
    let out = decode_wav(&body).unwrap();
    assert_eq!((out.num_channels(), out.sample_rate(), out.frames()), (2, 48_000, 48_000));
    assert!(out.channel(0).iter().any(|&x| x != 0.0));
    assert_eq!(u16::from_le_bytes([body[34], body[35]]), 16);

    let (status, again) = request("POST", format!("{}/render", server.base), req.to_string().into_bytes()).await;
    assert_eq!(status, 200);
    assert_eq!(again, body);

    let long = serde_json::json!({"soundscape": id, "trajectory": {"waypoints": [{"t": 0, "position": [0, 0], "yaw": 0}], "duration": 601}});
    let (status, body) = request("POST", format!("{}/render", server.base), long.to_string().into_bytes()).await;
    assert_eq!(status, 413);
    error_shape(&body, "render_too_long");

    let missing = serde_json::json!({"soundscape": "0123456789abcdef", "trajectory": traj});
    let (status, _) = request("POST", format!("{}/render", server.base), missing.to_string().into_bytes()).await;
    assert_eq!(status, 404);

    let bad = serde_json::json!({"soundscape": id, "trajectory": {"waypoints": [], "duration": 1}});
    let (status, body) = request("POST", format!("{}/render", server.base), bad.to_string().into_bytes()).await;
    assert_eq!(status, 400);
    error_shape(&body, "invalid_trajectory");
}

//! Start the service in-process, upload the garden scene over HTTP and
//! listen to one second of it through a live session.
//!
//! ```text
//! cargo run -p soundscape-service --example session_client
//! ```

use std::path::Path;

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use soundscape_service::api::{serve, AppState, ServiceConfig};
use soundscape_service::session::decode_frame;
use tokio_tungstenite::tungstenite::Message;

fn http(method: &str, url: &str, body: Vec<u8>) -> Value {
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let mut resp = match method {
        "PUT" => agent.put(url).send(&body[..]),
        _ => agent.get(url).call(),
    }
    .unwrap();
    let status = resp.status();
    let v: Value = serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap();
    println!("{method} {url} -> {status}");
    v
}

#[tokio::main]
async fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/examples/data");
    let store = tempfile::tempdir().unwrap();
    let state = AppState::new(&ServiceConfig::new(store.path())).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, state));
    let base = format!("http://{addr}");

    // upload each sample and point the scene at the stored copies
    let mut scene: Value = serde_json::from_str(&std::fs::read_to_string(data.join("garden.json")).unwrap()).unwrap();
    let scene = tokio::task::spawn_blocking({
        let base = base.clone();
        move || {
            for src in scene["sources"].as_array_mut().unwrap() {
                let uri = src["asset"]["uri"].as_str().unwrap().to_owned();
                let stored = http("PUT", &format!("{base}/assets"), std::fs::read(data.join(&uri)).unwrap());
                src["asset"]["uri"] = json!(format!("/assets/{}", stored["id"].as_str().unwrap()));
            }
            http("PUT", &format!("{base}/soundscapes"), scene.to_string().into_bytes())
        }
    })
    .await
    .unwrap();
    let id = scene["id"].as_str().unwrap().to_owned();
    println!("stored soundscape {id}, {} warning(s)", scene["warnings"].as_array().unwrap().len());

    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session/{id}")).await.unwrap();
    for msg in [
        json!({"type": "pose", "x": 0.0, "y": 0.5, "yaw": 0.0}),
        json!({"type": "transport", "value": "play"}),
        json!({"type": "set", "source": "hum", "path": "gain_db", "value": -12}),
        json!({"type": "set", "source": "nobody", "path": "gain_db", "value": 0}),
    ] {
        ws.send(Message::text(msg.to_string())).await.unwrap();
    }
    let mut frames = 0;
    let mut peak = 0f32;
    while frames < 50 {
        match ws.next().await.unwrap().unwrap() {
            Message::Text(t) => println!("server: {t}"),
            Message::Binary(b) => {
                let (h, samples) = decode_frame(&b).unwrap();
                peak = samples.iter().fold(peak, |m, x| m.max(x.abs()));
                if h.sequence % 10 == 0 {
                    println!("frame {:>3} starts at sample {:>6}, peak so far {peak:.3}", h.sequence, h.start_sample);
                }
                frames += 1;
            }
            _ => {}
        }
    }
    ws.close(None).await.ok();
}

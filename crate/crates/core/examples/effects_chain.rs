//! Run a sample through an effect chain described in JSON.
//!
//! ```text
//! cargo run -p soundscape --example effects_chain [in.wav] [effects.json] [out.wav]
//! ```

use std::path::{Path, PathBuf};

use soundscape::audio::{decode_wav, encode_wav, BitDepth};
use soundscape::effects::{parse_effects, render_chain};

fn rms_db(x: &[f32]) -> f64 {
    let e: f64 = x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / x.len().max(1) as f64;
    10.0 * e.max(1e-20).log10()
}

fn main() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let mut args = std::env::args().skip(1).map(PathBuf::from);
    let input = args.next().unwrap_or_else(|| data.join("fountain.wav"));
    let chain = args.next().unwrap_or_else(|| data.join("effects.json"));
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("fountain_fx.wav"));

    let dry = decode_wav(&std::fs::read(&input).unwrap()).unwrap();
    let base = chain.parent().unwrap().to_path_buf();
    let specs = parse_effects(&std::fs::read_to_string(&chain).unwrap(), |p| {
        std::fs::read(base.join(p)).map_err(|e| e.to_string()).and_then(|b| decode_wav(&b).map_err(|e| e.to_string()))
    })
    .unwrap();
    for s in &specs {
        println!("  {}", s.name());
    }

    let wet = render_chain(&dry, &specs).unwrap();
    println!("dry {:.1} dB RMS, wet {:.1} dB RMS", rms_db(dry.channel(0)), rms_db(wet.channel(0)));
    std::fs::write(&out, encode_wav(&wet, BitDepth::Pcm16)).unwrap();
    println!("{} frames written to {}", wet.frames(), out.display());
}

//! Load a soundscape document, print its validation report and the
//! canonical form.
//!
//! ```text
//! cargo run -p soundscape --example validate_scene [scene.json]
//! ```

use std::path::PathBuf;

use soundscape::model;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/garden.json"));
    let text = std::fs::read_to_string(&path).expect("read scene");
    let parsed = match model::deserialize(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}: {} at {:?}", path.display(), e.message, e.path);
            std::process::exit(2);
        }
    };
    for w in &parsed.warnings {
        println!("warning: {w}");
    }
    let s = parsed.soundscape;
    println!("{:?} in a {} x {} m room, {} sources", s.title, s.room.width, s.room.depth, s.sources.len());
    for src in &s.sources {
        let deps: Vec<String> = src.timings.iter().map(|t| format!("{:?} {}", t.mode, t.after_source)).collect();
        println!("  {:<10} loop={:<5} reach={:<5} {}", src.id, src.looping, src.reach_enabled, deps.join(", "));
    }

    let report = model::validate(&s);
    print!("{report}");
    println!("{} error(s)", report.errors().count());
    if report.has_errors() {
        std::process::exit(2);
    }
    // serialize() gives the canonical document; it parses back to the same value
    let canonical = model::serialize(&s).unwrap();
    assert_eq!(model::deserialize(&canonical).unwrap().soundscape, s);
    println!("canonical form is {} bytes", canonical.len());
}

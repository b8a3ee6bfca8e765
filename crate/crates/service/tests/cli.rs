use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use soundscape::audio::decode_wav;
use soundscape::binaural::{Direction, HrirSet, IirFitSet};
use soundscape::dsp::{Biquad, BiquadCoeffs, BiquadKind};
use soundscape::model::{self, AssetSource, TimingConstraint};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/examples/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soundscape")).args(args).output().unwrap()
}

fn code(args: &[&str]) -> i32 {
    let out = run(args);
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["validate", s(&data("garden.json"))]), 0);

    let mut scape = model::deserialize(&std::fs::read_to_string(data("garden.json")).unwrap()).unwrap().soundscape;
    scape.sources[0].timings.push(TimingConstraint::after_completes("bell"));
    let cyclic = dir.path().join("cyclic.json");
    std::fs::write(&cyclic, model::to_canonical_json(&scape)).unwrap();
    let out = run(&["validate", s(&cyclic)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("timing cycle"));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"format_version\": 1,").unwrap();
    assert_eq!(code(&["validate", s(&broken)]), 2);
    assert_eq!(code(&["validate", s(&dir.path().join("missing.json"))]), 3);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["render", "--scene", "x.json"]), 1);
    assert_eq!(code(&["render", "--scene", "a", "--trajectory", "b", "--out", "c", "--depth", "pcm8"]), 1);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    let help = String::from_utf8(run(&["--help"]).stdout).unwrap();
    for sub in ["validate", "render", "sample", "embed", "fit-hrir", "serve"] {
        assert!(help.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn render_is_repeatable_and_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.wav"), dir.path().join("b.wav"));
    let args = |out: &Path| {
        vec![
            "render".to_owned(),
            "--scene".into(),
            s(&data("garden.json")).into(),
            "--trajectory".into(),
            s(&data("walk.json")).into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let call = |v: Vec<String>| code(&v.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(call(args(&a)), 0);
    assert_eq!(call(args(&b)), 0);
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let out = decode_wav(&bytes).unwrap();
    assert_eq!((out.num_channels(), out.frames()), (2, 8 * 48_000));

    std::fs::write(&b, b"keep").unwrap();
    assert_eq!(call(args(&b)), 1);
    assert_eq!(std::fs::read(&b).unwrap(), b"keep");
    let mut forced = args(&b);
    forced.extend(["--force".into(), "--depth".into(), "pcm16".into()]);
    assert_eq!(call(forced), 0);
    assert_eq!(decode_wav(&std::fs::read(&b).unwrap()).unwrap().frames(), 8 * 48_000);
}

#[test]
fn render_reports_missing_assets_as_io() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("garden.json");
    std::fs::copy(data("garden.json"), &scene).unwrap();
    let out = dir.path().join("o.wav");
    assert_eq!(code(&["render", "--scene", s(&scene), "--trajectory", s(&data("walk.json")), "--out", s(&out)]), 3);
    assert!(!out.exists());
}

#[test]
fn sample_with_empty_chain_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("none.json");
    std::fs::write(&fx, "[]").unwrap();
    let out = dir.path().join("o.wav");
    assert_eq!(code(&["sample", "--in", s(&data("birds.wav")), "--effects", s(&fx), "--out", s(&out)]), 0);
    let input = decode_wav(&std::fs::read(data("birds.wav")).unwrap()).unwrap();
    assert_eq!(decode_wav(&std::fs::read(&out).unwrap()).unwrap(), input);

    let out2 = dir.path().join("o2.wav");
    assert_eq!(code(&["sample", "--in", s(&data("bell.wav")), "--effects", s(&data("effects.json")), "--out", s(&out2)]), 0);
    std::fs::write(&fx, r#"[{"kind": "reverse"}]"#).unwrap();
    assert_eq!(code(&["sample", "--in", s(&data("bell.wav")), "--effects", s(&fx), "--out", s(&dir.path().join("x.wav"))]), 2);
    std::fs::write(&fx, r#"[{"kind": "convolver", "impulse": "nowhere.wav"}]"#).unwrap();
    assert_eq!(code(&["sample", "--in", s(&data("bell.wav")), "--effects", s(&fx), "--out", s(&dir.path().join("x.wav"))]), 3);
}

#[test]
fn embed_leaves_no_references() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e.json");
    assert_eq!(code(&["embed", "--in", s(&data("garden.json")), "--assets", s(&data("")), "--out", s(&out)]), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let scape = model::deserialize(&text).unwrap().soundscape;
    assert!(scape.sources.iter().all(|src| matches!(src.asset.source, AssetSource::Embedded(_))));
    assert_eq!(scape.sources[0].asset.meta.unwrap().sample_rate, 44_100);
    assert_eq!(code(&["validate", s(&out)]), 0);
    assert_eq!(code(&["embed", "--in", s(&data("garden.json")), "--assets", s(dir.path()), "--out", s(&dir.path().join("f.json"))]), 3);
}

fn one_peak_dir(dir: &Path) {
    let c = BiquadCoeffs::design(BiquadKind::Peaking, 3000.0, 2.0, 6.0, 48_000.0).unwrap();
    let mut f = Biquad::new(c);
    let ir: Vec<f32> = (0..256).map(|n| f.process_sample(if n == 0 { 1.0 } else { 0.0 }) as f32).collect();
    let grid = vec![Direction::new(0.0, 0.0), Direction::new(90.0, 0.0), Direction::new(270.0, 0.0)];
    let set = HrirSet::new("one-peak", 48_000, grid, vec![ir.clone(); 3], vec![ir; 3]).unwrap();
    set.save_dir(dir).unwrap();
}

#[test]
fn fit_hrir_writes_fits_and_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let hrir = dir.path().join("hrir");
    one_peak_dir(&hrir);
    let out = dir.path().join("fits.json");
    let res = run(&["fit-hrir", "--in", s(&hrir), "--order", "6", "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let table = String::from_utf8(res.stdout).unwrap();
    assert_eq!(table.lines().count(), 1 + 3 + 1);
    let fits: IirFitSet = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((fits.order, fits.directions.len()), (6, 3));
    assert!(fits.worst_error_db() < 1.0);

    assert_eq!(code(&["fit-hrir", "--in", s(&hrir), "--order", "5", "--out", s(&dir.path().join("g.json"))]), 1);
    assert_eq!(code(&["fit-hrir", "--in", s(&dir.path().join("none")), "--out", s(&dir.path().join("g.json"))]), 3);

    let rendered = dir.path().join("r.wav");
    let (scene, walk) = (data("garden.json"), data("walk.json"));
    let args = [
        "render", "--scene", s(&scene), "--trajectory", s(&walk),
        "--out", s(&rendered), "--hrir", s(&hrir), "--fits", s(&out),
    ];
    assert_eq!(code(&args), 0);
}

#[test]
fn hrir_sets_at_other_rates_render() {
    let dir = tempfile::tempdir().unwrap();
    let hrir = dir.path().join("h");
    let grid = vec![Direction::new(0.0, 0.0), Direction::new(90.0, 0.0)];
    HrirSet::new("two", 44_100, grid, vec![vec![1.0, 0.5]; 2], vec![vec![0.5, 0.25]; 2]).unwrap().save_dir(&hrir).unwrap();
    let out = dir.path().join("o.wav");
    assert_eq!(
        code(&["render", "--scene", s(&data("garden.json")), "--trajectory", s(&data("walk.json")), "--out", s(&out), "--hrir", s(&hrir)]),
        0
    );
    let r = decode_wav(&std::fs::read(&out).unwrap()).unwrap();
    assert!(r.channel(0).iter().any(|&x| x != 0.0));
}

//! The `soundscape` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or content error,
//! 3 I/O error.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use soundscape::audio::{decode_wav, encode_wav, BitDepth};
use soundscape::binaural::{fit_iir_approximation, spherical_head_set, DistanceModel, HrirError, HrirSet};
use soundscape::effects::{parse_effects, render_chain, EffectsDocError};
use soundscape::engine::{load_assets, AssetError, EngineOptions};
use soundscape::model::{self, embed_assets, EmbedError, Soundscape};
use soundscape::trajectory::{render_offline, Trajectory, TrajectoryError};

use crate::api::{self, AppState, ServiceConfig};
use crate::remote::{fetch_url, is_url, join_url};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "soundscape", version, about = "Author, render and serve binaural soundscapes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a soundscape document and print its report
    Validate {
        /// Soundscape JSON file
        scene: PathBuf,
    },
    /// Render a soundscape along a listener trajectory to a stereo WAV
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// pcm16 or float32
        #[arg(long, default_value = "float32")]
        depth: BitDepth,
        /// HRIR directory; the built-in spherical-head set when omitted
        #[arg(long)]
        hrir: Option<PathBuf>,
        /// Use IIR fits from `fit-hrir` instead of full HRIR convolution
        #[arg(long)]
        fits: Option<PathBuf>,
        /// Overwrite an existing output file
        #[arg(long)]
        force: bool,
    },
    /// Run a WAV file through an effects chain
    Sample {
        #[arg(long = "in")]
        input: PathBuf,
        /// Effects JSON file
        #[arg(long)]
        effects: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "float32")]
        depth: BitDepth,
        #[arg(long)]
        force: bool,
    },
    /// Replace asset references with embedded audio
    Embed {
        #[arg(long = "in")]
        input: PathBuf,
        /// Directory or http(s) base URL the references are relative to
        #[arg(long)]
        assets: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Fit IIR approximations to an HRIR set and print the error per direction
    FitHrir {
        /// HRIR directory
        #[arg(long = "in")]
        input: PathBuf,
        /// 4, 6 or 8
        #[arg(long, default_value_t = 6)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Start the HTTP and session service
    Serve {
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "DATA_DIR", default_value = "data")]
        data: PathBuf,
        #[arg(long, env = "HRIR_DIR")]
        hrir: Option<PathBuf>,
        /// Bind address
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: m.into(),
        }
    }

    fn invalid(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: m.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

type CliResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Validate { scene } => validate(&scene),
        Command::Render {
            scene,
            trajectory,
            out,
            depth,
            hrir,
            fits,
            force,
        } => render(&scene, &trajectory, &out, depth, hrir.as_deref(), fits.as_deref(), force),
        Command::Sample {
            input,
            effects,
            out,
            depth,
            force,
        } => sample(&input, &effects, &out, depth, force),
        Command::Embed {
            input,
            assets,
            out,
            force,
        } => embed(&input, &assets, &out, force),
        Command::FitHrir { input, order, out, force } => fit_hrir(&input, order, &out, force),
        Command::Serve { port, data, hrir, host } => serve(&host, port, data, hrir),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn check_out(out: &Path, force: bool) -> CliResult {
    if out.exists() && !force {
        return Err(Failure::usage(format!(
            "{} exists; pass --force to overwrite",
            out.display()
        )));
    }
    Ok(())
}

fn write_out(out: &Path, bytes: &[u8]) -> CliResult {
    fs::write(out, bytes).map_err(|e| Failure::io(out, e))
}

fn parse_scene(path: &Path) -> Result<Soundscape, Failure> {
    let text = read_text(path)?;
    let parsed = model::deserialize(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed.soundscape)
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads an asset reference relative to `base`, or over HTTP(S).
fn read_asset(base: &Path, uri: &str) -> Result<Vec<u8>, String> {
    if is_url(uri) {
        fetch_url(uri)
    } else {
        let p = base.join(uri);
        fs::read(&p).map_err(|e| format!("{}: {e}", p.display()))
    }
}

fn hrir_failure(dir: &Path, e: HrirError) -> Failure {
    match e {
        HrirError::Io { .. } => Failure::io(dir, e),
        other => Failure::invalid(format!("{}: {other}", dir.display())),
    }
}

fn validate(scene: &Path) -> CliResult {
    let s = parse_scene(scene)?;
    let report = model::validate(&s);
    print!("{report}");
    let errors = report.errors().count();
    let warnings = report.warnings().count();
    println!(
        "{}: {} source(s), {errors} error(s), {warnings} warning(s)",
        scene.display(),
        s.sources.len()
    );
    if errors > 0 {
        return Err(Failure::invalid(format!("{} is invalid", scene.display())));
    }
    Ok(())
}

fn render(
    scene: &Path,
    trajectory: &Path,
    out: &Path,
    depth: BitDepth,
    hrir: Option<&Path>,
    fits: Option<&Path>,
    force: bool,
) -> CliResult {
    check_out(out, force)?;
    let s = parse_scene(scene)?;
    let report = model::validate(&s);
    if report.has_errors() {
        eprint!("{report}");
        return Err(Failure::invalid(format!("{} is invalid", scene.display())));
    }
    let traj = Trajectory::from_json(&read_text(trajectory)?).map_err(|e: TrajectoryError| {
        Failure::invalid(format!("{}: {e}", trajectory.display()))
    })?;
    let hrirs = match hrir {
        Some(dir) => HrirSet::load_dir(dir).map_err(|e| hrir_failure(dir, e))?,
        None => spherical_head_set(48_000),
    };
    let mut options = EngineOptions::default();
    if let Some(path) = fits {
        let fit = serde_json::from_str(&read_text(path)?)
            .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
        options.mode = soundscape::binaural::SpatialMode::HighPerformance(Arc::new(fit));
    }
    let base = base_dir(scene);
    let assets = load_assets(&s, |uri| read_asset(&base, uri)).map_err(|e| match e {
        AssetError::Fetch { .. } => Failure {
            code: EXIT_IO,
            message: e.to_string(),
        },
        AssetError::Decode { .. } => Failure::invalid(e.to_string()),
    })?;
    let buf = render_offline(&s, &traj, &assets, Arc::new(hrirs), DistanceModel::default(), options)
        .map_err(|e| Failure::invalid(e.to_string()))?;
    write_out(out, &encode_wav(&buf, depth))?;
    println!(
        "wrote {} ({} frames, {:.3} s)",
        out.display(),
        buf.frames(),
        buf.duration_secs()
    );
    Ok(())
}

fn sample(input: &Path, effects: &Path, out: &Path, depth: BitDepth, force: bool) -> CliResult {
    check_out(out, force)?;
    let buf = decode_wav(&read_bytes(input)?).map_err(|e| Failure::invalid(format!("{}: {e}", input.display())))?;
    let base = base_dir(effects);
    let mut io_failed = false;
    let chain = parse_effects(&read_text(effects)?, |p| -> Result<_, String> {
        let path = base.join(p);
        let bytes = fs::read(&path).map_err(|e| {
            io_failed = true;
            format!("{}: {e}", path.display())
        })?;
        decode_wav(&bytes).map_err(|e| e.to_string())
    })
    .map_err(|e| match e {
        EffectsDocError::Impulse { .. } if io_failed => Failure {
            code: EXIT_IO,
            message: e.to_string(),
        },
        other => Failure::invalid(format!("{}: {other}", effects.display())),
    })?;
    let processed = render_chain(&buf, &chain).map_err(|e| Failure::invalid(e.to_string()))?;
    write_out(out, &encode_wav(&processed, depth))?;
    println!(
        "wrote {} ({} effect(s), {} frames)",
        out.display(),
        chain.len(),
        processed.frames()
    );
    Ok(())
}

fn embed(input: &Path, assets: &str, out: &Path, force: bool) -> CliResult {
    check_out(out, force)?;
    let s = parse_scene(input)?;
    let embedded = if is_url(assets) {
        embed_assets(&s, |uri| fetch_url(&join_url(assets, uri)))
    } else {
        let base = PathBuf::from(assets);
        embed_assets(&s, |uri| read_asset(&base, uri))
    }
    .map_err(|e| match e {
        EmbedError::Resolve { .. } => Failure {
            code: EXIT_IO,
            message: e.to_string(),
        },
        EmbedError::Decode { .. } => Failure::invalid(e.to_string()),
    })?;
    let doc = model::serialize(&embedded).map_err(|e| Failure::invalid(e.to_string()))?;
    write_out(out, doc.as_bytes())?;
    println!("wrote {} ({} source(s) embedded)", out.display(), embedded.sources.len());
    Ok(())
}

fn fit_hrir(input: &Path, order: usize, out: &Path, force: bool) -> CliResult {
    check_out(out, force)?;
    let set = HrirSet::load_dir(input).map_err(|e| hrir_failure(input, e))?;
    let fits = fit_iir_approximation(&set, order).map_err(|e| Failure::usage(e.to_string()))?;
    println!("{:>8} {:>9} {:>10} {:>10}", "azimuth", "elevation", "left_db", "right_db");
    for d in &fits.directions {
        println!(
            "{:>8} {:>9} {:>10.3} {:>10.3}",
            d.azimuth, d.elevation, d.left.error_db, d.right.error_db
        );
    }
    for w in &fits.warnings {
        let d = &fits.directions[w.direction];
        eprintln!("warning: az {} el {} {} ear: {}", d.azimuth, d.elevation, w.ear, w.message);
    }
    println!(
        "{} direction(s), order {order}, worst error {:.3} dB",
        fits.directions.len(),
        fits.worst_error_db()
    );
    let json = serde_json::to_string_pretty(&fits).map_err(|e| Failure::invalid(e.to_string()))?;
    write_out(out, json.as_bytes())
}

fn serve(host: &str, port: u16, data: PathBuf, hrir: Option<PathBuf>) -> CliResult {
    let _ = tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).try_init();
    let config = ServiceConfig {
        data_dir: data.clone(),
        hrir_dir: hrir.clone(),
        pace: 1.0,
    };
    let state = AppState::new(&config).map_err(|e| match e {
        api::StartError::Hrir(HrirError::Io { .. }) | api::StartError::Storage(_) => Failure {
            code: EXIT_IO,
            message: e.to_string(),
        },
        other => Failure::invalid(other.to_string()),
    })?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure {
        code: EXIT_IO,
        message: e.to_string(),
    })?;
    runtime.block_on(async {
        let addr = format!("{host}:{port}");
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e: io::Error| Failure::io(Path::new(&addr), e))?;
        tracing::info!("listening on http://{}", listener.local_addr().map_or(addr.clone(), |a| a.to_string()));
        println!("listening on http://{addr} (data {})", data.display());
        api::serve(listener, state).await.map_err(|e| Failure::io(Path::new(&addr), e))
    })
}

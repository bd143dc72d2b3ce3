//! `ame`: design calculator, ray tracer and renderer for TMD eyepiece
//! layouts. Data goes to stdout, diagnostics to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ame_optics::design::{design_report, LayoutParams};
use ame_optics::render::{
    defocus_sweep, format_significant, render_view, sharpness_metric, write_csv, write_ppm, DEFAULT_OFFSETS,
    DEFAULT_RAYS_PER_PIXEL,
};
use ame_optics::scene::{builtin_scene, parse_scene, parse_vec3, serialize_scene, HmdSpec, Scene, BUILTIN_SCENES};
use ame_optics::tracer::{spot_diagram, trace_bundle_with, Cone, DEFAULT_MAX_BOUNCES};
use ame_optics::{Error, Pose, RayMode, Vec3};
use clap::{Args, Parser, Subcommand};

/// Environment variable overriding the worker-thread count.
const THREADS_VAR: &str = "AME_THREADS";

#[derive(Parser)]
#[command(
    name = "ame",
    version,
    about = "Ray optics for transmissive-mirror-device near-eye displays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare half-mirror, convex-mirror and TMD eyepiece fields of view.
    Design(DesignArgs),
    /// Trace a point-source bundle and print its spot diagram.
    Trace(TraceArgs),
    /// Render the view from the scene's eye to a PPM file.
    Render(RenderArgs),
    /// Render at several camera offsets and score the sharpness of each.
    Sweep(SweepArgs),
    /// List the built-in scenes, or print or write their scene files.
    Presets(PresetsArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DesignArgs {
    /// Built-in device (`cardboard`, `dk2`).
    #[arg(long, required_unless_present = "fov_deg")]
    hmd: Option<String>,
    /// Device field of view in degrees, for a custom device.
    #[arg(long, conflicts_with = "hmd", requires_all = ["per_eye_px", "panel_width"])]
    fov_deg: Option<f64>,
    /// Per-eye horizontal resolution of a custom device.
    #[arg(long)]
    per_eye_px: Option<u32>,
    /// Per-eye panel width of a custom device, mm.
    #[arg(long)]
    panel_width: Option<f64>,
    /// Screen size for the see-through layouts; defaults to the panel width.
    #[arg(long)]
    l1: Option<f64>,
    /// HMD lens aperture; defaults to `l3`.
    #[arg(long)]
    l2: Option<f64>,
    /// TMD plate width.
    #[arg(long, default_value_t = 120.0)]
    l3: f64,
    /// Eye to half mirror.
    #[arg(long, default_value_t = 30.0)]
    a: f64,
    /// Half mirror to screen.
    #[arg(long, default_value_t = 30.0)]
    d: f64,
    /// Convex mirror magnification.
    #[arg(long, default_value_t = 1.5)]
    a_mag: f64,
    /// TMD to HMD.
    #[arg(long, default_value_t = 40.0)]
    d2: f64,
    /// TMD to eye.
    #[arg(long, default_value_t = 40.0)]
    d4: f64,
    /// TMD cell pitch.
    #[arg(long, default_value_t = 0.5)]
    pitch: f64,
    /// Also write the per-layout comparison as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct TraceArgs {
    /// Scene file or built-in scene name.
    scene: String,
    /// Point source position `x,y,z`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    source: Vec3,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(1..))]
    rays: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// `z` of the spot plane, which is normal to the `z` axis.
    #[arg(long)]
    spot_plane: f64,
    /// Cone axis `x,y,z`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0,1")]
    axis: Vec3,
    /// Cone half angle, degrees.
    #[arg(long, default_value_t = 10.0)]
    half_angle: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_BOUNCES)]
    max_bounces: usize,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct RenderArgs {
    /// Scene file or built-in scene name.
    scene: String,
    /// Output PPM path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RAYS_PER_PIXEL, value_parser = positive_usize)]
    rpp: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Move the camera back along its axis by this many mm.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    /// Scene file or built-in scene name.
    scene: String,
    /// Camera offsets in mm, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = DEFAULT_OFFSETS)]
    offsets: Vec<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RAYS_PER_PIXEL, value_parser = positive_usize)]
    rpp: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct PresetsArgs {
    /// Print this scene's file instead of listing names.
    name: Option<String>,
    /// Write every built-in scene as `<name>.scene` into this directory.
    #[arg(long, conflicts_with = "name")]
    out_dir: Option<PathBuf>,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Validation(_) | Error::Image(_) => 2,
            Error::InvalidGeometry(_) => 3,
            Error::EmptySpot => 4,
            Error::Io(_) => 5,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = Result<String, Failure>;

fn parse_point(s: &str) -> Result<Vec3, String> {
    parse_vec3(s)
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(5, format!("{}: {e}", path.display()))
}

/// A scene file if one exists at `arg`, otherwise a built-in scene.
fn load_scene(arg: &str) -> Result<Scene, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        return parse_scene(&text).map_err(|e| {
            let mut f = Failure::from(e);
            f.message = format!("{arg}: {}", f.message);
            f
        });
    }
    builtin_scene(arg).ok_or_else(|| {
        Failure::new(
            5,
            format!(
                "{arg}: no such scene file or built-in scene (built-ins: {})",
                BUILTIN_SCENES.join(", ")
            ),
        )
    })
}

fn cmd_design(args: &DesignArgs) -> CmdResult {
    let hmd = match (&args.hmd, args.fov_deg) {
        (Some(name), _) => HmdSpec::by_name(name).ok_or_else(|| {
            Failure::new(
                2,
                format!("unknown device `{name}` (known: {})", HmdSpec::NAMES.join(", ")),
            )
        })?,
        (None, Some(fov)) => {
            let px = args.per_eye_px.unwrap_or(0);
            let panel = args.panel_width.unwrap_or(0.0);
            HmdSpec::new("custom", fov, (2 * px, px), (px, px), panel)?
        }
        (None, None) => return Err(Failure::new(2, "either --hmd or --fov-deg is required")),
    };
    let params = LayoutParams {
        l1: args.l1.unwrap_or(hmd.panel_width_mm),
        l2: args.l2.unwrap_or(args.l3),
        l3: args.l3,
        a: args.a,
        d: args.d,
        d2: args.d2,
        d4: args.d4,
        a_mag: args.a_mag,
        theta_device: hmd.fov_deg,
        pitch: args.pitch,
    };
    let report = design_report(&hmd, &params)?;
    if let Some(path) = &args.csv {
        fs::write(path, report.to_csv()).map_err(|e| io_failure(path, e))?;
    }
    Ok(report.to_text())
}

fn cmd_trace(args: &TraceArgs) -> CmdResult {
    let scene = load_scene(&args.scene)?;
    let cone = Cone::new(args.axis, args.half_angle.to_radians())?;
    let bundle = trace_bundle_with(
        &scene,
        args.source,
        args.rays as usize,
        &cone,
        args.seed,
        args.max_bounces,
    );
    let spot = spot_diagram(&bundle, &Pose::at(Vec3::new(0.0, 0.0, args.spot_plane)))?;
    let mut out = String::from("u_mm,v_mm\n");
    for (u, v) in &spot.points {
        let _ = writeln!(out, "{u},{v}");
    }
    let s = &bundle.stats;
    let _ = write!(
        out,
        "# rms_mm={} centroid_mm={},{} points={} rays={} seed={} reached_eye={} escaped={} absorbed={} max_bounces={}",
        format_significant(spot.rms_radius, 6),
        format_significant(spot.centroid.0, 9),
        format_significant(spot.centroid.1, 9),
        spot.points.len(),
        s.emitted,
        bundle.seed,
        s.reached_eye,
        s.escaped,
        s.absorbed,
        s.max_bounces,
    );
    for (name, mode) in [
        ("primary", RayMode::Primary),
        ("double", RayMode::DoubleReflect),
        ("single", RayMode::SingleReflect),
        ("pass", RayMode::PassThrough),
    ] {
        let _ = write!(out, " {name}={}", s.mode(mode).count);
    }
    out.push('\n');
    Ok(out)
}

fn cmd_render(args: &RenderArgs) -> CmdResult {
    let scene = load_scene(&args.scene)?;
    let camera = scene.eye().moved_back(args.offset);
    let img = render_view(&scene, &camera, args.rpp, args.seed)?;
    write_ppm(&img, &args.out).map_err(|e| match e {
        Error::Io(io) => io_failure(&args.out, io),
        other => other.into(),
    })?;
    Ok(format!("sharpness,{}\n", format_significant(sharpness_metric(&img), 9)))
}

fn sweep_image_name(offset: f64) -> String {
    format!("offset_{}mm.ppm", format_significant(offset, 9))
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let scene = load_scene(&args.scene)?;
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    let sweep = defocus_sweep(&scene, scene.eye(), &args.offsets, args.rpp, args.seed)?;
    for (offset, img) in sweep.offsets.iter().zip(&sweep.images) {
        let path = dir.join(sweep_image_name(*offset));
        write_ppm(img, &path).map_err(|e| match e {
            Error::Io(io) => io_failure(&path, io),
            other => other.into(),
        })?;
    }
    let csv = dir.join("sweep.csv");
    write_csv(&sweep, &csv).map_err(|e| match e {
        Error::Io(io) => io_failure(&csv, io),
        other => other.into(),
    })?;
    Ok(format!(
        "{}argmax_offset_mm,{}\n",
        sweep.to_csv(),
        format_significant(sweep.argmax_offset(), 9)
    ))
}

fn cmd_presets(args: &PresetsArgs) -> CmdResult {
    let builtin = |name: &str| {
        builtin_scene(name).ok_or_else(|| {
            Failure::new(
                2,
                format!("unknown built-in scene `{name}` (known: {})", BUILTIN_SCENES.join(", ")),
            )
        })
    };
    if let Some(name) = &args.name {
        return Ok(serialize_scene(&builtin(name)?));
    }
    let mut out = String::new();
    for name in BUILTIN_SCENES {
        match &args.out_dir {
            Some(dir) => {
                fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
                let path = dir.join(format!("{name}.scene"));
                fs::write(&path, serialize_scene(&builtin(name)?)).map_err(|e| io_failure(&path, e))?;
                let _ = writeln!(out, "{}", path.display());
            }
            None => {
                let _ = writeln!(out, "{name}");
            }
        }
    }
    Ok(out)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::new(2, format!("{THREADS_VAR} must be a thread count, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(1, format!("cannot start worker threads: {e}")))
}

fn run(cli: &Cli) -> CmdResult {
    configure_threads()?;
    match &cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Trace(args) => cmd_trace(args),
        Command::Render(args) => cmd_render(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Presets(args) => cmd_presets(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("ame: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! `wearsim`: command-line front end for the wearable link simulator.
//!
//! Exit codes: 0 success, 1 runtime or domain error, 2 usage or
//! configuration error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wearlink::classifier::{self, window_mean, CalibrationProfile, ClassifierError};
use wearlink::codec::{measure_ber, ModemConfig};
use wearlink::controller::{run_pipeline, PipelineOptions};
use wearlink::link::LinkConfig;
use wearlink::seed::{derive_seed, stream};
use wearlink::sensor::{self, Axis, GestureKind, Trace};

use config::ConfigFile;

#[derive(Debug)]
enum CliError {
    /// Bad flags, unreadable inputs, invalid parameters.
    Config(String),
    /// The inputs were fine but the work itself failed.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "wearsim", version, about = "Wearable accelerometer link simulator")]
struct Cli {
    /// JSON file with default values for any flag (flag names in snake_case).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Master seed; every random stream is derived from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Calibration profile JSON.
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stream a trace through link, classifier and controller.
    Simulate(SimulateArgs),
    /// Derive decision bands from labeled trace directories.
    Calibrate(CalibrateArgs),
    /// Sweep channel noise and measure the modem bit error rate.
    Ber(BerArgs),
    /// Classify a trace window by window.
    Classify(ClassifyArgs),
    /// Generate a synthetic gesture trace.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Per-frame loss probability.
    #[arg(long)]
    loss: Option<f64>,
    /// Per-frame latency, ms.
    #[arg(long)]
    latency: Option<u64>,
    /// Channel noise standard deviation (unit-amplitude tones).
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    attenuation: Option<f64>,
    /// PIR detection time, ms.
    #[arg(long, conflicts_with = "no_pir")]
    pir_at: Option<u64>,
    /// Never trigger the PIR sensor.
    #[arg(long)]
    no_pir: bool,
    /// Disarm this many ms after the PIR trigger.
    #[arg(long)]
    pir_timeout: Option<u64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    debounce: Option<usize>,
    #[arg(long)]
    appliance: Option<String>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of up/down gesture traces.
    #[arg(long = "on")]
    on_dir: Option<PathBuf>,
    /// Directory of horizontal gesture traces.
    #[arg(long = "off")]
    off_dir: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    margin_lo: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    margin_hi: Option<i64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    debounce: Option<usize>,
}

#[derive(Args, Debug)]
struct BerArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    noise_min: Option<f64>,
    #[arg(long)]
    noise_max: Option<f64>,
    /// Number of evenly spaced sweep points, endpoints included.
    #[arg(long)]
    points: Option<usize>,
    /// Bits per sweep point.
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    attenuation: Option<f64>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Window length; defaults to the profile's.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// vertical, horizontal or other.
    #[arg(long)]
    kind: Option<String>,
    /// Number of samples.
    #[arg(long = "samples")]
    samples: Option<usize>,
    /// Output file name inside --out (default `<kind>_<seed>.csv`).
    #[arg(long)]
    name: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Config(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("wearsim: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(CliError::Config)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Simulate(args) => simulate(args, &file),
        Command::Calibrate(args) => calibrate(args, &file),
        Command::Ber(args) => ber(args, &file),
        Command::Classify(args) => classify(args, &file),
        Command::Gen(args) => gen(args, &file),
    }
}

struct Resolved {
    seed: u64,
    out: PathBuf,
    profile: Option<PathBuf>,
}

fn resolve_common(c: Common, file: &ConfigFile) -> Resolved {
    Resolved {
        seed: c.seed.or(file.seed).unwrap_or(0),
        out: c.out.or_else(|| file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
        profile: c.profile.or_else(|| file.profile.clone()),
    }
}

fn load_profile(path: Option<&Path>) -> CliResult<CalibrationProfile> {
    match path {
        Some(p) => CalibrationProfile::load(p).map_err(|e| CliError::Config(e.to_string())),
        None => Ok(CalibrationProfile::default()),
    }
}

fn load_trace(path: Option<PathBuf>) -> CliResult<Trace> {
    let path = path.ok_or_else(|| CliError::Config("--trace is required".into()))?;
    sensor::load_trace(&path).map_err(|e| CliError::Config(e.to_string()))
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("{}: cannot create output directory: {e}", dir.display())))
}

fn write_out(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn simulate(args: SimulateArgs, file: &ConfigFile) -> CliResult<()> {
    let common = resolve_common(args.common, file);
    let mut profile = load_profile(common.profile.as_deref())?;
    if let Some(w) = args.window.or(file.window) {
        profile.window_size = w;
    }
    if let Some(d) = args.debounce.or(file.debounce) {
        profile.debounce_n = d;
    }
    profile.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let link = LinkConfig {
        loss_probability: args.loss.or(file.loss).unwrap_or(0.0),
        latency: args.latency.or(file.latency).unwrap_or(LinkConfig::default().latency),
        seed: derive_seed(common.seed, stream::LINK_LOSS),
        ..LinkConfig::default()
    };
    link.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let modem = ModemConfig {
        noise_sigma: args.noise.or(file.noise).unwrap_or(0.0),
        channel_attenuation: args.attenuation.or(file.attenuation).unwrap_or(1.0),
        seed: derive_seed(common.seed, stream::CHANNEL_NOISE),
        ..ModemConfig::default()
    };
    modem.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let no_pir = args.no_pir || file.no_pir.unwrap_or(false);
    let options = PipelineOptions {
        pir_at: if no_pir { None } else { Some(args.pir_at.or(file.pir_at).unwrap_or(0)) },
        pir_timeout: args.pir_timeout.or(file.pir_timeout),
        appliance: args
            .appliance
            .or_else(|| file.appliance.clone())
            .unwrap_or_else(|| wearlink::controller::DEFAULT_APPLIANCE.to_string()),
        initially_powered: false,
    };

    let trace = load_trace(args.trace.or_else(|| file.trace.clone()))?;
    if trace.is_empty() {
        return Err(CliError::Config("trace has no samples".into()));
    }
    prepare_out(&common.out)?;

    let report = run_pipeline(&trace, &profile, &link, &modem, &options)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut log = report.log.join("\n");
    log.push('\n');
    write_out(&common.out.join("simulate.log"), &log)?;

    let s = report.stats;
    let summary = format!(
        "frames_sent,frames_delivered,frames_lost,windows,actions_emitted,resets,final_state\n\
         {},{},{},{},{},{},{}\n",
        s.frames_sent,
        s.frames_delivered,
        s.frames_lost,
        s.windows,
        s.actions_emitted,
        s.resets,
        report.final_state.status()
    );
    write_out(&common.out.join("summary.csv"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn traces_in(dir: &Path, role: &str, label: GestureKind) -> CliResult<Vec<Trace>> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Config(format!("{}: no .csv traces for the {role} set", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let mut t = sensor::load_trace(p).map_err(|e| CliError::Config(e.to_string()))?;
            // unlabeled recordings take the label of the directory they sit in
            if t.label.is_none() && !t.is_empty() {
                t.label = Some(label);
            }
            Ok(t)
        })
        .collect()
}

fn calibrate(args: CalibrateArgs, file: &ConfigFile) -> CliResult<()> {
    let common = resolve_common(args.common, file);
    let on_dir = args
        .on_dir
        .or_else(|| file.on.clone())
        .ok_or_else(|| CliError::Config("--on is required".into()))?;
    let off_dir = args
        .off_dir
        .or_else(|| file.off.clone())
        .ok_or_else(|| CliError::Config("--off is required".into()))?;
    let margin_lo = args.margin_lo.or(file.margin_lo).unwrap_or(0);
    let margin_hi = args.margin_hi.or(file.margin_hi).unwrap_or(0);
    let window = args.window.or(file.window).unwrap_or(classifier::DEFAULT_WINDOW);
    let debounce = args.debounce.or(file.debounce).unwrap_or(classifier::DEFAULT_DEBOUNCE);
    if window == 0 || debounce == 0 {
        return Err(CliError::Config("--window and --debounce must be at least 1".into()));
    }

    let on = traces_in(&on_dir, "on", GestureKind::VerticalUpDown)?;
    let off = traces_in(&off_dir, "off", GestureKind::Horizontal)?;
    prepare_out(&common.out)?;

    let profile = match classifier::calibrate(&on, &off, margin_lo, margin_hi) {
        Ok(p) => CalibrationProfile { window_size: window, debounce_n: debounce, ..p },
        Err(ClassifierError::Overlap { on, off }) => {
            return Err(CliError::Runtime(format!(
                "bands overlap: on_band {on} off_band {off}"
            )))
        }
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };
    let path = common.out.join("profile.json");
    write_out(&path, &profile.to_json())?;
    println!("on_band {}", profile.on_band);
    println!("off_band {}", profile.off_band);
    Ok(())
}

fn ber(args: BerArgs, file: &ConfigFile) -> CliResult<()> {
    let common = resolve_common(args.common, file);
    let lo = args.noise_min.or(file.noise_min).unwrap_or(0.0);
    let hi = args.noise_max.or(file.noise_max).unwrap_or(2.0);
    let points = args.points.or(file.points).unwrap_or(5);
    let bits = args.bits.or(file.bits).unwrap_or(10_000);
    let attenuation = args.attenuation.or(file.attenuation).unwrap_or(1.0);

    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
        return Err(CliError::Config(format!("invalid noise range [{lo}, {hi}]")));
    }
    if points == 0 || (points == 1 && hi != lo) {
        return Err(CliError::Config(format!("{points} point(s) cannot span [{lo}, {hi}]")));
    }
    if bits == 0 {
        return Err(CliError::Config("--bits must be at least 1".into()));
    }
    let base = ModemConfig { channel_attenuation: attenuation, seed: common.seed, ..ModemConfig::default() };
    base.validate().map_err(|e| CliError::Config(e.to_string()))?;
    prepare_out(&common.out)?;

    let mut csv = String::from("noise_sigma,ber\n");
    for i in 0..points {
        let sigma = if points == 1 { lo } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 };
        let cfg = ModemConfig { noise_sigma: sigma, ..base };
        let rate = measure_ber(&cfg, bits).map_err(|e| CliError::Runtime(e.to_string()))?;
        csv.push_str(&format!("{sigma},{rate}\n"));
    }
    write_out(&common.out.join("ber.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn classify(args: ClassifyArgs, file: &ConfigFile) -> CliResult<()> {
    let common = resolve_common(args.common, file);
    let mut profile = load_profile(common.profile.as_deref())?;
    if let Some(w) = args.window.or(file.window) {
        profile.window_size = w;
    }
    profile.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let trace = load_trace(args.trace.or_else(|| file.trace.clone()))?;
    if trace.len() < profile.window_size {
        return Err(CliError::Config(format!(
            "trace has {} samples, shorter than one {}-sample window",
            trace.len(),
            profile.window_size
        )));
    }

    let as_f64 = |m: classifier::Mean| *m.numer() as f64 / *m.denom() as f64;
    println!("window,z_mean,y_mean,action");
    for (i, w) in trace.samples().chunks_exact(profile.window_size).enumerate() {
        let z = window_mean(w, Axis::Z).map_err(|e| CliError::Runtime(e.to_string()))?;
        let y = window_mean(w, Axis::Y).map_err(|e| CliError::Runtime(e.to_string()))?;
        let action = classifier::classify_window(w, &profile)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        println!("{i},{:.2},{:.2},{action}", as_f64(z), as_f64(y));
    }
    Ok(())
}

fn gen(args: GenArgs, file: &ConfigFile) -> CliResult<()> {
    let common = resolve_common(args.common, file);
    let kind: GestureKind = args
        .kind
        .or_else(|| file.kind.clone())
        .ok_or_else(|| CliError::Config("--kind is required".into()))?
        .parse()
        .map_err(CliError::Config)?;
    let n = args.samples.or(file.samples).unwrap_or(64);
    let trace = sensor::generate_gesture(kind, n, common.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    prepare_out(&common.out)?;
    let name = args
        .name
        .or_else(|| file.name.clone())
        .unwrap_or_else(|| format!("{}_{}.csv", kind.name().to_ascii_lowercase(), common.seed));
    let path = common.out.join(name);
    sensor::save_trace(&trace, &path).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{}", path.display());
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use affinemc::frame::{count_yuv420_frames, read_yuv420, write_yuv420};
use affinemc::harness::report::{mode_map_pgm, pus_csv, stats_csv, write_file};
use affinemc::harness::{encode_frame, EncoderConfig};
use affinemc::interp::{FilterBank, FilterKind, PHASES};
use affinemc::search::SearchConfig;
use affinemc::synth::{format_sidecar, smooth_textured_frame, synth_sequence, SimilarityWarp};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

mod config;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "affinemc", version, about = "Affine motion-compensated prediction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a progressively warped synthetic sequence and its ground-truth sidecar.
    Synth(SynthArgs),
    /// Predict each frame from its predecessor and write stats, PU lists,
    /// predictions and mode maps.
    Predict(PredictArgs),
    /// Dump the 64-phase interpolation filter as CSV.
    Filters(FilterArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// I420 file holding the base frame; a seeded texture is used when omitted.
    #[arg(long)]
    base: Option<PathBuf>,
    /// Frame of `--base` to warp.
    #[arg(long, default_value_t = 0)]
    base_frame: usize,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Per-frame rotation in degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    theta: f64,
    /// Per-frame zoom factor.
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Per-frame translation in pixels.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    tx: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    ty: f64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Output YUV path; the sidecar goes next to it with a `.txt` suffix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Default)]
pub struct PredictArgs {
    /// key=value settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// `N` (first N frames) or `START:END`, half-open.
    #[arg(long)]
    pub frames: Option<String>,
    #[arg(long)]
    pub qp: Option<u8>,
    /// Search range in whole pixels.
    #[arg(long)]
    pub range: Option<u32>,
    #[arg(long)]
    pub no_affine: bool,
    #[arg(long)]
    pub no_amm: bool,
    /// Render affine PUs with per-pixel MVs (decisions are unchanged).
    #[arg(long)]
    pub pixel_mc: bool,
    /// Use the cascaded quarter-pel + bilinear interpolation.
    #[arg(long)]
    pub two_step_filter: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(["4", "8"]), default_value = "8")]
    taps: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to process exit codes.
enum Failure {
    Config(anyhow::Error),
    Io(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Io(e) | Failure::Internal(e) => e,
        }
    }
}

/// Sorts a library error into the exit-code classes.
fn classify(e: anyhow::Error) -> Failure {
    use affinemc::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::Io { .. } | E::ShortFile { .. } | E::Parse { .. }) => Failure::Io(e),
        Some(E::InvalidParameter(_) | E::DimensionMismatch(_)) => Failure::Config(e),
        Some(_) => Failure::Internal(e),
        None if e.downcast_ref::<std::io::Error>().is_some() => Failure::Io(e),
        None => Failure::Internal(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => synth(&args),
        Command::Predict(args) => RunConfig::resolve(&args).map_err(Failure::Config).and_then(|cfg| predict(&cfg)),
        Command::Filters(args) => filters(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn io<T>(r: std::result::Result<T, affinemc::Error>) -> std::result::Result<T, Failure> {
    r.map_err(|e| classify(e.into()))
}

fn synth(args: &SynthArgs) -> std::result::Result<(), Failure> {
    let warp = SimilarityWarp::new(args.theta.to_radians(), args.rho, args.tx, args.ty);
    io(warp.validate())?;
    let base = match &args.base {
        Some(path) => io(read_yuv420(path, args.width, args.height, args.base_frame))?,
        None => smooth_textured_frame(args.width, args.height, args.seed),
    };
    let (frames, entries) = io(synth_sequence(&base, &warp, args.count))?;
    io(write_yuv420(&frames, &args.out))?;
    io(write_file(sidecar_path(&args.out), format_sidecar(&entries)))?;
    Ok(())
}

fn sidecar_path(yuv: &Path) -> PathBuf {
    let mut s = yuv.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

fn predict(cfg: &RunConfig) -> std::result::Result<(), Failure> {
    let available = io(count_yuv420_frames(&cfg.input, cfg.width, cfg.height))?;
    let (start, end) = (cfg.frames.0, cfg.frames.1.unwrap_or(available));
    if end > available || end < start + 2 {
        return Err(Failure::Config(anyhow::anyhow!(
            "frame range {start}..{end} needs at least two of the {available} frames in {}",
            cfg.input.display()
        )));
    }
    let enc_cfg = EncoderConfig {
        qp: cfg.qp,
        search: SearchConfig {
            range: cfg.range,
            ..SearchConfig::default()
        },
        enable_affine: cfg.enable_affine,
        enable_amm: cfg.enable_amm,
        pixel_based_mc: cfg.pixel_based_mc,
        two_step_filter: cfg.two_step_filter,
    };
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("creating {}", cfg.out.display()))
        .map_err(Failure::Io)?;

    let bank = FilterBank::new();
    let mut reference = io(read_yuv420(&cfg.input, cfg.width, cfg.height, start))?;
    let mut stats = Vec::new();
    let mut encoded = Vec::new();
    for poc in start + 1..end {
        let cur = io(read_yuv420(&cfg.input, cfg.width, cfg.height, poc))?;
        let enc = io(encode_frame(&cur, &reference, &enc_cfg, &bank))?;
        io(write_file(
            cfg.out.join(format!("modes_{poc:04}.pgm")),
            mode_map_pgm(cfg.width, cfg.height, &enc.pus),
        ))?;
        stats.push(enc.stats.clone());
        encoded.push(enc);
        reference = cur;
    }

    let predictions: Vec<_> = encoded.iter().map(|e| e.prediction.clone()).collect();
    io(write_yuv420(&predictions, cfg.out.join("prediction.yuv")))?;
    io(write_file(cfg.out.join("stats.csv"), stats_csv(&stats)))?;
    let pu_lists: Vec<(usize, &[_])> = encoded.iter().map(|e| (e.stats.poc, e.pus.as_slice())).collect();
    io(write_file(cfg.out.join("pus.csv"), pus_csv(&pu_lists)))?;
    Ok(())
}

fn filter_csv(kind: FilterKind) -> String {
    let bank = FilterBank::new();
    let taps = kind.taps();
    let mut out = String::from("phase");
    for k in 0..taps {
        out.push_str(&format!(",c{k}"));
    }
    out.push('\n');
    for p in 0..PHASES {
        out.push_str(&p.to_string());
        for c in bank.row(kind, p) {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
    }
    out
}

fn filters(args: &FilterArgs) -> std::result::Result<(), Failure> {
    let kind = if args.taps == "4" { FilterKind::Chroma } else { FilterKind::Luma };
    let csv = filter_csv(kind);
    match &args.out {
        Some(path) => io(write_file(path, csv)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

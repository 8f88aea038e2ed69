//! Command-line front end: `simulate`, `correct`, `sweep`, `plot`, `gen-fpn`
//! and `gen-scene`.
//!
//! Exit status is 0 on success, 2 for usage, configuration or input errors
//! (including shape mismatches) and 3 for failures after inputs were accepted.
//! Nothing is written before the inputs have been read and validated, and
//! nothing is written outside `--out`.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{debug, info};
use serde::Deserialize;

use crate::config::Document;
use crate::dither::{cycle_difference, estimate_gradient, Axis, DifferenceSample};
use crate::error::NucError;
use crate::grid::Frame;
use crate::io::{self, LinearMapping, Sidecar};
use crate::plot::render_svg;
use crate::poisson::{reconstruct_offset, DC_CONVENTION};
use crate::sensor::{compensate_offset, OffsetKind, OffsetMap};
use crate::sim::{
    gen_fpn, run_experiment_on, sweep, SceneSource, SweepParam, SweepTable, SyntheticScene,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "nuc-forge",
    version,
    about = "Derivative-based fixed pattern noise correction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one seeded experiment and dump maps and previews.
    Simulate(CommonArgs),
    /// Subtract a known or estimated offset map from a directory of frames.
    Correct(CommonArgs),
    /// Run the parameter sweep from the `sweep` section.
    Sweep(CommonArgs),
    /// Render a sweep CSV as an SVG line chart.
    Plot(CommonArgs),
    /// Write a synthetic offset map.
    GenFpn(CommonArgs),
    /// Write synthetic scene frames.
    GenScene(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Dotted-key override, e.g. `fpn.strength=0.2`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also render the sweep as SVG.
    #[arg(long)]
    pub plot: bool,
    /// Replaces `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug)]
enum Failure {
    Usage(NucError),
    Runtime(NucError),
}

type Outcome<T> = std::result::Result<T, Failure>;

trait Classify<T> {
    fn usage(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T> Classify<T> for crate::Result<T> {
    fn usage(self) -> Outcome<T> {
        self.map_err(Failure::Usage)
    }

    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| match e {
            NucError::DimensionMismatch { .. } => Failure::Usage(e),
            e => Failure::Runtime(e),
        })
    }
}

fn usage_err<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(NucError::InvalidParameter(msg.into())))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (cmd, args) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::Correct(a) => ("correct", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Plot(a) => ("plot", a),
        Command::GenFpn(a) => ("gen-fpn", a),
        Command::GenScene(a) => ("gen-scene", a),
    };
    init_logging(args.verbose);
    let result = load_document(args).and_then(|doc| match &cli.command {
        Command::Simulate(_) => cmd_simulate(&doc, args),
        Command::Correct(_) => cmd_correct(&doc, args),
        Command::Sweep(_) => cmd_sweep(&doc, args),
        Command::Plot(_) => cmd_plot(&doc, args),
        Command::GenFpn(_) => cmd_gen_fpn(&doc, args),
        Command::GenScene(_) => cmd_gen_scene(&doc, args),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(e)) => {
            eprintln!("nuc-forge {cmd}: {e}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("nuc-forge {cmd}: {e}");
            EXIT_RUNTIME
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn load_document(args: &CommonArgs) -> Outcome<Document> {
    let mut doc = Document::load(&args.config)
        .map_err(|e| match e {
            NucError::Io(io) => {
                NucError::InvalidParameter(format!("{}: {io}", args.config.display()))
            }
            e => e,
        })
        .usage()?
        .with_overrides(&args.overrides)
        .usage()?;
    if let Some(seed) = args.seed {
        doc.experiment.master_seed = seed;
    }
    doc.validate().usage()?;
    Ok(doc)
}

/// Creates the output directory and records the effective configuration.
fn prepare_out(doc: &Document, out: &Path) -> Outcome<()> {
    fs::create_dir_all(out).map_err(NucError::from).runtime()?;
    let text = doc.to_json_pretty().runtime()?;
    fs::write(out.join("effective_config.json"), text)
        .map_err(NucError::from)
        .runtime()
}

fn write_map(path: &Path, frame: &Frame, sidecar: &Sidecar) -> Outcome<()> {
    io::write_pfm(path, frame).runtime()?;
    io::write_sidecar(path, sidecar).runtime()
}

fn write_preview(path: &Path, frame: &Frame) -> Outcome<()> {
    let mapping = LinearMapping::min_max(frame, 255);
    io::write_pgm(path, frame, &mapping).runtime()?;
    io::write_sidecar(
        path,
        &Sidecar {
            mapping: Some(mapping),
            ..Sidecar::default()
        },
    )
    .runtime()
}

fn cmd_simulate(doc: &Document, args: &CommonArgs) -> Outcome<()> {
    let cfg = &doc.experiment;
    let scene = cfg.scene_source().usage()?;
    let result = run_experiment_on(cfg, scene.as_ref()).runtime()?;
    let t = result.timings;
    info!(
        "acquisition {:.3}s, reconstruction {:.3}s",
        t.acquisition_s, t.reconstruction_s
    );
    info!(
        "normalized error {:.6e} (uncorrected {:.6e})",
        result.normalized_error, result.corrupted_error
    );

    let out = &args.out;
    prepare_out(doc, out)?;
    let summary = serde_json::to_string_pretty(&result.summary(cfg))
        .map_err(NucError::from)
        .runtime()?;
    fs::write(out.join("result.json"), summary + "\n")
        .map_err(NucError::from)
        .runtime()?;

    let seed = Some(cfg.master_seed);
    let map_sidecar = |residual_norm| Sidecar {
        kind: Some(OffsetKind::GainCompensated),
        seed,
        dc_convention: Some(DC_CONVENTION.into()),
        residual_norm,
        mapping: None,
    };
    let difference = result
        .estimated_offset
        .frame()
        .zip_with(result.true_offset.frame(), |e, t| e - t)
        .runtime()?;
    write_map(
        &out.join("truth.pfm"),
        result.true_offset.frame(),
        &map_sidecar(None),
    )?;
    write_map(
        &out.join("estimate.pfm"),
        result.estimated_offset.frame(),
        &map_sidecar(Some(result.residual_norm)),
    )?;
    write_map(&out.join("difference.pfm"), &difference, &map_sidecar(None))?;

    let corrected =
        compensate_offset(&result.reference_capture, &result.estimated_offset).runtime()?;
    write_preview(&out.join("original.pgm"), &result.reference_scene)?;
    write_preview(&out.join("corrupted.pgm"), &result.reference_capture)?;
    write_preview(&out.join("corrected.pgm"), &corrected)?;
    println!("normalized_error {}", result.normalized_error);
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairList {
    pairs: Vec<PairEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairEntry {
    axis: String,
    base: PathBuf,
    shifted: PathBuf,
}

fn parse_axis(label: &str) -> Option<Axis> {
    match label {
        "x" | "horizontal" => Some(Axis::Horizontal),
        "y" | "vertical" => Some(Axis::Vertical),
        _ => None,
    }
}

/// Reads `pairs.json` from `dir` and estimates the offset from the listed
/// base/shifted frames.
fn estimate_from_pairs(dir: &Path) -> Outcome<(OffsetMap, f64)> {
    let text = fs::read_to_string(dir.join("pairs.json"))
        .map_err(NucError::from)
        .usage()?;
    let list: PairList = serde_json::from_str(&text)
        .map_err(NucError::from)
        .usage()?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for p in &list.pairs {
        let Some(axis) = parse_axis(&p.axis) else {
            return usage_err(format!("unknown axis `{}` in pairs.json", p.axis));
        };
        let base = io::read_frame(&dir.join(&p.base)).usage()?;
        let shifted = io::read_frame(&dir.join(&p.shifted)).usage()?;
        let sample: DifferenceSample = cycle_difference(&base, &shifted, axis).usage()?;
        match axis {
            Axis::Horizontal => x.push(sample),
            Axis::Vertical => y.push(sample),
        }
    }
    debug!(
        "{} horizontal and {} vertical dither pairs",
        x.len(),
        y.len()
    );
    let gradient = estimate_gradient(&x, &y).usage()?;
    let report = reconstruct_offset(&gradient).runtime()?;
    Ok((report.offset, report.residual_norm))
}

fn cmd_correct(doc: &Document, args: &CommonArgs) -> Outcome<()> {
    let Some(spec) = &doc.correct else {
        return usage_err("config has no `correct` section");
    };
    let frames = io::read_frame_dir(&spec.frames_dir).usage()?;
    if frames.is_empty() {
        return usage_err(format!(
            "no .pfm/.pgm frames in {}",
            spec.frames_dir.display()
        ));
    }
    let mut stems = HashSet::new();
    for (path, _) in &frames {
        if !stems.insert(path.file_stem().map(|s| s.to_owned())) {
            return usage_err(format!("two frames share the name of {}", path.display()));
        }
    }

    let (offset, residual_norm) = match (&spec.offset, &spec.dither_dir) {
        (Some(path), _) => {
            let frame = io::read_frame(path).usage()?;
            if let Ok(side) = io::read_sidecar(path) {
                if side.kind == Some(OffsetKind::Raw) {
                    return usage_err(
                        "offset map is raw; frames are corrected with a gain-compensated offset",
                    );
                }
            }
            (OffsetMap::compensated(frame), None)
        }
        (None, Some(dir)) => {
            let (o, r) = estimate_from_pairs(dir)?;
            (o, Some(r))
        }
        (None, None) => unreachable!("validated by Document::validate"),
    };
    for (path, frame) in &frames {
        if frame.grid().dims() != offset.dims() {
            let (h, w) = offset.dims();
            let (fh, fw) = frame.grid().dims();
            return usage_err(format!(
                "{} is {fh}x{fw} but the offset map is {h}x{w}",
                path.display()
            ));
        }
    }

    let out = &args.out;
    prepare_out(doc, out)?;
    if spec.dither_dir.is_some() {
        write_map(
            &out.join("offset.pfm"),
            offset.frame(),
            &Sidecar {
                kind: Some(OffsetKind::GainCompensated),
                dc_convention: Some(DC_CONVENTION.into()),
                residual_norm,
                ..Sidecar::default()
            },
        )?;
    }
    let corrected_dir = out.join("corrected");
    fs::create_dir_all(&corrected_dir)
        .map_err(NucError::from)
        .runtime()?;
    for (path, frame) in &frames {
        let corrected = compensate_offset(frame, &offset).runtime()?;
        let name =
            Path::new(path.file_stem().expect("listed frames have names")).with_extension("pfm");
        io::write_pfm(corrected_dir.join(name), &corrected).runtime()?;
    }
    info!("corrected {} frames", frames.len());
    Ok(())
}

fn cmd_sweep(doc: &Document, args: &CommonArgs) -> Outcome<()> {
    let Some(spec) = &doc.sweep else {
        return usage_err("config has no `sweep` section");
    };
    for p in std::iter::once(&spec.axis).chain(spec.family.as_ref()) {
        SweepParam::parse(&p.param).usage()?;
    }
    if doc.experiment.scene_dir.is_some() {
        doc.experiment.scene_source().usage()?;
    }
    let table = sweep(&doc.experiment, spec).runtime()?;

    let out = &args.out;
    prepare_out(doc, out)?;
    let file = fs::File::create(out.join("sweep.csv"))
        .map_err(NucError::from)
        .runtime()?;
    table.write_csv(file).runtime()?;
    if args.plot {
        write_svg(&out.join("sweep.svg"), &table, doc.plot.title.as_deref())?;
    }
    Ok(())
}

fn write_svg(path: &Path, table: &SweepTable, title: Option<&str>) -> Outcome<()> {
    fs::write(path, render_svg(table, title))
        .map_err(NucError::from)
        .runtime()
}

fn cmd_plot(doc: &Document, args: &CommonArgs) -> Outcome<()> {
    let csv = doc
        .plot
        .csv
        .clone()
        .unwrap_or_else(|| args.out.join("sweep.csv"));
    let file = fs::File::open(&csv)
        .map_err(|e| NucError::InvalidParameter(format!("{}: {e}", csv.display())))
        .usage()?;
    let table = SweepTable::read_csv(file).usage()?;
    prepare_out(doc, &args.out)?;
    write_svg(
        &args.out.join("sweep.svg"),
        &table,
        doc.plot.title.as_deref(),
    )
}

fn cmd_gen_fpn(doc: &Document, args: &CommonArgs) -> Outcome<()> {
    let cfg = &doc.experiment;
    let (h, w) = if cfg.scene_dir.is_some() {
        cfg.scene_source().usage()?.dims()
    } else {
        (cfg.scene.height, cfg.scene.width)
    };
    let fpn = gen_fpn(&cfg.seeded_fpn(), h, w).usage()?;
    prepare_out(doc, &args.out)?;
    write_map(
        &args.out.join("fpn.pfm"),
        fpn.frame(),
        &Sidecar {
            kind: Some(fpn.kind()),
            seed: Some(cfg.master_seed),
            dc_convention: Some(DC_CONVENTION.into()),
            ..Sidecar::default()
        },
    )
}

fn cmd_gen_scene(doc: &Document, args: &CommonArgs) -> Outcome<()> {
    let spec = &doc.gen_scene;
    if spec.frames == 0 {
        return usage_err("gen_scene.frames must be at least 1");
    }
    let scene = SyntheticScene::new(&doc.experiment.seeded_scene()).usage()?;
    prepare_out(doc, &args.out)?;
    for k in 0..spec.frames {
        let t = spec.start + k as u64 * spec.step;
        io::write_pfm(args.out.join(format!("frame_{k:04}.pfm")), &scene.frame(t)).runtime()?;
    }
    Ok(())
}

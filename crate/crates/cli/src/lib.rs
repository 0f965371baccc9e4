//! Command-line front end for the cloudiness pipeline.
//!
//! Subcommands: `analyze` (indices + JSON report), `radial` (rotation
//! mean as CSV), `simulate` (synthetic test images), `batch` (sample
//! groups, one directory each), `plot` (re-render SVGs from saved
//! outputs). Exit codes: 0 success, 1 usage error, 2 data error, each
//! failure with a one-line diagnostic on stderr. Identical arguments,
//! files, and seeds give byte-identical JSON and CSV output.

pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cloudscope_core::{
    analyze_set, load_image, log_attenuation, normalize_relative_weight, parse_radial_csv,
    pixelwise_mean, power_spectrum_2d, radial_mean, restore_saved_field, save_image, sidecar_path,
    simulate_preset, to_transmission_image, write_per_image_csv, write_radial_csv, AnalysisMode,
    AnalyzeConfig, AverageStage, BitDepth, CliReport, FieldKind, FrequencyBand, RadialSpectrum,
    ScalarField, SimPreset, SummaryStats, TransformMode, TransformOptions, WindowKind, WindowSpec,
    ZeroPolicy,
};

/// Incident intensity used when rendering simulated transmission images.
const SIM_G0: f64 = 200.0;
/// Darkest gray value a rendered simulation may reach; stays above the
/// log transform's positivity requirement with margin.
const SIM_MIN_GRAY: f64 = 2.0;

// usage errors never reach dispatch: clap rejects them during parsing,
// so every in-flight failure is a data error
enum AppError {
    Data(String),
}

fn data_err(e: impl std::fmt::Display) -> AppError {
    AppError::Data(e.to_string())
}

/// Runs the CLI on the given argv (including the program name) and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Radial(args) => cmd_radial(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Batch(args) => cmd_batch(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match result {
        Ok(()) => 0,
        Err(AppError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("CLOUDSCOPE_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .ok();
            }
            _ => eprintln!(
                "warning: ignoring CLOUDSCOPE_THREADS={value}: expected a positive integer"
            ),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "cloudscope",
    version,
    about = "Cloudiness analysis for nonwoven and filter-media images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute cloudiness indices for a set of images
    Analyze(AnalyzeArgs),
    /// Emit the rotation-averaged power spectrum as CSV
    Radial(RadialArgs),
    /// Render a synthetic test image with a known structure mix
    Simulate(SimulateArgs),
    /// Analyze sample groups, one directory per group
    Batch(BatchArgs),
    /// Re-render SVG plots from saved reports or spectra
    Plot(PlotArgs),
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Hann,
    None,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ZeroPolicyArg {
    /// Fail on zero gray values
    Error,
    /// Replace zeros by the smallest positive gray value
    Clamp,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// One index per image
    PerImage,
    /// One index for the pixel-wise mean image
    Mean,
    /// Both per-image and aggregate indices
    Both,
}

#[derive(Debug, Copy, Clone, PartialEq, Eq, ValueEnum)]
enum PlotKindArg {
    /// Inputs are radial-spectrum CSVs
    Radial,
    /// Inputs are report JSONs from analyze or batch
    Boxplot,
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s}: not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{s}: must be a positive finite number"))
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("{s}: expected LO:HI"))?;
    let lo = parse_positive(lo.trim())?;
    let hi = parse_positive(hi.trim())?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(format!("{s}: lower bound must be below the upper bound"))
    }
}

fn parse_band(s: &str) -> Result<FrequencyBand, String> {
    let (lo, hi) = parse_pair(s)?;
    Ok(FrequencyBand::new(lo, hi))
}

fn parse_wavelength_band(s: &str) -> Result<FrequencyBand, String> {
    let (lo, hi) = parse_pair(s)?;
    Ok(FrequencyBand::from_wavelengths(lo, hi))
}

fn parse_preset(s: &str) -> Result<SimPreset, String> {
    SimPreset::from_name(s).ok_or_else(|| format!("{s}: expected sim1, sim2, sim3, or sim4"))
}

#[derive(Args, Clone)]
struct PipelineOpts {
    /// Physical pixel size in um per pixel (never read from file headers)
    #[arg(long, value_name = "UM", value_parser = parse_positive)]
    pixel_size: f64,
    /// Window applied before the FFT
    #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
    window: WindowArg,
    /// Inputs are weight fields already; skip the Beer-Lambert log
    #[arg(long)]
    no_log: bool,
    /// Incident intensity g0; defaults to each image's maximum gray value
    #[arg(long, value_name = "GRAY", value_parser = parse_positive)]
    g0: Option<f64>,
    /// Handling of zero gray values under the log transform
    #[arg(long, value_enum, default_value_t = ZeroPolicyArg::Error)]
    zero_policy: ZeroPolicyArg,
}

#[derive(Args, Clone)]
struct BandOpts {
    /// Frequency band LO:HI in angular 1/um (rho = 2*pi / wavelength)
    #[arg(long, value_name = "LO:HI", value_parser = parse_band, conflicts_with = "wavelengths")]
    band: Option<FrequencyBand>,
    /// Structure-wavelength band LO:HI in um, the cloud sizes of interest
    #[arg(long, value_name = "LO:HI", value_parser = parse_wavelength_band)]
    wavelengths: Option<FrequencyBand>,
}

impl BandOpts {
    fn resolve(&self) -> FrequencyBand {
        self.band
            .or(self.wavelengths)
            .unwrap_or(FrequencyBand::new(0.02, 0.10))
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    pipeline: PipelineOpts,
    #[command(flatten)]
    band: BandOpts,
    /// Which indices to report
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Average after the log transform instead of before when aggregating
    #[arg(long)]
    average_after_log: bool,
    /// Grayscale input images (PNG or PGM/PNM)
    #[arg(required = true, value_name = "IMAGE")]
    inputs: Vec<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write a per-image id,cli CSV
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write a box plot of the per-image indices
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct RadialArgs {
    #[command(flatten)]
    pipeline: PipelineOpts,
    /// Grayscale input images; several are averaged pixel-wise first
    #[arg(required = true, value_name = "IMAGE")]
    inputs: Vec<PathBuf>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write a log-log plot of the spectrum
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Structure mix: sim1 fibers only; sim2/sim3 add a 875/1750 um
    /// cloud layer at 2:1 fiber-to-cloud energy; sim4 at 3:1
    #[arg(long, value_parser = parse_preset)]
    preset: SimPreset,
    /// RNG seed; equal seeds give byte-identical images
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output image path (.png or .pgm); a JSON sidecar records the
    /// rendered value range for lossless re-analysis
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    pipeline: PipelineOpts,
    #[command(flatten)]
    band: BandOpts,
    /// Which indices to report
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    /// Average after the log transform instead of before when aggregating
    #[arg(long)]
    average_after_log: bool,
    /// Sample-group directories; the directory name becomes the group id
    #[arg(required = true, value_name = "DIR")]
    groups: Vec<PathBuf>,
    /// Write the combined JSON report here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write a group,id,cli CSV over all groups
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Write a box plot with one box per group
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// What the inputs contain
    #[arg(long, value_enum)]
    kind: PlotKindArg,
    /// Saved outputs of radial (CSV) or analyze/batch (JSON)
    #[arg(required = true, value_name = "PATH")]
    inputs: Vec<PathBuf>,
    /// Output SVG path
    #[arg(long, value_name = "PATH")]
    svg: PathBuf,
}

/// Combined report of a multi-group run, in argv order.
#[derive(Serialize, Deserialize)]
struct GroupedReport {
    groups: Vec<GroupEntry>,
}

#[derive(Serialize, Deserialize)]
struct GroupEntry {
    id: String,
    report: CliReport,
}

fn make_config(
    pipeline: &PipelineOpts,
    band: FrequencyBand,
    mode: ModeArg,
    average_after_log: bool,
) -> AnalyzeConfig {
    AnalyzeConfig {
        transform: transform_options(pipeline),
        window: window_spec(pipeline),
        band,
        mode: match mode {
            ModeArg::PerImage => AnalysisMode::PerImage,
            ModeArg::Mean => AnalysisMode::PixelwiseMean,
            ModeArg::Both => AnalysisMode::Both,
        },
        average_stage: if average_after_log {
            AverageStage::AfterLog
        } else {
            AverageStage::BeforeLog
        },
    }
}

fn transform_options(pipeline: &PipelineOpts) -> TransformOptions {
    TransformOptions {
        mode: if pipeline.no_log {
            TransformMode::Linear
        } else {
            TransformMode::BeerLambert
        },
        incident_intensity: pipeline.g0,
        zero_policy: match pipeline.zero_policy {
            ZeroPolicyArg::Error => ZeroPolicy::Error,
            ZeroPolicyArg::Clamp => ZeroPolicy::ClampToMinPositive,
        },
    }
}

fn window_spec(pipeline: &PipelineOpts) -> WindowSpec {
    WindowSpec {
        kind: match pipeline.window {
            WindowArg::Hann => WindowKind::Hann,
            WindowArg::None => WindowKind::None,
        },
        energy_compensation: true,
    }
}

/// Loads one image. When the save-time sidecar sits next to the file the
/// original values are restored from it (the plain pixels are rescaled
/// to the full gray range, which creates zeros the log transform cannot
/// accept); otherwise raw quantized grays are used.
fn load_field(path: &Path, pixel_size: f64, expect_gray: bool) -> Result<ScalarField, AppError> {
    let wrap = |e: cloudscope_core::IoError| AppError::Data(e.to_string());
    if sidecar_path(path).exists() {
        let field = restore_saved_field(path, pixel_size).map_err(wrap)?;
        if expect_gray {
            field
                .with_kind(FieldKind::GrayImage)
                .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
        } else {
            Ok(field)
        }
    } else {
        load_image(path, pixel_size).map_err(wrap)
    }
}

fn load_inputs(
    paths: &[PathBuf],
    pixel_size: f64,
    expect_gray: bool,
    strip_directories: bool,
) -> Result<Vec<(String, ScalarField)>, AppError> {
    paths
        .iter()
        .map(|path| {
            let id = if strip_directories {
                path.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string())
            } else {
                path.display().to_string()
            };
            Ok((id, load_field(path, pixel_size, expect_gray)?))
        })
        .collect()
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), AppError> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| AppError::Data(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{text}");
            std::io::stdout().flush().map_err(data_err)
        }
    }
}

/// Box plots need the quartiles, which exist only for three or more
/// per-image indices; validated before any output file is written so a
/// doomed invocation does not leave partial results behind.
fn boxplot_box(
    label: String,
    report: &CliReport,
    context: &str,
) -> Result<(String, SummaryStats), AppError> {
    let stats = report.stats.clone().ok_or_else(|| {
        AppError::Data(format!(
            "{context}box plot needs per-image indices; use --mode per-image or both"
        ))
    })?;
    if stats.q1.is_none() {
        return Err(AppError::Data(format!(
            "{context}box plot needs at least 3 per-image indices, got {}",
            report.per_image.len()
        )));
    }
    Ok((label, stats))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), AppError> {
    let config = make_config(
        &args.pipeline,
        args.band.resolve(),
        args.mode,
        args.average_after_log,
    );
    let items = load_inputs(
        &args.inputs,
        args.pipeline.pixel_size,
        !args.pipeline.no_log,
        false,
    )?;
    let report = analyze_set(&items, &config).map_err(data_err)?;
    let boxplot = args
        .svg
        .as_ref()
        .map(|path| {
            let label = format!("{} images", report.n_images);
            boxplot_box(label, &report, "").map(|b| (path.clone(), b))
        })
        .transpose()?;
    write_text(args.out.as_deref(), &report.to_json())?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_per_image_csv(&report, &mut buf).map_err(data_err)?;
        fs::write(path, buf).map_err(data_err)?;
    }
    if let Some((path, b)) = boxplot {
        let svg = svg::boxplot_svg(&[b]).map_err(data_err)?;
        write_text(Some(&path), &svg)?;
    }
    Ok(())
}

fn cmd_radial(args: RadialArgs) -> Result<(), AppError> {
    let items = load_inputs(
        &args.inputs,
        args.pipeline.pixel_size,
        !args.pipeline.no_log,
        false,
    )?;
    // several inputs are reduced by the same convention as the analyze
    // aggregate: pixel-wise mean of the raw images, then one pipeline run
    let (label, field) = if items.len() == 1 {
        (items[0].0.clone(), items[0].1.clone())
    } else {
        let fields: Vec<ScalarField> = items.iter().map(|(_, f)| f.clone()).collect();
        (
            format!("mean of {} images", items.len()),
            pixelwise_mean(&fields).map_err(data_err)?,
        )
    };
    let (weight, warnings) =
        log_attenuation(&field, &transform_options(&args.pipeline)).map_err(data_err)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    let (normalized, _, _) = normalize_relative_weight(&weight).map_err(data_err)?;
    let ps = power_spectrum_2d(&normalized, &window_spec(&args.pipeline)).map_err(data_err)?;
    let rs = radial_mean(&ps);
    let mut buf = Vec::new();
    write_radial_csv(&rs, &mut buf).map_err(data_err)?;
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    write_text(args.csv.as_deref(), &text)?;
    if let Some(path) = &args.svg {
        let svg = svg::radial_svg(&[(label, rs)]).map_err(data_err)?;
        write_text(Some(path), &svg)?;
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), AppError> {
    let field = simulate_preset(args.preset, args.seed).map_err(data_err)?;
    let (min, max) = field.min_max();
    let span = max - min;
    if span <= 0.0 {
        return Err(AppError::Data(
            "simulated field is constant; nothing to render".to_string(),
        ));
    }
    let absorption = (SIM_G0 / SIM_MIN_GRAY).ln() / span;
    let image = to_transmission_image(&field, SIM_G0, absorption).map_err(data_err)?;
    let info = save_image(&image, &args.out, BitDepth::Sixteen).map_err(data_err)?;
    eprintln!(
        "wrote {} ({}x{} px, 16-bit, gray {:.3}..{:.3}) with value-range sidecar",
        args.out.display(),
        image.width(),
        image.height(),
        info.min,
        info.max,
    );
    Ok(())
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>, AppError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| AppError::Data(format!("reading group {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| {
                    let e = e.to_ascii_lowercase();
                    e == "png" || e == "pgm" || e == "pnm"
                })
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AppError::Data(format!(
            "group {}: no images (*.png, *.pgm, *.pnm)",
            dir.display()
        )));
    }
    Ok(files)
}

fn cmd_batch(args: BatchArgs) -> Result<(), AppError> {
    let config = make_config(
        &args.pipeline,
        args.band.resolve(),
        args.mode,
        args.average_after_log,
    );
    let mut groups = Vec::new();
    for dir in &args.groups {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        let files = list_images(dir)?;
        let items = load_inputs(&files, args.pipeline.pixel_size, !args.pipeline.no_log, true)?;
        let report = analyze_set(&items, &config)
            .map_err(|e| AppError::Data(format!("group {id}: {e}")))?;
        groups.push(GroupEntry { id, report });
    }
    let combined = GroupedReport { groups };
    let boxes = args
        .svg
        .as_ref()
        .map(|path| {
            combined
                .groups
                .iter()
                .map(|entry| {
                    let context = format!("group {}: ", entry.id);
                    boxplot_box(entry.id.clone(), &entry.report, &context)
                })
                .collect::<Result<Vec<_>, _>>()
                .map(|boxes| (path.clone(), boxes))
        })
        .transpose()?;
    let mut json = serde_json::to_string_pretty(&combined).expect("report serializes");
    json.push('\n');
    write_text(args.out.as_deref(), &json)?;
    if let Some(path) = &args.csv {
        let mut text = String::from("group,id,cli\n");
        for entry in &combined.groups {
            for row in &entry.report.per_image {
                text.push_str(&format!("{},{},{}\n", entry.id, row.id, row.cli));
            }
        }
        write_text(Some(path), &text)?;
    }
    if let Some((path, boxes)) = boxes {
        let svg = svg::boxplot_svg(&boxes).map_err(data_err)?;
        write_text(Some(&path), &svg)?;
    }
    Ok(())
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_plot(args: PlotArgs) -> Result<(), AppError> {
    let svg = match args.kind {
        PlotKindArg::Radial => {
            let mut curves: Vec<(String, RadialSpectrum)> = Vec::new();
            for path in &args.inputs {
                let file = fs::File::open(path)
                    .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
                let rs = parse_radial_csv(BufReader::new(file))
                    .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
                curves.push((file_label(path), rs));
            }
            svg::radial_svg(&curves).map_err(data_err)?
        }
        PlotKindArg::Boxplot => {
            let mut boxes: Vec<(String, SummaryStats)> = Vec::new();
            for path in &args.inputs {
                let text = fs::read_to_string(path)
                    .map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
                let entries: Vec<(String, Option<SummaryStats>)> =
                    if let Ok(grouped) = serde_json::from_str::<GroupedReport>(&text) {
                        grouped
                            .groups
                            .into_iter()
                            .map(|g| (g.id, g.report.stats))
                            .collect()
                    } else {
                        let report: CliReport = serde_json::from_str(&text).map_err(|e| {
                            AppError::Data(format!("{}: not a report JSON: {e}", path.display()))
                        })?;
                        vec![(file_label(path), report.stats)]
                    };
                for (id, stats) in entries {
                    let stats = stats.ok_or_else(|| {
                        AppError::Data(format!("{id}: report has no per-image statistics"))
                    })?;
                    boxes.push((id, stats));
                }
            }
            svg::boxplot_svg(&boxes).map_err(data_err)?
        }
    };
    write_text(Some(&args.svg), &svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(line)
    }

    #[test]
    fn band_flag_parses_and_validates() {
        let cli = parse(&[
            "cloudscope", "analyze", "--pixel-size", "7.2", "--band", "0.02:0.10", "a.png",
        ])
        .unwrap();
        match cli.command {
            Command::Analyze(args) => {
                let band = args.band.resolve();
                assert_eq!(band.rho_lo, 0.02);
                assert_eq!(band.rho_hi, 0.10);
            }
            _ => panic!("wrong command"),
        }
        for bad in ["0.1:0.02", "0.02", "x:y", "-1:2", "0:1"] {
            assert!(
                parse(&["cloudscope", "analyze", "--pixel-size", "7", "--band", bad, "a.png"])
                    .is_err(),
                "{bad} accepted"
            );
        }
    }

    #[test]
    fn wavelength_flag_converts_and_conflicts_with_band() {
        let cli = parse(&[
            "cloudscope", "analyze", "--pixel-size", "7", "--wavelengths", "62.8:314.2", "a.png",
        ])
        .unwrap();
        match cli.command {
            Command::Analyze(args) => {
                let band = args.band.resolve();
                assert!((band.rho_lo - 2.0 * std::f64::consts::PI / 314.2).abs() < 1e-12);
                assert!((band.rho_hi - 2.0 * std::f64::consts::PI / 62.8).abs() < 1e-12);
            }
            _ => panic!("wrong command"),
        }
        assert!(parse(&[
            "cloudscope", "analyze", "--pixel-size", "7", "--band", "0.02:0.1",
            "--wavelengths", "60:300", "a.png",
        ])
        .is_err());
    }

    #[test]
    fn defaults_mirror_the_reference_study() {
        let cli = parse(&["cloudscope", "analyze", "--pixel-size", "7.2", "a.png"]).unwrap();
        match cli.command {
            Command::Analyze(args) => {
                let band = args.band.resolve();
                assert_eq!((band.rho_lo, band.rho_hi), (0.02, 0.10));
                assert_eq!(args.pipeline.window, WindowArg::Hann);
                assert!(!args.pipeline.no_log);
                assert_eq!(args.pipeline.zero_policy, ZeroPolicyArg::Error);
                assert_eq!(args.mode, ModeArg::Both);
                let config = make_config(&args.pipeline, band, args.mode, args.average_after_log);
                assert_eq!(config.transform.mode, TransformMode::BeerLambert);
                assert_eq!(config.average_stage, AverageStage::BeforeLog);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn preset_names_resolve() {
        for name in ["sim1", "sim2", "sim3", "sim4"] {
            assert!(parse(&[
                "cloudscope", "simulate", "--preset", name, "--out", "x.png"
            ])
            .is_ok());
        }
        assert!(parse(&["cloudscope", "simulate", "--preset", "sim5", "--out", "x.png"]).is_err());
    }

    #[test]
    fn exit_codes_for_usage_help_and_missing_data() {
        assert_eq!(run(["cloudscope", "--help"]), 0);
        assert_eq!(run(["cloudscope", "--version"]), 0);
        assert_eq!(run(["cloudscope", "analyze"]), 1, "missing required args");
        assert_eq!(run(["cloudscope", "nonsense"]), 1);
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("absent.png");
        assert_eq!(
            run([
                "cloudscope".to_string(),
                "analyze".to_string(),
                "--pixel-size".to_string(),
                "7".to_string(),
                missing.display().to_string(),
            ]),
            2,
            "unreadable input is a data error"
        );
    }
}

//! Command-line front end: `single`, `batch`, `calibrate` and `filter`.
//!
//! Configuration resolves as built-in defaults, overlaid by `--config FILE`,
//! overlaid by flags. The file uses the same JSON layout as the `config`
//! block of a batch report, so a report's echo can be fed back in verbatim.
//!
//! Exit codes: 0 success, 2 some frames failed, 1 fatal configuration or I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::airlight::{Aggregation, AirlightConfig};
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, DepthCodec, HolePolicy, DEFAULT_FAR_DEPTH};
use crate::optics::{
    beta_from_mor, mor_from_beta, validate_fog_beta, AirlightPolicy, BlendSpace, FogClass,
    CANONICAL_BETAS,
};
use crate::pipeline::{
    filter_manifest, planned_outputs, prepare_frame, process_batch, summarize_run, summary_json,
    validate_batch, variant_file_name, BatchRequest, BetaValue, DatasetManifest, FogSettings,
    FrameRecord, Predicate,
};
use crate::raster::ColorTriple;
use crate::raster_io;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Name of the report written into the batch output directory.
pub const REPORT_FILE: &str = "report.json";

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub betas: Option<Vec<BetaValue>>,
    /// Visibilities in meters, converted to β. Exclusive with `betas`.
    pub mors: Option<Vec<f64>>,
    pub fog: FogSettings,
    pub workers: usize,
    pub filter: Option<Predicate>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            betas: None,
            mors: None,
            fog: FogSettings::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            filter: None,
        }
    }
}

impl RunConfig {
    /// Densities to render, in request order.
    pub fn resolved_betas(&self) -> Result<Vec<BetaValue>> {
        match (&self.betas, &self.mors) {
            (Some(_), Some(_)) => Err(Error::Config(
                "give either β values or MOR values, not both".into(),
            )),
            (None, None) => Err(Error::Config("no β or MOR values given".into())),
            (Some(b), None) if b.is_empty() => Err(Error::Config("empty β list".into())),
            (None, Some(m)) if m.is_empty() => Err(Error::Config("empty MOR list".into())),
            (Some(b), None) => Ok(b.clone()),
            (None, Some(m)) => m
                .iter()
                .map(|&mor| {
                    let beta = beta_from_mor(mor)?;
                    BetaValue::with_label(beta, format_beta(beta))
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        self.resolved_betas()?;
        self.fog.validate()
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// β with six decimals, trailing zeros trimmed.
pub fn format_beta(beta: f64) -> String {
    let s = format!("{beta:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.into()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fog",
    version,
    about = "Render homogeneous fog onto clear-weather images using depth"
)]
pub struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fog one image at one or more densities.
    Single(SingleArgs),
    /// Fog every frame of a JSON Lines manifest.
    Batch(BatchArgs),
    /// Print the β ↔ visibility table.
    Calibrate(CalibrateArgs),
    /// Filter a manifest by numeric metadata.
    Filter(FilterArgs),
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub depth: PathBuf,
    /// Output directory (defaults to the image's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub fog: FogArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Metadata predicate, e.g. "sky_contrast <= 3".
    #[arg(long)]
    pub filter: Option<String>,
    /// Validate and count planned outputs without writing anything.
    #[arg(long)]
    pub dry_run: bool,
    #[command(flatten)]
    pub fog: FogArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, num_args = 1.., conflicts_with = "mor", required_unless_present = "mor")]
    pub beta: Vec<f64>,
    #[arg(long, num_args = 1..)]
    pub mor: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub predicate: String,
    /// Where to write the filtered manifest; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AirlightMode {
    Estimate,
    Fixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BlendArg {
    Gamma,
    Linear,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HoleArg {
    Reject,
    MaxDistance,
    Nearest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CodecArg {
    Float32,
    ScaledU16,
    DisparityU16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregationArg {
    Max,
    Mean,
}

#[derive(Debug, Default, Args)]
pub struct FogArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Attenuation coefficients in 1/m, kept verbatim in output names.
    #[arg(long, num_args = 1.., conflicts_with = "mor")]
    pub beta: Vec<String>,
    /// Visibilities (meteorological optical range) in meters.
    #[arg(long, num_args = 1..)]
    pub mor: Vec<f64>,
    #[arg(long, value_enum)]
    pub airlight: Option<AirlightMode>,
    /// Fixed atmospheric light as "r,g,b" in [0, 1]; implies --airlight fixed.
    #[arg(long, value_name = "R,G,B")]
    pub airlight_color: Option<String>,
    #[arg(long, value_enum)]
    pub blend: Option<BlendArg>,
    #[arg(long, value_enum)]
    pub hole_policy: Option<HoleArg>,
    /// Planar depth in meters assigned to holes with --hole-policy max-distance.
    #[arg(long)]
    pub far_depth: Option<f64>,
    #[arg(long, requires_all = ["fy", "cx", "cy"])]
    pub fx: Option<f64>,
    #[arg(long, requires_all = ["fx", "cx", "cy"])]
    pub fy: Option<f64>,
    #[arg(long, requires_all = ["fx", "fy", "cy"])]
    pub cx: Option<f64>,
    #[arg(long, requires_all = ["fx", "fy", "cx"])]
    pub cy: Option<f64>,
    #[arg(long, value_enum)]
    pub depth_codec: Option<CodecArg>,
    /// Meters per raw unit for scaled-u16 depth.
    #[arg(long)]
    pub depth_scale: Option<f64>,
    /// Stereo baseline in meters for disparity-u16 depth.
    #[arg(long)]
    pub baseline: Option<f64>,
    /// Focal length in pixels used by the disparity codec (defaults to --fx).
    #[arg(long)]
    pub disparity_fx: Option<f64>,
    #[arg(long)]
    pub patch_radius: Option<usize>,
    #[arg(long)]
    pub brightest_fraction: Option<f64>,
    #[arg(long, value_enum)]
    pub aggregation: Option<AggregationArg>,
}

fn parse_color(s: &str) -> Result<ColorTriple> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("airlight color {s:?} is not r,g,b")))?;
    match parts[..] {
        [r, g, b] => {
            ColorTriple::checked(r, g, b).map_err(|e| Error::Config(format!("airlight color: {e}")))
        }
        _ => Err(Error::Config(format!(
            "airlight color {s:?} needs three values"
        ))),
    }
}

impl FogArgs {
    /// Flag values as a partial config document.
    fn to_patch(&self, extra: Value) -> Result<Value> {
        let mut top = serde_json::Map::new();
        let mut fog = serde_json::Map::new();

        if !self.beta.is_empty() {
            let betas = self
                .beta
                .iter()
                .map(|b| b.parse::<BetaValue>())
                .collect::<Result<Vec<_>>>()?;
            top.insert("betas".into(), json!(betas));
            top.insert("mors".into(), Value::Null);
        }
        if !self.mor.is_empty() {
            top.insert("mors".into(), json!(self.mor));
            top.insert("betas".into(), Value::Null);
        }

        if let Some(c) = &self.airlight_color {
            fog.insert(
                "airlight".into(),
                json!(AirlightPolicy::Fixed(parse_color(c)?)),
            );
        } else {
            match self.airlight {
                Some(AirlightMode::Estimate) => {
                    fog.insert("airlight".into(), json!(AirlightPolicy::Estimated));
                }
                Some(AirlightMode::Fixed) => {
                    fog.insert(
                        "airlight".into(),
                        json!(AirlightPolicy::Fixed(ColorTriple::WHITE)),
                    );
                }
                None => {}
            }
        }
        if let Some(b) = self.blend {
            let space = match b {
                BlendArg::Gamma => BlendSpace::GammaEncoded,
                BlendArg::Linear => BlendSpace::LinearLight,
            };
            fog.insert("blend_space".into(), json!(space));
        }
        match (self.hole_policy, self.far_depth) {
            (Some(HoleArg::Reject), _) => {
                fog.insert("hole_policy".into(), json!(HolePolicy::Reject));
            }
            (Some(HoleArg::Nearest), _) => {
                fog.insert("hole_policy".into(), json!(HolePolicy::NearestValid));
            }
            (Some(HoleArg::MaxDistance), far) => {
                let far = far.unwrap_or(DEFAULT_FAR_DEPTH);
                fog.insert("hole_policy".into(), json!(HolePolicy::MaxDistance { far }));
            }
            (None, Some(far)) => {
                fog.insert("hole_policy".into(), json!(HolePolicy::MaxDistance { far }));
            }
            (None, None) => {}
        }
        if let (Some(fx), Some(fy), Some(cx), Some(cy)) = (self.fx, self.fy, self.cx, self.cy) {
            fog.insert(
                "intrinsics".into(),
                json!(CameraIntrinsics { fx, fy, cx, cy }),
            );
        }
        if let Some(codec) = self.depth_codec {
            let c = match codec {
                CodecArg::Float32 => DepthCodec::Float32Raster,
                CodecArg::ScaledU16 => DepthCodec::ScaledU16Png {
                    scale: self.depth_scale.ok_or_else(|| {
                        Error::Config("--depth-codec scaled-u16 needs --depth-scale".into())
                    })?,
                },
                CodecArg::DisparityU16 => DepthCodec::disparity(
                    self.baseline.ok_or_else(|| {
                        Error::Config("--depth-codec disparity-u16 needs --baseline".into())
                    })?,
                    self.disparity_fx.or(self.fx).ok_or_else(|| {
                        Error::Config(
                            "--depth-codec disparity-u16 needs --disparity-fx or --fx".into(),
                        )
                    })?,
                ),
            };
            fog.insert("depth_codec".into(), json!(c));
        }
        let mut airlight_cfg = serde_json::Map::new();
        if let Some(r) = self.patch_radius {
            airlight_cfg.insert("patch_radius".into(), json!(r));
        }
        if let Some(f) = self.brightest_fraction {
            airlight_cfg.insert("brightest_fraction".into(), json!(f));
        }
        if let Some(a) = self.aggregation {
            let agg = match a {
                AggregationArg::Max => Aggregation::MaxIntensityPixel,
                AggregationArg::Mean => Aggregation::MeanOfCandidates,
            };
            airlight_cfg.insert("aggregation".into(), json!(agg));
        }
        if !airlight_cfg.is_empty() {
            fog.insert("airlight_config".into(), Value::Object(airlight_cfg));
        }
        if !fog.is_empty() {
            top.insert("fog".into(), Value::Object(fog));
        }
        if let Value::Object(extra) = extra {
            top.extend(extra);
        }
        Ok(Value::Object(top))
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self, extra: Value) -> Result<RunConfig> {
        let mut merged = RunConfig::default().to_json();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let file: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if !file.is_object() {
                return Err(Error::Config(format!(
                    "{}: config must be a JSON object",
                    path.display()
                )));
            }
            overlay(&mut merged, file, 0);
        }
        overlay(&mut merged, self.to_patch(extra)?, 0);
        let cfg: RunConfig = serde_json::from_value(merged)
            .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Merge `patch` into `base`. Objects merge key by key down to the
/// `airlight_config` level; anything deeper (tagged enums, intrinsics) is
/// replaced whole so variants never mix fields.
fn overlay(base: &mut Value, patch: Value, depth: usize) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) if depth < 2 => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && mergeable(&k) => {
                        overlay(slot, v, depth + 1)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

fn mergeable(key: &str) -> bool {
    matches!(key, "fog" | "airlight_config")
}

/// Parse arguments and run, writing to the given streams. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_FATAL,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Single(a) => cmd_fog_single(a, cli.json, out, err),
        Command::Batch(a) => cmd_fog_batch(a, cli.json, out, err),
        Command::Calibrate(a) => cmd_calibrate(a, cli.json, out),
        Command::Filter(a) => cmd_filter(a, cli.json, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FATAL
        }
    }
}

fn warn_haze(betas: &[BetaValue], err: &mut dyn Write) {
    for b in betas {
        if let Ok(FogClass::HazeOnly) = validate_fog_beta(b.value) {
            let _ = writeln!(
                err,
                "warning: beta {} is haze, not fog (MOR > 1 km)",
                b.label
            );
        }
    }
}

pub fn cmd_fog_single(
    args: &SingleArgs,
    json_out: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let cfg = args.fog.resolve(Value::Null)?;
    let betas = cfg.resolved_betas()?;
    warn_haze(&betas, err);

    let stem = args
        .image
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Config(format!("no file stem in {}", args.image.display())))?
        .to_owned();
    let out_dir = args
        .out
        .clone()
        .or_else(|| args.image.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let mut record = FrameRecord::new(stem.clone(), &args.image, &args.depth);
    record.intrinsics = cfg.fog.intrinsics;
    if record.intrinsics.is_none() {
        return Err(Error::Config(
            "camera intrinsics required (--fx --fy --cx --cy)".into(),
        ));
    }

    let prepared = prepare_frame(&record, Path::new(""), &cfg.fog)?;
    for w in &prepared.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    let mut variants = Vec::new();
    for beta in &betas {
        let v = prepared.render(beta.value, cfg.fog.blend_space)?;
        let path = out_dir.join(variant_file_name(&stem, beta));
        raster_io::write_image(&v.image, &path, v.image.bit_depth)?;
        variants.push((beta, v.mean_transmittance, path));
    }

    let l = prepared.airlight;
    if json_out {
        let doc = json!({
            "airlight": l,
            "config": cfg.to_json(),
            "variants": variants.iter().map(|(b, t, p)| json!({
                "beta": b, "mean_transmittance": t, "output": p,
            })).collect::<Vec<_>>(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).unwrap())
            .map_err(|e| Error::io("<stdout>", e))?;
    } else {
        let _ = writeln!(out, "airlight: ({:.4}, {:.4}, {:.4})", l.r, l.g, l.b);
        for (b, t, p) in &variants {
            let _ = writeln!(
                out,
                "beta {}: mean t = {:.6} -> {}",
                b.label,
                t,
                p.display()
            );
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_fog_batch(
    args: &BatchArgs,
    json_out: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let mut extra = serde_json::Map::new();
    if let Some(w) = args.workers {
        extra.insert("workers".into(), json!(w));
    }
    if let Some(f) = &args.filter {
        extra.insert("filter".into(), json!(f.parse::<Predicate>()?));
    }
    let cfg = args.fog.resolve(Value::Object(extra))?;
    let betas = cfg.resolved_betas()?;
    warn_haze(&betas, err);

    let manifest = DatasetManifest::load(&args.manifest)?;
    let (manifest, excluded) = match &cfg.filter {
        Some(p) => {
            let outcome = filter_manifest(&manifest, p);
            let n = outcome.excluded();
            (outcome.manifest, n)
        }
        None => (manifest, 0),
    };
    let req = BatchRequest {
        manifest: &manifest,
        betas: &betas,
        settings: &cfg.fog,
        workers: cfg.workers,
        out_dir: &args.out,
        config_echo: cfg.to_json(),
    };

    if args.dry_run {
        validate_batch(&req)?;
        let missing = manifest
            .frames
            .iter()
            .flat_map(|f| [&f.image, &f.depth].into_iter().chain(&f.annotations))
            .filter(|p| !manifest.resolve(p).exists())
            .count();
        let planned = planned_outputs(&manifest, &betas);
        if json_out {
            let doc = json!({
                "planned_outputs": planned,
                "frames": manifest.len(),
                "excluded": excluded,
                "missing_inputs": missing,
            });
            let _ = writeln!(out, "{doc}");
        } else {
            let _ = writeln!(out, "frames: {}", manifest.len());
            let _ = writeln!(out, "excluded: {excluded}");
            let _ = writeln!(out, "missing inputs: {missing}");
            let _ = writeln!(out, "planned outputs: {planned}");
        }
        return Ok(EXIT_OK);
    }

    let mut report = process_batch(&req)?;
    report.summary.frames_excluded = excluded;
    raster_io::write_atomic(args.out.join(REPORT_FILE), report.to_json().as_bytes())?;
    if json_out {
        let _ = writeln!(out, "{}", summary_json(&report));
    } else {
        let _ = write!(out, "{}", summarize_run(&report));
    }
    for f in report.failures() {
        let _ = writeln!(
            err,
            "error: frame {}: {}",
            f.id,
            f.error.as_deref().unwrap_or("failed")
        );
    }
    Ok(report.exit_code())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub beta: f64,
    pub mor_m: f64,
    pub class: FogClass,
    pub canonical: bool,
}

pub fn calibration_table(betas: &[f64], mors: &[f64]) -> Result<Vec<CalibrationRow>> {
    let pairs: Vec<(f64, f64)> = if !betas.is_empty() {
        betas
            .iter()
            .map(|&b| mor_from_beta(b).map(|v| (b, v.mor)))
            .collect::<Result<_>>()?
    } else {
        mors.iter()
            .map(|&m| beta_from_mor(m).map(|b| (b, m)))
            .collect::<Result<_>>()?
    };
    pairs
        .into_iter()
        .map(|(beta, mor)| {
            Ok(CalibrationRow {
                beta,
                mor_m: mor,
                class: validate_fog_beta(beta)?,
                canonical: CANONICAL_BETAS.iter().any(|&c| (c - beta).abs() < 1e-12),
            })
        })
        .collect()
}

pub fn cmd_calibrate(args: &CalibrateArgs, json_out: bool, out: &mut dyn Write) -> Result<i32> {
    let rows = calibration_table(&args.beta, &args.mor)?;
    if json_out {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&rows).unwrap());
        return Ok(EXIT_OK);
    }
    let _ = writeln!(
        out,
        "{:<12} {:>10}  {:<6} note",
        "beta [1/m]", "MOR [m]", "class"
    );
    for r in rows {
        let class = match r.class {
            FogClass::IsFog => "fog",
            FogClass::HazeOnly => "haze",
            FogClass::Clear => "clear",
        };
        let note = if r.canonical { "canonical density" } else { "" };
        let _ = writeln!(
            out,
            "{:<12} {:>10.2}  {:<6} {note}",
            format_beta(r.beta),
            r.mor_m,
            class
        );
    }
    Ok(EXIT_OK)
}

pub fn cmd_filter(args: &FilterArgs, json_out: bool, out: &mut dyn Write) -> Result<i32> {
    let predicate: Predicate = args.predicate.parse()?;
    let manifest = DatasetManifest::load(&args.manifest)?;
    let outcome = filter_manifest(&manifest, &predicate);

    match &args.out {
        Some(path) => {
            let mut kept = outcome.manifest.clone();
            let same_dir =
                path.parent().map(Path::to_path_buf).unwrap_or_default() == manifest.root;
            if !same_dir {
                // Relative paths would dangle next to the new file.
                for f in &mut kept.frames {
                    f.image = manifest.resolve(&f.image);
                    f.depth = manifest.resolve(&f.depth);
                    for a in &mut f.annotations {
                        *a = manifest.resolve(a);
                    }
                }
            }
            kept.save(path)?;
        }
        None if !json_out => {
            let _ = write!(out, "{}", outcome.manifest.to_jsonl());
            return Ok(EXIT_OK);
        }
        None => {}
    }
    if json_out {
        let doc = json!({
            "kept": outcome.manifest.len(),
            "excluded": outcome.excluded(),
            "missing_key": outcome.missing_key,
            "rejected": outcome.rejected,
        });
        let _ = writeln!(out, "{doc}");
    } else {
        let _ = writeln!(out, "kept: {}", outcome.manifest.len());
        let _ = writeln!(out, "excluded: {}", outcome.excluded());
        let _ = writeln!(out, "missing key: {}", outcome.missing_key.len());
    }
    Ok(EXIT_OK)
}

/// Airlight configuration echo for logs.
pub fn describe_airlight(cfg: &AirlightConfig) -> String {
    format!(
        "dark channel {0}x{0}, top {1}, {2:?}",
        2 * cfg.patch_radius + 1,
        cfg.brightest_fraction,
        cfg.aggregation
    )
}

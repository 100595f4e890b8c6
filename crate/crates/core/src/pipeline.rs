//! Per-frame fog synthesis and batch dataset generation.
//!
//! A batch reads a JSON Lines manifest, renders one output per `(frame, β)`
//! pair and copies each frame's annotations unchanged next to every variant.
//! The atmospheric light is estimated once per frame and shared by all of its
//! variants. Outputs go through temp files renamed into place, and a frame
//! that fails writes nothing, so the output set is a pure function of the
//! inputs regardless of worker count.
//!
//! Output layout under the output directory:
//!
//! ```text
//! images/<frame_id>_beta_<β>.png
//! annotations/<source parent dir>/<source stem>_beta_<β>.<ext>
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::airlight::{estimate_airlight, AirlightConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    decode_depth, fill_holes, planar_to_radial, CameraIntrinsics, DepthCodec, DistanceMap,
    HolePolicy,
};
use crate::optics::{
    apply_fog, mor_from_beta, transmittance, AirlightPolicy, BlendSpace, FogParams,
};
use crate::raster::{ColorRaster, ColorTriple};
use crate::raster_io::{self, NamingRule};

/// Version of the report JSON layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const IMAGES_DIR: &str = "images";
pub const ANNOTATIONS_DIR: &str = "annotations";

/// An attenuation coefficient together with the text it was given as, which
/// is what appears in output file names.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaValue {
    pub value: f64,
    pub label: String,
}

impl BetaValue {
    pub fn new(value: f64) -> Result<Self> {
        Self::with_label(value, format!("{value}"))
    }

    pub fn with_label(value: f64, label: impl Into<String>) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::param("beta", format!("must be >= 0, got {value}")));
        }
        let label = label.into();
        if label.is_empty() || label.contains(['/', '\\']) {
            return Err(Error::param("beta", format!("unusable label {label:?}")));
        }
        Ok(Self { value, label })
    }
}

impl FromStr for BetaValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let value: f64 = s
            .parse()
            .map_err(|_| Error::param("beta", format!("not a number: {s:?}")))?;
        Self::with_label(value, s)
    }
}

impl fmt::Display for BetaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl Serialize for BetaValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label)
    }
}

impl<'de> Deserialize<'de> for BetaValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse(),
            Raw::Number(v) => BetaValue::new(v),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub id: String,
    pub image: PathBuf,
    pub depth: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_codec: Option<DepthCodec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
    /// Overrides the run-wide camera for this frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<CameraIntrinsics>,
}

impl FrameRecord {
    pub fn new(
        id: impl Into<String>,
        image: impl Into<PathBuf>,
        depth: impl Into<PathBuf>,
    ) -> Self {
        Self {
            id: id.into(),
            image: image.into(),
            depth: depth.into(),
            depth_codec: None,
            annotations: Vec::new(),
            metadata: BTreeMap::new(),
            intrinsics: None,
        }
    }

    /// Numeric metadata value, if the key exists and holds a number.
    pub fn metadata_number(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(serde_json::Value::as_f64)
    }
}

/// Ordered frames plus the directory relative paths are resolved against.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub frames: Vec<FrameRecord>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, frames: Vec<FrameRecord>) -> Result<Self> {
        let m = Self {
            root: root.into(),
            frames,
        };
        m.validate()?;
        Ok(m)
    }

    /// Frame ids must be unique and usable as file-name prefixes.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.frames {
            if f.id.is_empty() || f.id.contains(['/', '\\']) || f.id == "." || f.id == ".." {
                return Err(Error::Config(format!("invalid frame id {:?}", f.id)));
            }
            if !seen.insert(f.id.as_str()) {
                return Err(Error::Config(format!("duplicate frame id {:?}", f.id)));
            }
        }
        Ok(())
    }

    pub fn parse_jsonl(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut frames = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: FrameRecord = serde_json::from_str(line)
                .map_err(|e| Error::Config(format!("manifest line {}: {e}", n + 1)))?;
            frames.push(rec);
        }
        Self::new(root, frames)
    }

    /// Load a JSON Lines manifest; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse_jsonl(&text, root)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            out.push_str(&serde_json::to_string(f).expect("frame records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        raster_io::write_atomic(path, self.to_jsonl().as_bytes())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Split off the last `n` frames, e.g. as a validation set.
    pub fn split_holdout(&self, n: usize) -> (Self, Self) {
        let cut = self.frames.len().saturating_sub(n);
        let (train, held) = self.frames.split_at(cut);
        (
            Self {
                root: self.root.clone(),
                frames: train.to_vec(),
            },
            Self {
                root: self.root.clone(),
                frames: held.to_vec(),
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl CmpOp {
    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub key: String,
    pub op: CmpOp,
    pub value: f64,
}

/// Conjunction of numeric metadata comparisons, e.g. `sky_contrast <= 3`.
/// The empty conjunction (written `true`) keeps every frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Predicate {
    pub clauses: Vec<Clause>,
}

impl Predicate {
    pub fn always() -> Self {
        Self::default()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.clauses.iter().map(|c| c.key.as_str())
    }
}

impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "true" || s == "*" {
            return Ok(Self::always());
        }
        let normalized = s.replace(" and ", "&&").replace(" AND ", "&&");
        let clauses = normalized
            .split("&&")
            .map(parse_clause)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { clauses })
    }
}

fn parse_clause(text: &str) -> Result<Clause> {
    const OPS: [(&str, CmpOp); 10] = [
        ("<=", CmpOp::Le),
        (">=", CmpOp::Ge),
        ("==", CmpOp::Eq),
        ("≤", CmpOp::Le),
        ("≥", CmpOp::Ge),
        ("<", CmpOp::Lt),
        (">", CmpOp::Gt),
        ("=", CmpOp::Eq),
        ("\u{2a7d}", CmpOp::Le),
        ("\u{2a7e}", CmpOp::Ge),
    ];
    let bad = |why: &str| Error::Config(format!("malformed predicate clause {text:?}: {why}"));
    let (pos, sym, op) = OPS
        .iter()
        .filter_map(|&(sym, op)| text.find(sym).map(|p| (p, sym, op)))
        .min_by_key(|&(p, sym, _)| (p, std::cmp::Reverse(sym.len())))
        .ok_or_else(|| bad("no comparison operator"))?;
    let key = text[..pos].trim();
    let rhs = text[pos + sym.len()..].trim();
    if key.is_empty()
        || !key
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
    {
        return Err(bad("key must be a bare identifier"));
    }
    let value: f64 = rhs
        .parse()
        .map_err(|_| bad("right-hand side is not a number"))?;
    if !value.is_finite() {
        return Err(bad("right-hand side must be finite"));
    }
    Ok(Clause {
        key: key.to_owned(),
        op,
        value,
    })
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("true");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{} {} {}", c.key, c.op.symbol(), c.value)?;
        }
        Ok(())
    }
}

impl Serialize for Predicate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Predicate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub manifest: DatasetManifest,
    /// Frames lacking a referenced key, or holding a non-numeric value for it.
    pub missing_key: Vec<String>,
    /// Frames whose values failed a comparison.
    pub rejected: Vec<String>,
}

impl FilterOutcome {
    pub fn excluded(&self) -> usize {
        self.missing_key.len() + self.rejected.len()
    }
}

/// Keep frames satisfying `predicate`, preserving order.
pub fn filter_manifest(manifest: &DatasetManifest, predicate: &Predicate) -> FilterOutcome {
    let mut kept = Vec::new();
    let mut missing_key = Vec::new();
    let mut rejected = Vec::new();
    for frame in &manifest.frames {
        let values: Option<Vec<f64>> = predicate
            .clauses
            .iter()
            .map(|c| frame.metadata_number(&c.key))
            .collect();
        match values {
            None => missing_key.push(frame.id.clone()),
            Some(vals) => {
                if predicate
                    .clauses
                    .iter()
                    .zip(vals)
                    .all(|(c, v)| c.op.eval(v, c.value))
                {
                    kept.push(frame.clone());
                } else {
                    rejected.push(frame.id.clone());
                }
            }
        }
    }
    FilterOutcome {
        manifest: DatasetManifest {
            root: manifest.root.clone(),
            frames: kept,
        },
        missing_key,
        rejected,
    }
}

/// Everything about fog rendering that does not vary per β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FogSettings {
    pub airlight: AirlightPolicy,
    pub airlight_config: AirlightConfig,
    pub blend_space: BlendSpace,
    pub hole_policy: HolePolicy,
    /// Codec for frames that do not name one.
    pub depth_codec: DepthCodec,
    /// Camera for frames that do not carry their own.
    pub intrinsics: Option<CameraIntrinsics>,
}

impl Default for FogSettings {
    fn default() -> Self {
        Self {
            airlight: AirlightPolicy::Estimated,
            airlight_config: AirlightConfig::default(),
            blend_space: BlendSpace::GammaEncoded,
            hole_policy: HolePolicy::Reject,
            depth_codec: DepthCodec::Float32Raster,
            intrinsics: None,
        }
    }
}

impl FogSettings {
    pub fn validate(&self) -> Result<()> {
        FogParams::new(0.0, self.airlight, self.blend_space)?;
        self.airlight_config.validate()?;
        self.depth_codec.validate()?;
        if let Some(k) = &self.intrinsics {
            k.validate()?;
        }
        if let HolePolicy::MaxDistance { far } = self.hole_policy {
            if !(far > 0.0 && far.is_finite()) {
                return Err(Error::param("far", format!("must be > 0, got {far}")));
            }
        }
        Ok(())
    }
}

/// A frame with everything independent of fog density already computed.
#[derive(Debug, Clone)]
pub struct PreparedFrame {
    pub id: String,
    pub image: ColorRaster,
    pub distance: DistanceMap,
    pub airlight: ColorTriple,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RenderedVariant {
    pub image: ColorRaster,
    pub mean_transmittance: f64,
}

impl PreparedFrame {
    pub fn render(&self, beta: f64, blend_space: BlendSpace) -> Result<RenderedVariant> {
        let params = FogParams::new(beta, AirlightPolicy::Fixed(self.airlight), blend_space)?;
        let t = transmittance(&self.distance, params.beta)?;
        let image = apply_fog(&self.image, &t, self.airlight, params.blend_space)?;
        Ok(RenderedVariant {
            image,
            mean_transmittance: t.mean(),
        })
    }
}

/// Load a frame, compute its distance map and settle its atmospheric light.
pub fn prepare_frame(
    record: &FrameRecord,
    root: &Path,
    settings: &FogSettings,
) -> Result<PreparedFrame> {
    let tag = |e: Error| e.in_frame(&record.id);
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            root.join(p)
        }
    };
    let k = record
        .intrinsics
        .or(settings.intrinsics)
        .ok_or_else(|| tag(Error::Config("no camera intrinsics for frame".into())))?;
    let codec = record.depth_codec.unwrap_or(settings.depth_codec);

    let image = raster_io::read_image(resolve(&record.image)).map_err(tag)?;
    let depth_path = resolve(&record.depth);
    let depth_bytes = fs::read(&depth_path).map_err(|e| tag(Error::io(&depth_path, e)))?;
    let depth = decode_depth(&depth_bytes, &codec).map_err(tag)?;
    if depth.dims() != image.dims() {
        return Err(tag(Error::Shape {
            expected: image.dims(),
            actual: depth.dims(),
        }));
    }
    let mut warnings = Vec::new();
    if let Some(w) = k.principal_point_warning(image.width(), image.height()) {
        warnings.push(w);
    }
    let depth = fill_holes(&depth, settings.hole_policy).map_err(tag)?;
    let distance = planar_to_radial(&depth, &k).map_err(tag)?;
    let airlight = match settings.airlight {
        AirlightPolicy::Fixed(l) => l,
        AirlightPolicy::Estimated => {
            estimate_airlight(&image, &settings.airlight_config).map_err(tag)?
        }
    };
    Ok(PreparedFrame {
        id: record.id.clone(),
        image,
        distance,
        airlight,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub airlight: ColorTriple,
    pub mean_transmittance: f64,
}

/// Fog a single frame at one density.
pub fn process_frame(
    record: &FrameRecord,
    root: &Path,
    beta: f64,
    settings: &FogSettings,
) -> Result<(ColorRaster, FrameStats)> {
    settings.validate()?;
    let prepared = prepare_frame(record, root, settings)?;
    let out = prepared
        .render(beta, settings.blend_space)
        .map_err(|e| e.in_frame(&record.id))?;
    Ok((
        out.image,
        FrameStats {
            airlight: prepared.airlight,
            mean_transmittance: out.mean_transmittance,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameStatus {
    Ok,
    Failed,
    /// A worker panicked on this frame.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub beta: BetaValue,
    /// Meteorological optical range in meters; absent for β = 0.
    pub mor_m: Option<f64>,
    pub mean_transmittance: f64,
    /// Relative to the output directory.
    pub output: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub source: PathBuf,
    /// Relative to the output directory.
    pub output: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub id: String,
    pub status: FrameStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub airlight: Option<ColorTriple>,
    #[serde(default)]
    pub variants: Vec<VariantReport>,
    #[serde(default)]
    pub annotations: Vec<AnnotationReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub frames_total: usize,
    pub frames_ok: usize,
    pub frames_failed: usize,
    pub frames_excluded: usize,
    pub betas: usize,
    pub outputs: usize,
    pub annotation_copies: usize,
    pub incomplete: bool,
    pub total_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    /// The resolved configuration the run was started with.
    pub config: serde_json::Value,
    pub summary: RunSummary,
    pub frames: Vec<FrameReport>,
}

impl RunReport {
    /// Frames that did not finish successfully.
    pub fn failures(&self) -> impl Iterator<Item = &FrameReport> {
        self.frames.iter().filter(|f| f.status != FrameStatus::Ok)
    }

    /// Copy with all wall-clock fields zeroed, for run-to-run comparison.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.summary.total_time_s = 0.0;
        for f in &mut r.frames {
            f.wall_time_s = 0.0;
        }
        r
    }

    /// 0 when every frame succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.frames_failed == 0 && !self.summary.incomplete {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct BatchRequest<'a> {
    pub manifest: &'a DatasetManifest,
    pub betas: &'a [BetaValue],
    pub settings: &'a FogSettings,
    pub workers: usize,
    pub out_dir: &'a Path,
    /// Stored verbatim in the report.
    pub config_echo: serde_json::Value,
}

/// Output file name of one fog variant.
pub fn variant_file_name(frame_id: &str, beta: &BetaValue) -> String {
    format!("{frame_id}_beta_{}.png", beta.label)
}

/// Destination of an inherited annotation, relative to the output directory.
pub fn annotation_output_path(source: &Path, beta: &BetaValue) -> Option<PathBuf> {
    let group = source
        .parent()
        .and_then(Path::file_name)
        .map(PathBuf::from)
        .unwrap_or_default();
    let name = NamingRule::for_beta(beta.label.clone()).apply_path(source)?;
    Some(Path::new(ANNOTATIONS_DIR).join(group).join(name))
}

/// Checks done before any I/O: configuration errors abort the whole run.
pub fn validate_batch(req: &BatchRequest<'_>) -> Result<()> {
    if req.workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    if req.manifest.is_empty() {
        return Err(Error::Config("manifest has no frames".into()));
    }
    if req.betas.is_empty() {
        return Err(Error::Config("no fog densities requested".into()));
    }
    req.manifest.validate()?;
    req.settings.validate()?;
    let mut labels = HashSet::new();
    for b in req.betas {
        if !labels.insert(b.label.as_str()) {
            return Err(Error::Config(format!("β {} requested twice", b.label)));
        }
    }
    if req.settings.intrinsics.is_none() {
        if let Some(f) = req.manifest.frames.iter().find(|f| f.intrinsics.is_none()) {
            return Err(Error::Config(format!(
                "frame {:?} has no intrinsics and no run-wide camera is set",
                f.id
            )));
        }
    }
    // Two annotations landing on the same output path would overwrite each other.
    let mut dests = HashSet::new();
    let probe = &req.betas[0];
    for f in &req.manifest.frames {
        for a in &f.annotations {
            let dst = annotation_output_path(a, probe).ok_or_else(|| {
                Error::Config(format!("annotation {} has no file name", a.display()))
            })?;
            if !dests.insert(dst.clone()) {
                return Err(Error::Config(format!(
                    "annotation output {} is produced by more than one source",
                    dst.display()
                )));
            }
        }
    }
    Ok(())
}

/// Number of images a batch would write.
pub fn planned_outputs(manifest: &DatasetManifest, betas: &[BetaValue]) -> usize {
    manifest.len() * betas.len()
}

pub fn process_batch(req: &BatchRequest<'_>) -> Result<RunReport> {
    validate_batch(req)?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(req.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let frames: Vec<FrameReport> = pool.install(|| {
        req.manifest
            .frames
            .par_iter()
            .map(|rec| {
                let t0 = Instant::now();
                let outcome = catch_unwind(AssertUnwindSafe(|| run_frame(rec, req)));
                let mut report = match outcome {
                    Ok(Ok(r)) => r,
                    Ok(Err(e)) => failed_frame(&rec.id, FrameStatus::Failed, e.to_string()),
                    Err(panic) => {
                        let msg = panic
                            .downcast_ref::<&str>()
                            .map(|s| s.to_string())
                            .or_else(|| panic.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "worker panicked".into());
                        failed_frame(&rec.id, FrameStatus::Aborted, msg)
                    }
                };
                report.wall_time_s = t0.elapsed().as_secs_f64();
                report
            })
            .collect()
    });

    let frames_ok = frames
        .iter()
        .filter(|f| f.status == FrameStatus::Ok)
        .count();
    let summary = RunSummary {
        frames_total: frames.len(),
        frames_ok,
        frames_failed: frames.len() - frames_ok,
        frames_excluded: 0,
        betas: req.betas.len(),
        outputs: frames.iter().map(|f| f.variants.len()).sum(),
        annotation_copies: frames.iter().map(|f| f.annotations.len()).sum(),
        incomplete: frames.iter().any(|f| f.status == FrameStatus::Aborted),
        total_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: req.config_echo.clone(),
        summary,
        frames,
    })
}

fn failed_frame(id: &str, status: FrameStatus, error: String) -> FrameReport {
    log::error!("frame {id}: {error}");
    FrameReport {
        id: id.to_owned(),
        status,
        error: Some(error),
        airlight: None,
        variants: Vec::new(),
        annotations: Vec::new(),
        warnings: Vec::new(),
        wall_time_s: 0.0,
    }
}

/// Render all variants of one frame in memory, then write them. Nothing is
/// written unless every variant rendered and every annotation is readable.
fn run_frame(rec: &FrameRecord, req: &BatchRequest<'_>) -> Result<FrameReport> {
    let root = &req.manifest.root;
    let prepared = prepare_frame(rec, root, req.settings)?;
    let tag = |e: Error| e.in_frame(&rec.id);

    let annotations: Vec<(PathBuf, Vec<u8>)> = rec
        .annotations
        .iter()
        .map(|a| {
            let src = req.manifest.resolve(a);
            fs::read(&src)
                .map(|bytes| (a.clone(), bytes))
                .map_err(|e| tag(Error::io(&src, e)))
        })
        .collect::<Result<_>>()?;

    let encoded: Vec<(PathBuf, Vec<u8>, f64)> = req
        .betas
        .par_iter()
        .map(|beta| {
            let v = prepared
                .render(beta.value, req.settings.blend_space)
                .map_err(tag)?;
            let bytes = raster_io::encode_image(&v.image, v.image.bit_depth).map_err(tag)?;
            let rel = Path::new(IMAGES_DIR).join(variant_file_name(&rec.id, beta));
            Ok((rel, bytes, v.mean_transmittance))
        })
        .collect::<Result<_>>()?;

    let mut variants = Vec::with_capacity(encoded.len());
    for ((rel, bytes, mean_t), beta) in encoded.into_iter().zip(req.betas) {
        raster_io::write_atomic(req.out_dir.join(&rel), &bytes).map_err(tag)?;
        variants.push(VariantReport {
            beta: beta.clone(),
            mor_m: mor_from_beta(beta.value).ok().map(|v| v.mor),
            mean_transmittance: mean_t,
            output: rel,
            sha256: raster_io::sha256_hex(&bytes),
        });
    }

    let mut copies = Vec::new();
    for beta in req.betas {
        for (src, bytes) in &annotations {
            let rel = annotation_output_path(src, beta).ok_or_else(|| {
                tag(Error::Config(format!(
                    "annotation {} has no file name",
                    src.display()
                )))
            })?;
            raster_io::write_atomic(req.out_dir.join(&rel), bytes).map_err(tag)?;
            copies.push(AnnotationReport {
                source: src.clone(),
                output: rel,
                sha256: raster_io::sha256_hex(bytes),
            });
        }
    }

    for w in &prepared.warnings {
        log::warn!("frame {}: {w}", rec.id);
    }
    Ok(FrameReport {
        id: rec.id.clone(),
        status: FrameStatus::Ok,
        error: None,
        airlight: Some(prepared.airlight),
        variants,
        annotations: copies,
        warnings: prepared.warnings,
        wall_time_s: 0.0,
    })
}

/// Human-readable run summary, one `key: value` per line.
pub fn summarize_run(report: &RunReport) -> String {
    use std::fmt::Write;
    let s = &report.summary;
    let mut out = String::new();
    let _ = writeln!(out, "frames: {}", s.frames_total);
    let _ = writeln!(out, "ok: {}", s.frames_ok);
    let _ = writeln!(out, "failed: {}", s.frames_failed);
    if s.frames_excluded > 0 {
        let _ = writeln!(out, "excluded: {}", s.frames_excluded);
    }
    let _ = writeln!(out, "outputs: {}", s.outputs);
    let _ = writeln!(out, "annotation copies: {}", s.annotation_copies);
    if s.incomplete {
        let _ = writeln!(out, "incomplete: true");
    }
    let _ = writeln!(out, "time: {:.3} s", s.total_time_s);

    // Mean transmittance per β across successful frames, in request order.
    let mut per_beta: Vec<(String, f64, usize)> = Vec::new();
    for f in &report.frames {
        for v in &f.variants {
            match per_beta.iter_mut().find(|(l, _, _)| *l == v.beta.label) {
                Some(e) => {
                    e.1 += v.mean_transmittance;
                    e.2 += 1;
                }
                None => per_beta.push((v.beta.label.clone(), v.mean_transmittance, 1)),
            }
        }
    }
    for (label, sum, n) in per_beta {
        let _ = writeln!(out, "mean t @ beta {label}: {:.6}", sum / n as f64);
    }
    for f in report.failures() {
        let _ = writeln!(
            out,
            "FAILED {}: {}",
            f.id,
            f.error.as_deref().unwrap_or("unknown error")
        );
    }
    out
}

/// Machine-readable summary: the aggregate block plus failing frame ids.
pub fn summary_json(report: &RunReport) -> serde_json::Value {
    serde_json::json!({
        "schema_version": report.schema_version,
        "summary": report.summary,
        "failed_frames": report.failures().map(|f| &f.id).collect::<Vec<_>>(),
    })
}

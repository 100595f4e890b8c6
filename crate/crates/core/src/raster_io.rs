//! PNG reading and writing for color, label and 16-bit depth rasters, plus
//! byte-exact annotation copying.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::raster::{BitDepth, ColorRaster, LabelRaster, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channels {
    Gray,
    Rgb,
}

impl Channels {
    fn count(self) -> usize {
        match self {
            Channels::Gray => 1,
            Channels::Rgb => 3,
        }
    }
}

/// Raw samples of a decoded PNG, one `u16` per channel sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPng {
    pub width: usize,
    pub height: usize,
    pub channels: Channels,
    pub depth: BitDepth,
    pub samples: Vec<u16>,
}

pub fn decode_png(bytes: &[u8]) -> Result<DecodedPng> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(format!("png header: {e}")))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("png image too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(format!("png data: {e}")))?;
    buf.truncate(info.buffer_size());

    let channels = match info.color_type {
        png::ColorType::Grayscale => Channels::Gray,
        png::ColorType::Rgb => Channels::Rgb,
        other => {
            return Err(Error::Format(format!(
                "unsupported png color type {other:?}; expected grayscale or RGB"
            )))
        }
    };
    let (depth, samples) = match info.bit_depth {
        png::BitDepth::Eight => (BitDepth::Eight, buf.iter().map(|&b| u16::from(b)).collect()),
        png::BitDepth::Sixteen => (
            BitDepth::Sixteen,
            buf.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect(),
        ),
        other => {
            return Err(Error::Format(format!(
                "unsupported png bit depth {other:?}; expected 8 or 16"
            )))
        }
    };
    Ok(DecodedPng {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        depth,
        samples,
    })
}

pub fn encode_png(
    width: usize,
    height: usize,
    channels: Channels,
    depth: BitDepth,
    samples: &[u16],
) -> Result<Vec<u8>> {
    if samples.len() != width * height * channels.count() {
        return Err(Error::Data(format!(
            "{} samples do not fill a {width}x{height} {channels:?} image",
            samples.len()
        )));
    }
    let w = u32::try_from(width).map_err(|_| Error::Format("width exceeds u32".into()))?;
    let h = u32::try_from(height).map_err(|_| Error::Format("height exceeds u32".into()))?;
    let data: Vec<u8> = match depth {
        BitDepth::Eight => samples
            .iter()
            .map(|&s| {
                u8::try_from(s).map_err(|_| Error::Data(format!("sample {s} exceeds 8 bits")))
            })
            .collect::<Result<_>>()?,
        BitDepth::Sixteen => samples.iter().flat_map(|s| s.to_be_bytes()).collect(),
    };

    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, w, h);
        encoder.set_color(match channels {
            Channels::Gray => png::ColorType::Grayscale,
            Channels::Rgb => png::ColorType::Rgb,
        });
        encoder.set_depth(match depth {
            BitDepth::Eight => png::BitDepth::Eight,
            BitDepth::Sixteen => png::BitDepth::Sixteen,
        });
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Format(format!("png encode: {e}")))?;
        writer
            .write_image_data(&data)
            .map_err(|e| Error::Format(format!("png encode: {e}")))?;
        writer
            .finish()
            .map_err(|e| Error::Format(format!("png encode: {e}")))?;
    }
    Ok(out)
}

pub fn decode_image(bytes: &[u8]) -> Result<ColorRaster> {
    let png = decode_png(bytes)?;
    if png.channels != Channels::Rgb {
        return Err(Error::Format("expected an RGB png".into()));
    }
    ColorRaster::from_codes(png.width, png.height, &png.samples, png.depth)
}

pub fn encode_image(raster: &ColorRaster, bit_depth: BitDepth) -> Result<Vec<u8>> {
    let codes = ColorRaster::new(raster.pixels.clone(), bit_depth).to_codes();
    encode_png(
        raster.width(),
        raster.height(),
        Channels::Rgb,
        bit_depth,
        &codes,
    )
}

pub fn read_image(path: impl AsRef<Path>) -> Result<ColorRaster> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn write_image(
    raster: &ColorRaster,
    path: impl AsRef<Path>,
    bit_depth: BitDepth,
) -> Result<()> {
    write_atomic(path, &encode_image(raster, bit_depth)?)
}

pub fn decode_label(bytes: &[u8]) -> Result<LabelRaster> {
    let png = decode_png(bytes)?;
    if png.channels != Channels::Gray {
        return Err(Error::Format("expected a single-channel label png".into()));
    }
    Raster::from_vec(png.width, png.height, png.samples)
}

pub fn read_label(path: impl AsRef<Path>) -> Result<LabelRaster> {
    let path = path.as_ref();
    decode_label(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_label(labels: &LabelRaster, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let bytes = encode_png(
        labels.width(),
        labels.height(),
        Channels::Gray,
        depth,
        labels.as_slice(),
    )?;
    write_atomic(path, &bytes)
}

/// Decode a single-channel 16-bit PNG into raw codes.
pub fn decode_gray16(bytes: &[u8]) -> Result<Raster<u16>> {
    let png = decode_png(bytes)?;
    if png.channels != Channels::Gray || png.depth != BitDepth::Sixteen {
        return Err(Error::Format(format!(
            "expected a 16-bit grayscale png, got {:?} at {} bits",
            png.channels,
            png.depth.bits()
        )));
    }
    Raster::from_vec(png.width, png.height, png.samples)
}

pub fn encode_gray16(raster: &Raster<u16>) -> Result<Vec<u8>> {
    encode_png(
        raster.width(),
        raster.height(),
        Channels::Gray,
        BitDepth::Sixteen,
        raster.as_slice(),
    )
}

/// Write through a sibling temp file and rename over the destination.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

/// Renames inherited files for one fog variant: `<stem>_beta_<label>.<ext>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamingRule {
    beta_label: String,
}

impl NamingRule {
    pub fn for_beta(beta_label: impl Into<String>) -> Self {
        Self {
            beta_label: beta_label.into(),
        }
    }

    pub fn apply(&self, file_name: &str) -> String {
        let (stem, ext) = match file_name.rfind('.') {
            Some(i) if i > 0 => (&file_name[..i], Some(&file_name[i + 1..])),
            _ => (file_name, None),
        };
        match ext {
            Some(ext) => format!("{stem}_beta_{}.{ext}", self.beta_label),
            None => format!("{stem}_beta_{}", self.beta_label),
        }
    }

    pub fn apply_path(&self, path: &Path) -> Option<String> {
        path.file_name()
            .and_then(|n| n.to_str())
            .map(|n| self.apply(n))
    }
}

#[derive(Debug, Default, Clone)]
pub struct CopyOutcome {
    pub written: Vec<PathBuf>,
    /// Source path and error text for each file that could not be copied.
    pub errors: Vec<(PathBuf, String)>,
}

/// Copy annotation files unchanged into `dst_dir`, renamed by `rule`.
/// A failing source is recorded and the remaining files are still copied.
pub fn copy_annotations(
    src_paths: &[PathBuf],
    dst_dir: impl AsRef<Path>,
    rule: &NamingRule,
) -> CopyOutcome {
    let dst_dir = dst_dir.as_ref();
    let mut outcome = CopyOutcome::default();
    for src in src_paths {
        let result = rule
            .apply_path(src)
            .ok_or_else(|| Error::Config(format!("no usable file name in {}", src.display())))
            .and_then(|name| {
                let bytes = fs::read(src).map_err(|e| Error::io(src, e))?;
                let dst = dst_dir.join(name);
                write_atomic(&dst, &bytes)?;
                Ok(dst)
            });
        match result {
            Ok(dst) => outcome.written.push(dst),
            Err(e) => outcome.errors.push((src.clone(), e.to_string())),
        }
    }
    outcome
}

//! Depth decoding and the planar-depth to radial-distance conversion.
//!
//! Datasets store the distance from the image plane (`z` in camera
//! coordinates). Attenuation depends on the length of the ray from the camera
//! center, which for a pinhole camera at pixel `(u, v)` is
//!
//! ```text
//! ℓ = d · sqrt(((u + 0.5 − cx) / fx)² + ((v + 0.5 − cy) / fy)² + 1)
//! ```
//!
//! Rays go through pixel centers, so a symmetric depth map around the
//! principal point yields a symmetric distance map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::raster_io;

/// Magic bytes of the raw float depth container.
pub const FDEPTH_MAGIC: &[u8; 8] = b"FDEPTH01";
const FDEPTH_HEADER_LEN: usize = 16;

/// Planar depth used for holes under [`HolePolicy::MaxDistance`] unless overridden.
pub const DEFAULT_FAR_DEPTH: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let k = Self { fx, fy, cx, cy };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fx.is_finite()) {
            return Err(Error::param("fx", format!("must be > 0, got {}", self.fx)));
        }
        if !(self.fy > 0.0 && self.fy.is_finite()) {
            return Err(Error::param("fy", format!("must be > 0, got {}", self.fy)));
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::param("principal point", "must be finite"));
        }
        Ok(())
    }

    /// Warn when the principal point is more than twice the half-extent away
    /// from the image center, which usually means intrinsics for another
    /// resolution.
    pub fn principal_point_warning(&self, width: usize, height: usize) -> Option<String> {
        let (w, h) = (width as f64, height as f64);
        let off_x = (self.cx - w / 2.0).abs();
        let off_y = (self.cy - h / 2.0).abs();
        (off_x > w || off_y > h).then(|| {
            format!(
                "principal point ({}, {}) is far outside the {width}x{height} image",
                self.cx, self.cy
            )
        })
    }

    /// Squared tangent of the ray angle through the center of pixel `(u, v)`.
    #[inline]
    pub fn ray_slope_sq(&self, u: usize, v: usize) -> f64 {
        let a = (u as f64 + 0.5 - self.cx) / self.fx;
        let b = (v as f64 + 0.5 - self.cy) / self.fy;
        a * a + b * b
    }
}

/// Planar depth in meters with a per-pixel validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    depth: Raster<f64>,
    valid: Raster<bool>,
}

impl DepthMap {
    /// Pixels that are finite and strictly positive are valid.
    pub fn from_raster(depth: Raster<f64>) -> Self {
        let valid = depth.map(|&d| is_valid_depth(d));
        Self { depth, valid }
    }

    pub fn depth(&self) -> &Raster<f64> {
        &self.depth
    }

    pub fn valid(&self) -> &Raster<bool> {
        &self.valid
    }

    pub fn dims(&self) -> (usize, usize) {
        self.depth.dims()
    }

    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        *self.valid.get(x, y)
    }

    pub fn hole_count(&self) -> usize {
        self.valid.as_slice().iter().filter(|v| !**v).count()
    }

    pub fn valid_count(&self) -> usize {
        self.depth.len() - self.hole_count()
    }
}

#[inline]
fn is_valid_depth(d: f64) -> bool {
    d.is_finite() && d > 0.0
}

/// Radial camera-center-to-scene distance in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap(pub Raster<f64>);

impl DistanceMap {
    pub fn raster(&self) -> &Raster<f64> {
        &self.0
    }
}

/// How depth is stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "codec", rename_all = "snake_case")]
pub enum DepthCodec {
    /// `FDEPTH01` container of little-endian `f32` meters.
    #[default]
    Float32Raster,
    /// 16-bit grayscale PNG, `meters = raw × scale`, raw 0 is a hole.
    ScaledU16Png { scale: f64 },
    /// 16-bit grayscale PNG of stereo disparity,
    /// `disparity = (raw − offset) / divisor`, `meters = baseline · fx / disparity`.
    DisparityU16Png {
        baseline: f64,
        fx: f64,
        #[serde(default = "default_disparity_offset")]
        offset: f64,
        #[serde(default = "default_disparity_divisor")]
        divisor: f64,
    },
}

fn default_disparity_offset() -> f64 {
    1.0
}

fn default_disparity_divisor() -> f64 {
    256.0
}

impl DepthCodec {
    pub fn disparity(baseline: f64, fx: f64) -> Self {
        DepthCodec::DisparityU16Png {
            baseline,
            fx,
            offset: default_disparity_offset(),
            divisor: default_disparity_divisor(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        match *self {
            DepthCodec::Float32Raster => Ok(()),
            DepthCodec::ScaledU16Png { scale } => positive("scale", scale),
            DepthCodec::DisparityU16Png {
                baseline,
                fx,
                offset,
                divisor,
            } => {
                positive("baseline", baseline)?;
                positive("fx", fx)?;
                positive("divisor", divisor)?;
                if !offset.is_finite() {
                    return Err(Error::param("offset", "must be finite"));
                }
                Ok(())
            }
        }
    }
}

pub fn decode_depth(bytes: &[u8], codec: &DepthCodec) -> Result<DepthMap> {
    codec.validate()?;
    let depth = match *codec {
        DepthCodec::Float32Raster => decode_fdepth(bytes)?,
        DepthCodec::ScaledU16Png { scale } => raster_io::decode_gray16(bytes)?.map(|&raw| {
            if raw == 0 {
                f64::NAN
            } else {
                f64::from(raw) * scale
            }
        }),
        DepthCodec::DisparityU16Png {
            baseline,
            fx,
            offset,
            divisor,
        } => raster_io::decode_gray16(bytes)?.map(|&raw| {
            let disparity = (f64::from(raw) - offset) / divisor;
            if raw == 0 || disparity <= 0.0 {
                f64::NAN
            } else {
                baseline * fx / disparity
            }
        }),
    };
    let map = DepthMap::from_raster(depth);
    if map.valid_count() == 0 {
        return Err(Error::Data("depth map has no valid pixels".into()));
    }
    Ok(map)
}

fn decode_fdepth(bytes: &[u8]) -> Result<Raster<f64>> {
    if bytes.len() < FDEPTH_HEADER_LEN || &bytes[..8] != FDEPTH_MAGIC {
        return Err(Error::Format("missing FDEPTH01 header".into()));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "empty depth raster {width}x{height}"
        )));
    }
    let body = &bytes[FDEPTH_HEADER_LEN..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("depth raster dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "depth body is {} bytes, {width}x{height} needs {expected}",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    Raster::from_vec(width, height, data)
}

/// Serialize planar depth with `codec`; holes are written as NaN or raw 0.
pub fn encode_depth(depth: &DepthMap, codec: &DepthCodec) -> Result<Vec<u8>> {
    codec.validate()?;
    let values = depth.depth.as_slice().iter().zip(depth.valid.as_slice());
    match *codec {
        DepthCodec::Float32Raster => {
            let (w, h) = depth.dims();
            let mut out = Vec::with_capacity(FDEPTH_HEADER_LEN + w * h * 4);
            out.extend_from_slice(FDEPTH_MAGIC);
            out.extend_from_slice(&(w as u32).to_le_bytes());
            out.extend_from_slice(&(h as u32).to_le_bytes());
            for (&d, &ok) in values {
                let v = if ok { d as f32 } else { f32::NAN };
                out.extend_from_slice(&v.to_le_bytes());
            }
            Ok(out)
        }
        DepthCodec::ScaledU16Png { scale } => {
            let raw = values
                .map(|(&d, &ok)| {
                    if ok {
                        (d / scale).round().clamp(1.0, 65535.0) as u16
                    } else {
                        0
                    }
                })
                .collect();
            let (w, h) = depth.dims();
            raster_io::encode_gray16(&Raster::from_vec(w, h, raw)?)
        }
        DepthCodec::DisparityU16Png {
            baseline,
            fx,
            offset,
            divisor,
        } => {
            let raw = values
                .map(|(&d, &ok)| {
                    if ok {
                        (baseline * fx / d * divisor + offset)
                            .round()
                            .clamp(1.0, 65535.0) as u16
                    } else {
                        0
                    }
                })
                .collect();
            let (w, h) = depth.dims();
            raster_io::encode_gray16(&Raster::from_vec(w, h, raw)?)
        }
    }
}

/// Convert gapless planar depth into radial distance. Holes must be resolved
/// with [`fill_holes`] first.
pub fn planar_to_radial(depth: &DepthMap, k: &CameraIntrinsics) -> Result<DistanceMap> {
    k.validate()?;
    let holes = depth.hole_count();
    if holes > 0 {
        return Err(Error::Data(format!(
            "{holes} depth holes must be filled before computing distances"
        )));
    }
    let (w, h) = depth.dims();
    if let Some(msg) = k.principal_point_warning(w, h) {
        log::warn!("{msg}");
    }
    let col_terms: Vec<f64> = (0..w)
        .map(|u| {
            let a = (u as f64 + 0.5 - k.cx) / k.fx;
            a * a
        })
        .collect();
    let mut data = Vec::with_capacity(w * h);
    for (v, row) in depth.depth.rows().enumerate() {
        let b = (v as f64 + 0.5 - k.cy) / k.fy;
        let row_term = b * b + 1.0;
        data.extend(
            row.iter()
                .zip(&col_terms)
                .map(|(&d, &a2)| d * (a2 + row_term).sqrt()),
        );
    }
    Ok(DistanceMap(Raster::from_vec(w, h, data)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum HolePolicy {
    #[default]
    Reject,
    /// Holes become this planar depth in meters.
    MaxDistance { far: f64 },
    /// Holes take the value of the nearest valid pixel (Euclidean, ties in row-major order).
    NearestValid,
}

impl HolePolicy {
    pub fn max_distance() -> Self {
        HolePolicy::MaxDistance {
            far: DEFAULT_FAR_DEPTH,
        }
    }
}

pub fn fill_holes(depth: &DepthMap, policy: HolePolicy) -> Result<DepthMap> {
    let holes = depth.hole_count();
    if holes == 0 {
        return Ok(depth.clone());
    }
    let filled = match policy {
        HolePolicy::Reject => {
            return Err(Error::Data(format!(
                "depth map has {holes} holes and the hole policy is reject"
            )))
        }
        HolePolicy::MaxDistance { far } => {
            if !is_valid_depth(far) {
                return Err(Error::param("far", format!("must be > 0, got {far}")));
            }
            let data = depth
                .depth
                .as_slice()
                .iter()
                .zip(depth.valid.as_slice())
                .map(|(&d, &ok)| if ok { d } else { far })
                .collect();
            Raster::from_vec(depth.depth.width(), depth.depth.height(), data)?
        }
        HolePolicy::NearestValid => {
            if depth.valid_count() == 0 {
                return Err(Error::Data("no valid depth to propagate into holes".into()));
            }
            let mut out = depth.depth.clone();
            let (w, h) = depth.dims();
            for y in 0..h {
                for x in 0..w {
                    if !depth.is_valid(x, y) {
                        let (nx, ny) = nearest_valid(depth, x, y);
                        *out.get_mut(x, y) = *depth.depth.get(nx, ny);
                    }
                }
            }
            out
        }
    };
    Ok(DepthMap::from_raster(filled))
}

/// Scan square rings of growing radius; a pixel on ring `r` is at least `r`
/// away, so the search can stop once `r²` exceeds the best squared distance.
fn nearest_valid(depth: &DepthMap, x: usize, y: usize) -> (usize, usize) {
    let (w, h) = depth.dims();
    let (xi, yi) = (x as i64, y as i64);
    let max_r = w.max(h) as i64;
    // (squared distance, row-major index)
    let mut best: Option<(i64, usize)> = None;
    for r in 1..=max_r {
        if let Some((d2, _)) = best {
            if r * r > d2 {
                break;
            }
        }
        let y0 = (yi - r).max(0);
        let y1 = (yi + r).min(h as i64 - 1);
        for ny in y0..=y1 {
            let on_edge_row = (ny - yi).abs() == r;
            let xs: Box<dyn Iterator<Item = i64>> = if on_edge_row {
                Box::new((xi - r).max(0)..=(xi + r).min(w as i64 - 1))
            } else {
                Box::new(
                    [xi - r, xi + r]
                        .into_iter()
                        .filter(|&c| c >= 0 && c < w as i64),
                )
            };
            for nx in xs {
                let (ux, uy) = (nx as usize, ny as usize);
                if !depth.is_valid(ux, uy) {
                    continue;
                }
                let d2 = (nx - xi).pow(2) + (ny - yi).pow(2);
                let idx = uy * w + ux;
                if best.is_none_or(|b| (d2, idx) < b) {
                    best = Some((d2, idx));
                }
            }
        }
    }
    let (_, idx) = best.expect("at least one valid pixel");
    (idx % w, idx / w)
}

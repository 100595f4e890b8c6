//! Procedural street-like scenes with exact depth and labels.
//!
//! A pinhole camera looks at a flat ground plane with box-shaped buildings
//! standing on it. Sky pixels sit at [`SceneSpec::sky_depth`]. Colors are
//! generated as 8-bit codes so the images survive a PNG round trip unchanged.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::Result;
use crate::geometry::{encode_depth, CameraIntrinsics, DepthCodec, DepthMap};
use crate::pipeline::{DatasetManifest, FrameRecord};
use crate::raster::{BitDepth, ColorRaster, LabelRaster, Raster};
use crate::raster_io;

pub const LABEL_SKY: u16 = 0;
pub const LABEL_ROAD: u16 = 1;
pub const LABEL_BUILDING: u16 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sky {
    /// Blue gradient, brightest in blue, no clouds.
    Cloudless,
    /// Blue gradient with opaque cloud blobs of the given 8-bit color.
    Clouds { color: [u8; 3] },
    /// Uniform gray.
    Overcast { level: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub sky: Sky,
    /// Camera height above the ground plane in meters.
    pub camera_height: f64,
    pub sky_depth: f64,
    pub buildings: usize,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            sky: Sky::Clouds {
                color: [238, 240, 242],
            },
            camera_height: 1.5,
            sky_depth: 1000.0,
            buildings: 4,
            seed,
        }
    }

    pub fn with_sky(mut self, sky: Sky) -> Self {
        self.sky = sky;
        self
    }

    /// A camera with a 90° horizontal field of view centered on the image.
    pub fn intrinsics(&self) -> CameraIntrinsics {
        let f = self.width as f64 / 2.0;
        CameraIntrinsics {
            fx: f,
            fy: f,
            cx: self.width as f64 / 2.0,
            cy: self.height as f64 / 2.0,
        }
    }

    /// Value of the `sky_contrast` metadata key: low for overcast, high for direct sun.
    pub fn sky_contrast(&self) -> f64 {
        match self.sky {
            Sky::Overcast { .. } => 2.5,
            Sky::Clouds { .. } => 4.0,
            Sky::Cloudless => 5.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub image: ColorRaster,
    pub depth: DepthMap,
    pub labels: LabelRaster,
    pub intrinsics: CameraIntrinsics,
}

pub fn render_scene(spec: &SceneSpec) -> Scene {
    let (w, h) = (spec.width, spec.height);
    let k = spec.intrinsics();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut depth = vec![spec.sky_depth; w * h];
    let mut labels = vec![LABEL_SKY; w * h];
    let mut codes = vec![[0u8; 3]; w * h];

    for y in 0..h {
        let below = y as f64 + 0.5 - k.cy;
        for x in 0..w {
            let i = y * w + x;
            if below > 0.0 {
                let d = (spec.camera_height * k.fy / below).min(spec.sky_depth);
                depth[i] = d;
                labels[i] = LABEL_ROAD;
                let shade = 70 + ((x * 7 + y * 3) % 23) as u8;
                codes[i] = [shade, shade - 4, shade - 10];
            } else {
                codes[i] = sky_code(spec.sky, y, h);
            }
        }
    }

    if let Sky::Clouds { color } = spec.sky {
        let horizon = (k.cy as usize).max(1);
        for _ in 0..3 {
            let rx = rng.random_range(w / 12 + 10..w / 6 + 12) as f64;
            let ry = rng.random_range(h / 20 + 10..h / 12 + 12) as f64;
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..(horizon as f64 * 0.3).max(1.0));
            for y in 0..horizon {
                for x in 0..w {
                    let dx = (x as f64 - cx) / rx;
                    let dy = (y as f64 - cy) / ry;
                    if dx * dx + dy * dy <= 1.0 {
                        codes[y * w + x] = color;
                    }
                }
            }
        }
    }

    for _ in 0..spec.buildings {
        let d: f64 = rng.random_range(15.0..120.0);
        let base = k.cy + spec.camera_height * k.fy / d;
        let top = base - rng.random_range(8.0..30.0) * k.fy / d;
        let half_w = rng.random_range(4.0..12.0) * k.fx / d;
        let center = rng.random_range(0.0..w as f64);
        // Facades stay darker than the sky so the brightest dark-channel
        // patches are always sky or cloud.
        let tint: [u8; 3] = [
            rng.random_range(60..150),
            rng.random_range(50..140),
            rng.random_range(40..130),
        ];
        // Rooflines stay below the top third of the sky, where the clouds are.
        let y0 = top.max(k.cy * 0.35) as usize;
        let y1 = (base.min(h as f64)) as usize;
        let x0 = (center - half_w).max(0.0) as usize;
        let x1 = ((center + half_w) as usize).min(w);
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y * w + x;
                // Nearer surfaces win.
                if d < depth[i] {
                    depth[i] = d;
                    labels[i] = LABEL_BUILDING;
                    let stripe = if (y / 4) % 2 == 0 { 0 } else { 12 };
                    codes[i] = tint.map(|c| c.saturating_sub(stripe));
                }
            }
        }
    }

    let flat: Vec<u16> = codes.iter().flat_map(|c| c.map(u16::from)).collect();
    Scene {
        image: ColorRaster::from_codes(w, h, &flat, BitDepth::Eight).expect("valid codes"),
        depth: DepthMap::from_raster(Raster::from_vec(w, h, depth).expect("sized")),
        labels: Raster::from_vec(w, h, labels).expect("sized"),
        intrinsics: k,
    }
}

fn sky_code(sky: Sky, y: usize, h: usize) -> [u8; 3] {
    match sky {
        Sky::Overcast { level } => [level, level, level],
        Sky::Cloudless | Sky::Clouds { .. } => {
            // Deep blue at the top fading to pale blue at the horizon.
            let s = (y as f64 / (h as f64 / 2.0)).clamp(0.0, 1.0);
            let lerp = |a: f64, b: f64| (a + (b - a) * s).round() as u8;
            [lerp(70.0, 150.0), lerp(125.0, 185.0), lerp(230.0, 240.0)]
        }
    }
}

/// Files written for one synthetic frame, relative to the dataset root.
#[derive(Debug, Clone)]
pub struct WrittenFrame {
    pub record: FrameRecord,
    pub scene: Scene,
}

/// Write `count` frames (image, `FDEPTH01` depth, class labels) plus a
/// `manifest.jsonl` under `root`. Frame `i` uses `spec_for(i)`.
pub fn write_dataset(
    root: &Path,
    count: usize,
    mut spec_for: impl FnMut(usize) -> SceneSpec,
) -> Result<DatasetManifest> {
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let spec = spec_for(i);
        let written = write_frame(root, &format!("{i:04}"), &spec)?;
        frames.push(written.record);
    }
    let manifest = DatasetManifest::new(root, frames)?;
    manifest.save(root.join("manifest.jsonl"))?;
    Ok(manifest)
}

pub fn write_frame(root: &Path, id: &str, spec: &SceneSpec) -> Result<WrittenFrame> {
    let scene = render_scene(spec);
    let image = PathBuf::from("rgb").join(format!("{id}.png"));
    let depth = PathBuf::from("depth").join(format!("{id}.fdepth"));
    let class = PathBuf::from("class").join(format!("{id}.png"));
    raster_io::write_image(&scene.image, root.join(&image), BitDepth::Eight)?;
    raster_io::write_atomic(
        root.join(&depth),
        &encode_depth(&scene.depth, &DepthCodec::Float32Raster)?,
    )?;
    raster_io::write_label(&scene.labels, root.join(&class), BitDepth::Eight)?;

    let mut record = FrameRecord::new(id, image, depth);
    record.annotations.push(class);
    record
        .metadata
        .insert("sky_contrast".into(), json!(spec.sky_contrast()));
    Ok(WrittenFrame { record, scene })
}

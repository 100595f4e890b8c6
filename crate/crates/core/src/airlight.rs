//! Atmospheric light estimation from a clear-weather image via the dark channel.
//!
//! The brightest pixels of the dark channel are usually the most distant and
//! most washed-out part of the scene (sky, clouds). The estimate is taken from
//! the original colors at those pixels. On a cloudless frame this picks blue
//! sky and the synthesized fog inherits a blue cast; nothing here corrects for
//! that, frames are filtered upstream instead.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ColorRaster, ColorTriple, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Per-channel mean over all candidate pixels.
    MeanOfCandidates,
    /// The candidate with the largest `r + g + b`.
    #[default]
    MaxIntensityPixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AirlightConfig {
    /// Half-size of the dark-channel window; the window is `(2r + 1)²`.
    pub patch_radius: usize,
    /// Share of pixels, by dark-channel rank, that become candidates.
    pub brightest_fraction: f64,
    pub aggregation: Aggregation,
}

impl Default for AirlightConfig {
    fn default() -> Self {
        Self {
            patch_radius: 7,
            brightest_fraction: 0.001,
            aggregation: Aggregation::MaxIntensityPixel,
        }
    }
}

impl AirlightConfig {
    pub fn validate(&self) -> Result<()> {
        let f = self.brightest_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::param(
                "brightest_fraction",
                format!("must be in (0, 1], got {f}"),
            ));
        }
        Ok(())
    }

    /// Number of candidates for an image with `pixels` pixels.
    pub fn candidate_count(&self, pixels: usize) -> usize {
        ((self.brightest_fraction * pixels as f64).ceil() as usize).clamp(1, pixels)
    }
}

/// Minimum over channels and over a `(2r + 1)²` window clamped at the borders.
pub fn dark_channel(image: &ColorRaster, patch_radius: usize) -> Raster<f64> {
    let mins = image.pixels.map(ColorTriple::min_channel);
    if patch_radius == 0 {
        return mins;
    }
    let (w, h) = mins.dims();

    // A rectangular min filter separates into a row pass and a column pass.
    let mut horiz = Vec::with_capacity(w * h);
    for row in mins.rows() {
        horiz.extend(sliding_min(row, patch_radius));
    }
    let mut out = vec![0.0; w * h];
    let mut column = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            column[y] = horiz[y * w + x];
        }
        for (y, v) in sliding_min(&column, patch_radius).into_iter().enumerate() {
            out[y * w + x] = v;
        }
    }
    Raster::from_vec(w, h, out).expect("same dimensions as input")
}

/// `out[i] = min(input[i - r ..= i + r])` with the window clipped to the slice,
/// using a monotone deque of indices.
fn sliding_min(input: &[f64], r: usize) -> Vec<f64> {
    let n = input.len();
    let mut out = Vec::with_capacity(n);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + r).min(n - 1);
        while next <= hi {
            while deque.back().is_some_and(|&j| input[j] >= input[next]) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(r);
        while deque.front().is_some_and(|&j| j < lo) {
            deque.pop_front();
        }
        out.push(input[*deque.front().expect("window is non-empty")]);
    }
    out
}

/// Candidate pixel indices: the `k` highest dark-channel values, ties broken
/// toward the earlier pixel in row-major order. Returned in row-major order.
pub fn airlight_candidates(dark: &Raster<f64>, k: usize) -> Vec<usize> {
    let values = dark.as_slice();
    let rank =
        |&a: &usize, &b: &usize| -> Ordering { values[b].total_cmp(&values[a]).then(a.cmp(&b)) };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let k = k.clamp(1, idx.len());
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, rank);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

pub fn estimate_airlight(image: &ColorRaster, cfg: &AirlightConfig) -> Result<ColorTriple> {
    cfg.validate()?;
    let dark = dark_channel(image, cfg.patch_radius);
    let candidates = airlight_candidates(&dark, cfg.candidate_count(dark.len()));
    let pixels = image.pixels.as_slice();

    let l = match cfg.aggregation {
        Aggregation::MaxIntensityPixel => {
            let mut best = candidates[0];
            for &i in &candidates[1..] {
                if pixels[i].sum() > pixels[best].sum() {
                    best = i;
                }
            }
            pixels[best]
        }
        Aggregation::MeanOfCandidates => {
            let n = candidates.len() as f64;
            let mut sum = [0.0; 3];
            let mut lo = [f64::INFINITY; 3];
            let mut hi = [f64::NEG_INFINITY; 3];
            for &i in &candidates {
                for (c, v) in pixels[i].channels().into_iter().enumerate() {
                    sum[c] += v;
                    lo[c] = lo[c].min(v);
                    hi[c] = hi[c].max(v);
                }
            }
            // Rounding in the sum must not push the mean outside the candidates' range.
            ColorTriple::from_channels([0, 1, 2].map(|c| (sum[c] / n).clamp(lo[c], hi[c])))
        }
    };
    Ok(l)
}

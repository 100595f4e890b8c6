//! Homogeneous fog optics: transmittance from distance, compositing toward the
//! atmospheric light, and the visibility calibration that ties the
//! attenuation coefficient to meteorological optical range.
//!
//! Compositing happens in gamma-encoded space by default, which reproduces
//! pipelines that blend directly on 8-bit dataset images. [`BlendSpace::LinearLight`]
//! decodes with the sRGB transfer function first and re-encodes afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DistanceMap;
use crate::raster::{ColorRaster, ColorTriple, Raster};

/// `-ln(0.05)` rounded as in the meteorological definition: the optical
/// depth at which contrast falls to 5%.
pub const MOR_OPTICAL_DEPTH: f64 = 2.996;

/// Smallest attenuation coefficient that still counts as fog (MOR of 1 km).
pub const FOG_BETA_THRESHOLD: f64 = MOR_OPTICAL_DEPTH / 1000.0;

/// Fog densities of the reference dataset, lightest first.
pub const CANONICAL_BETAS: [f64; 5] = [0.005, 0.01, 0.02, 0.03, 0.06];

/// Where the atmospheric light comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AirlightPolicy {
    Fixed(ColorTriple),
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendSpace {
    #[default]
    GammaEncoded,
    LinearLight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FogParams {
    pub beta: f64,
    pub airlight: AirlightPolicy,
    pub blend_space: BlendSpace,
}

impl FogParams {
    pub fn new(beta: f64, airlight: AirlightPolicy, blend_space: BlendSpace) -> Result<Self> {
        let p = Self {
            beta,
            airlight,
            blend_space,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta)?;
        if let AirlightPolicy::Fixed(l) = self.airlight {
            l.validate()
                .map_err(|e| Error::param("airlight", e.to_string()))?;
        }
        Ok(())
    }
}

/// Meteorological optical range in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Visibility {
    pub mor: f64,
}

/// Per-pixel fraction of scene radiance reaching the camera, in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmittanceMap(pub Raster<f64>);

impl TransmittanceMap {
    pub fn raster(&self) -> &Raster<f64> {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        let s = self.0.as_slice();
        s.iter().sum::<f64>() / s.len() as f64
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FogClass {
    Clear,
    /// Attenuating, but visibility stays above 1 km.
    HazeOnly,
    IsFog,
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_nan() || beta < 0.0 {
        return Err(Error::param("beta", format!("must be >= 0, got {beta}")));
    }
    Ok(())
}

/// Scalar transmittance `exp(-beta * distance)`, floored at the smallest
/// positive normal so the result stays strictly positive.
#[inline]
pub fn transmittance_at(beta: f64, distance: f64) -> f64 {
    (-beta * distance).exp().max(f64::MIN_POSITIVE)
}

pub fn transmittance(distance: &DistanceMap, beta: f64) -> Result<TransmittanceMap> {
    check_beta(beta)?;
    let d = distance.raster();
    for (i, &l) in d.as_slice().iter().enumerate() {
        if l.is_nan() {
            return Err(Error::Data(format!(
                "NaN distance at pixel ({}, {})",
                i % d.width(),
                i / d.width()
            )));
        }
        if l < 0.0 || l.is_infinite() {
            return Err(Error::Data(format!(
                "distance {l} at pixel ({}, {}) is not finite and non-negative",
                i % d.width(),
                i / d.width()
            )));
        }
    }
    Ok(TransmittanceMap(d.map(|&l| transmittance_at(beta, l))))
}

/// Composite `F = t·R + (1 − t)·L` per pixel and channel.
pub fn apply_fog(
    clear: &ColorRaster,
    t: &TransmittanceMap,
    airlight: ColorTriple,
    blend_space: BlendSpace,
) -> Result<ColorRaster> {
    clear.pixels.ensure_same_dims(t.raster())?;
    airlight
        .validate()
        .map_err(|e| Error::param("airlight", e.to_string()))?;

    let pixels = match blend_space {
        BlendSpace::GammaEncoded => zip_map(&clear.pixels, t.raster(), |r, tv| {
            blend(r, airlight, tv).map(clamp01)
        }),
        BlendSpace::LinearLight => {
            let l_lin = airlight.map(srgb_to_linear);
            zip_map(&clear.pixels, t.raster(), |r, tv| {
                blend(r.map(srgb_to_linear), l_lin, tv).map(|v| linear_to_srgb(clamp01(v)))
            })
        }
    };
    Ok(ColorRaster::new(pixels, clear.bit_depth))
}

#[inline]
fn blend(r: ColorTriple, l: ColorTriple, t: f64) -> ColorTriple {
    let s = 1.0 - t;
    ColorTriple::new(t * r.r + s * l.r, t * r.g + s * l.g, t * r.b + s * l.b)
}

#[inline]
fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn zip_map(
    image: &Raster<ColorTriple>,
    t: &Raster<f64>,
    f: impl Fn(ColorTriple, f64) -> ColorTriple,
) -> Raster<ColorTriple> {
    let data = image
        .as_slice()
        .iter()
        .zip(t.as_slice())
        .map(|(&p, &tv)| f(p, tv))
        .collect();
    Raster::from_vec(image.width(), image.height(), data).expect("dimensions already checked")
}

pub fn mor_from_beta(beta: f64) -> Result<Visibility> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("must be > 0, got {beta}")));
    }
    Ok(Visibility {
        mor: MOR_OPTICAL_DEPTH / beta,
    })
}

pub fn beta_from_mor(mor: f64) -> Result<f64> {
    if !(mor > 0.0 && mor.is_finite()) {
        return Err(Error::param("mor", format!("must be > 0, got {mor}")));
    }
    Ok(MOR_OPTICAL_DEPTH / mor)
}

/// Classify a density against the 1 km fog definition. Never rejects a
/// non-negative value: haze is a valid input to the same model.
pub fn validate_fog_beta(beta: f64) -> Result<FogClass> {
    check_beta(beta)?;
    Ok(if beta == 0.0 {
        FogClass::Clear
    } else if beta < FOG_BETA_THRESHOLD {
        FogClass::HazeOnly
    } else {
        FogClass::IsFog
    })
}

/// sRGB electro-optical transfer function (encoded → linear).
#[inline]
pub fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`srgb_to_linear`].
#[inline]
pub fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.003_130_8 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

fn convert_raster(raster: &ColorRaster, f: fn(f64) -> f64) -> Result<ColorRaster> {
    raster.validate()?;
    Ok(ColorRaster::new(
        raster.pixels.map(|p| p.map(|v| clamp01(f(v)))),
        raster.bit_depth,
    ))
}

pub fn srgb_decode(raster: &ColorRaster) -> Result<ColorRaster> {
    convert_raster(raster, srgb_to_linear)
}

pub fn srgb_encode(raster: &ColorRaster) -> Result<ColorRaster> {
    convert_raster(raster, linear_to_srgb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BitDepth;
    use proptest::prelude::*;

    fn dist(w: usize, h: usize, v: f64) -> DistanceMap {
        DistanceMap(Raster::from_fn(w, h, |_, _| v))
    }

    fn gray_image(w: usize, h: usize, v: f64) -> ColorRaster {
        ColorRaster::new(
            Raster::from_fn(w, h, |_, _| ColorTriple::gray(v)),
            BitDepth::Eight,
        )
    }

    #[test]
    fn zero_beta_gives_unit_transmittance() {
        let t = transmittance(&dist(3, 2, 1234.5), 0.0).unwrap();
        assert!(t.raster().as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn transmittance_at_mor_is_five_percent() {
        for beta in [0.001, 0.02, 0.3] {
            let mor = mor_from_beta(beta).unwrap().mor;
            let t = transmittance_at(beta, mor);
            assert!((t - (-2.996f64).exp()).abs() < 1e-12);
            assert!((t - 0.05).abs() < 1e-4);
        }
    }

    #[test]
    fn transmittance_at_150m_beta_002() {
        // exp(-3.0)
        let t = transmittance(&dist(1, 1, 150.0), 0.02).unwrap();
        assert!((t.raster().as_slice()[0] - 0.049_787_068_367_863_944).abs() < 1e-12);
    }

    #[test]
    fn transmittance_rejects_bad_inputs() {
        assert!(matches!(
            transmittance(&dist(2, 2, 1.0), -0.1),
            Err(Error::Parameter { .. })
        ));
        let mut d = dist(3, 3, 1.0);
        *d.0.get_mut(2, 1) = f64::NAN;
        let err = transmittance(&d, 0.01).unwrap_err().to_string();
        assert!(err.contains("(2, 1)"), "{err}");
    }

    #[test]
    fn transmittance_stays_positive_for_huge_optical_depth() {
        let t = transmittance(&dist(1, 1, 1e9), 10.0).unwrap();
        assert!(t.raster().as_slice()[0] > 0.0);
    }

    #[test]
    fn unit_transmittance_is_identity() {
        let img = ColorRaster::new(
            Raster::from_fn(4, 3, |x, y| {
                ColorTriple::new(x as f64 / 255.0, y as f64 / 255.0, 17.0 / 255.0)
            }),
            BitDepth::Eight,
        );
        let t = TransmittanceMap(Raster::from_fn(4, 3, |_, _| 1.0));
        let out = apply_fog(
            &img,
            &t,
            ColorTriple::new(0.9, 0.2, 0.4),
            BlendSpace::GammaEncoded,
        )
        .unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn vanishing_transmittance_gives_airlight() {
        let img = gray_image(3, 3, 0.1);
        let l = ColorTriple::new(0.7, 0.8, 0.9);
        let t = TransmittanceMap(Raster::from_fn(3, 3, |_, _| f64::MIN_POSITIVE));
        for space in [BlendSpace::GammaEncoded, BlendSpace::LinearLight] {
            let out = apply_fog(&img, &t, l, space).unwrap();
            for p in out.pixels.as_slice() {
                for (a, b) in p.channels().iter().zip(l.channels()) {
                    assert!((a - b).abs() <= BitDepth::Eight.lsb());
                }
            }
        }
    }

    #[test]
    fn half_transmittance_arithmetic() {
        let img = gray_image(1, 1, 0.4);
        let t = TransmittanceMap(Raster::from_fn(1, 1, |_, _| 0.5));
        let out = apply_fog(&img, &t, ColorTriple::gray(0.8), BlendSpace::GammaEncoded).unwrap();
        for v in out.pixels.as_slice()[0].channels() {
            assert!((v - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_fog_checks_shape() {
        let img = gray_image(2, 2, 0.4);
        let t = TransmittanceMap(Raster::from_fn(2, 3, |_, _| 0.5));
        assert!(matches!(
            apply_fog(&img, &t, ColorTriple::WHITE, BlendSpace::GammaEncoded),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn calibration_examples() {
        assert!((mor_from_beta(0.005).unwrap().mor - 599.2).abs() < 1e-9);
        assert!((mor_from_beta(0.06).unwrap().mor - 49.933_333_333).abs() < 1e-6);
        assert!((mor_from_beta(2.996).unwrap().mor - 1.0).abs() < 1e-15);
        assert!((beta_from_mor(1000.0).unwrap() - 0.002996).abs() < 1e-15);
        assert!((beta_from_mor(150.0).unwrap() - 0.019_973_333_333).abs() < 1e-9);
        assert!((beta_from_mor(2.996).unwrap() - 1.0).abs() < 1e-15);
        assert!(mor_from_beta(0.0).is_err());
        assert!(mor_from_beta(-1.0).is_err());
        assert!(beta_from_mor(0.0).is_err());
    }

    #[test]
    fn fog_classification() {
        assert_eq!(validate_fog_beta(0.005).unwrap(), FogClass::IsFog);
        assert_eq!(
            validate_fog_beta(FOG_BETA_THRESHOLD).unwrap(),
            FogClass::IsFog
        );
        assert_eq!(validate_fog_beta(0.001).unwrap(), FogClass::HazeOnly);
        assert_eq!(validate_fog_beta(0.0).unwrap(), FogClass::Clear);
        assert!(validate_fog_beta(-0.5).is_err());
        for b in CANONICAL_BETAS {
            assert_eq!(validate_fog_beta(b).unwrap(), FogClass::IsFog);
        }
    }

    #[test]
    fn fog_params_validation() {
        assert!(FogParams::new(0.0, AirlightPolicy::Estimated, BlendSpace::GammaEncoded).is_ok());
        assert!(FogParams::new(-1.0, AirlightPolicy::Estimated, BlendSpace::GammaEncoded).is_err());
        let bad = AirlightPolicy::Fixed(ColorTriple::new(1.2, 0.0, 0.0));
        assert!(FogParams::new(0.01, bad, BlendSpace::LinearLight).is_err());
    }

    #[test]
    fn srgb_fixed_points_and_midpoint() {
        assert_eq!(srgb_to_linear(0.0), 0.0);
        assert!((srgb_to_linear(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(linear_to_srgb(0.0), 0.0);
        assert!((linear_to_srgb(1.0) - 1.0).abs() < 1e-15);
        // ((0.5 + 0.055) / 1.055)^2.4
        assert!((srgb_to_linear(0.5) - 0.214_041_140_482_232_55).abs() < 1e-12);
    }

    #[test]
    fn srgb_round_trip_sweep() {
        let max_err = (0..256)
            .map(|i| i as f64 / 255.0)
            .map(|x| (linear_to_srgb(srgb_to_linear(x)) - x).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-6, "max error {max_err}");
    }

    #[test]
    fn srgb_raster_rejects_out_of_range() {
        let mut img = gray_image(2, 1, 0.3);
        img.pixels.get_mut(1, 0).g = 1.5;
        assert!(matches!(srgb_decode(&img), Err(Error::Data(_))));
        let ok = gray_image(2, 1, 0.5);
        let back = srgb_encode(&srgb_decode(&ok).unwrap()).unwrap();
        assert!((back.pixels.get(0, 0).r - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn monotone_in_distance(beta in 1e-4f64..1.0, a in 0.0f64..2000.0, b in 0.0f64..2000.0) {
            prop_assume!((a - b).abs() > 1e-6);
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            // Both values must be resolvable in f64 for strictness.
            prop_assume!(beta * far < 700.0);
            prop_assert!(transmittance_at(beta, near) > transmittance_at(beta, far));
        }

        #[test]
        fn monotone_in_density(l in 1e-3f64..2000.0, a in 1e-4f64..1.0, b in 1e-4f64..1.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (thin, thick) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(thick * l < 700.0);
            prop_assert!(transmittance_at(thin, l) > transmittance_at(thick, l));
        }

        #[test]
        fn calibration_round_trip(beta in 1e-4f64..=1.0) {
            let back = beta_from_mor(mor_from_beta(beta).unwrap().mor).unwrap();
            prop_assert!(((back - beta) / beta).abs() <= 1e-12);
        }

        #[test]
        fn composite_is_convex_combination(
            r in prop::array::uniform3(0.0f64..=1.0),
            l in prop::array::uniform3(0.0f64..=1.0),
            t in 0.0f64..=1.0,
            linear in any::<bool>(),
        ) {
            let space = if linear { BlendSpace::LinearLight } else { BlendSpace::GammaEncoded };
            let img = ColorRaster::new(
                Raster::from_fn(1, 1, |_, _| ColorTriple::from_channels(r)),
                BitDepth::Sixteen,
            );
            let tm = TransmittanceMap(Raster::from_fn(1, 1, |_, _| t));
            let out = apply_fog(&img, &tm, ColorTriple::from_channels(l), space).unwrap();
            let f = out.pixels.as_slice()[0].channels();
            for c in 0..3 {
                let lo = r[c].min(l[c]);
                let hi = r[c].max(l[c]);
                // Linear blending re-encodes; allow for transfer-function round-off.
                let eps = if linear { 1e-9 } else { 1e-15 };
                prop_assert!(f[c] >= lo - eps && f[c] <= hi + eps, "{f:?} not in [{lo}, {hi}]");
            }
        }
    }
}

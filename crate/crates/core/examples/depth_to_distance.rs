//! Decode stereo disparity, fill holes and convert planar depth to distance
//! from the camera center.

use fogsynth::geometry::{
    decode_depth, encode_depth, fill_holes, planar_to_radial, CameraIntrinsics, DepthCodec,
    DepthMap, HolePolicy,
};
use fogsynth::raster::Raster;

fn main() -> fogsynth::Result<()> {
    let k = CameraIntrinsics::new(2262.52, 2265.30, 1096.98, 513.137)?;
    let codec = DepthCodec::disparity(0.209313, k.fx);

    // A 4x3 crop far from the principal point, with one missing measurement.
    let planar = Raster::from_fn(4, 3, |x, y| {
        if (x, y) == (2, 1) {
            0.0
        } else {
            8.0 + x as f64 + 2.0 * y as f64
        }
    });
    let png = encode_depth(&DepthMap::from_raster(planar), &codec)?;
    let depth = decode_depth(&png, &codec)?;
    println!(
        "decoded {} valid, {} holes",
        depth.valid_count(),
        depth.hole_count()
    );

    let filled = fill_holes(&depth, HolePolicy::NearestValid)?;
    let dist = planar_to_radial(&filled, &k)?;
    for y in 0..3 {
        let row: Vec<String> = (0..4)
            .map(|x| {
                format!(
                    "{:.3}->{:.3}",
                    filled.depth().get(x, y),
                    dist.raster().get(x, y)
                )
            })
            .collect();
        println!("{}", row.join("  "));
    }
    Ok(())
}

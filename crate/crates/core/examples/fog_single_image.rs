//! Fog one synthetic frame at the five standard densities and write PNGs.
//!
//! ```text
//! cargo run --example fog_single_image -- /tmp/fogged
//! ```

use std::path::PathBuf;

use fogsynth::geometry::{fill_holes, planar_to_radial, HolePolicy};
use fogsynth::optics::{apply_fog, mor_from_beta, transmittance, BlendSpace, CANONICAL_BETAS};
use fogsynth::raster::BitDepth;
use fogsynth::raster_io::write_image;
use fogsynth::synth::{render_scene, SceneSpec};

fn main() -> fogsynth::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("fogsynth-single"));
    let scene = render_scene(&SceneSpec::new(720, 360, 1));
    let depth = fill_holes(&scene.depth, HolePolicy::Reject)?;
    let distance = planar_to_radial(&depth, &scene.intrinsics)?;
    let airlight = fogsynth::airlight::estimate_airlight(&scene.image, &Default::default())?;

    write_image(&scene.image, out.join("clear.png"), BitDepth::Eight)?;
    for beta in CANONICAL_BETAS {
        let t = transmittance(&distance, beta)?;
        let fogged = apply_fog(&scene.image, &t, airlight, BlendSpace::GammaEncoded)?;
        let path = out.join(format!("fog_beta_{beta}.png"));
        write_image(&fogged, &path, BitDepth::Eight)?;
        println!(
            "beta {beta:<5} MOR {:>6.1} m  mean t {:.3}  {}",
            mor_from_beta(beta)?.mor,
            t.mean(),
            path.display()
        );
    }
    Ok(())
}

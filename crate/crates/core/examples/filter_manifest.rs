//! Select frames by metadata before fogging, e.g. only low-contrast skies
//! where the fog model fits best.

use fogsynth::pipeline::{filter_manifest, Predicate};
use fogsynth::synth::{write_dataset, SceneSpec, Sky};

fn main() -> fogsynth::Result<()> {
    let dir = tempdir();
    let manifest = write_dataset(&dir, 9, |i| {
        let sky = [
            Sky::Cloudless,
            Sky::Clouds {
                color: [240, 240, 240],
            },
            Sky::Overcast { level: 200 },
        ][i % 3];
        SceneSpec::new(32, 16, i as u64).with_sky(sky)
    })?;

    for text in [
        "sky_contrast <= 3",
        "sky_contrast > 3 && sky_contrast < 5",
        "brightness < 1",
    ] {
        let p: Predicate = text.parse()?;
        let outcome = filter_manifest(&manifest, &p);
        let ids: Vec<&str> = outcome
            .manifest
            .frames
            .iter()
            .map(|f| f.id.as_str())
            .collect();
        println!(
            "{text:<40} kept {ids:?}, missing key {}, rejected {}",
            outcome.missing_key.len(),
            outcome.rejected.len()
        );
    }
    Ok(())
}

fn tempdir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join("fogsynth-filter");
    let _ = std::fs::remove_dir_all(&d);
    d
}

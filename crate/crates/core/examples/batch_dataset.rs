//! Generate a small dataset, fog it with a worker pool and print the run summary.

use fogsynth::pipeline::{process_batch, summarize_run, BatchRequest, BetaValue, FogSettings};
use fogsynth::synth::{write_dataset, SceneSpec, Sky};

fn main() -> fogsynth::Result<()> {
    let dir = std::env::temp_dir().join("fogsynth-batch");
    let _ = std::fs::remove_dir_all(&dir);
    let spec = |i: usize| {
        let sky = if i.is_multiple_of(2) {
            Sky::Cloudless
        } else {
            Sky::Overcast { level: 190 }
        };
        SceneSpec::new(256, 128, i as u64).with_sky(sky)
    };
    let manifest = write_dataset(&dir.join("clear"), 8, spec)?;

    let betas: Vec<BetaValue> = ["0.01", "0.03", "0.06"]
        .iter()
        .map(|s| s.parse())
        .collect::<fogsynth::Result<_>>()?;
    let settings = FogSettings {
        intrinsics: Some(spec(0).intrinsics()),
        ..FogSettings::default()
    };
    let out = dir.join("foggy");
    let report = process_batch(&BatchRequest {
        manifest: &manifest,
        betas: &betas,
        settings: &settings,
        workers: 4,
        out_dir: &out,
        config_echo: serde_json::Value::Null,
    })?;
    print!("{}", summarize_run(&report));
    println!("written under {}", out.display());
    Ok(())
}

#![allow(dead_code)]

use std::path::Path;

use fogsynth::pipeline::{
    process_batch, BatchRequest, BetaValue, DatasetManifest, FogSettings, RunReport,
};
use fogsynth::synth::{self, SceneSpec, Sky};

/// Synthetic dataset of `n` frames with mixed skies.
pub fn dataset(root: &Path, n: usize, w: usize, h: usize) -> DatasetManifest {
    synth::write_dataset(root, n, |i| {
        let sky = match i % 3 {
            0 => Sky::Clouds {
                color: [238, 240, 242],
            },
            1 => Sky::Cloudless,
            _ => Sky::Overcast { level: 200 },
        };
        SceneSpec::new(w, h, 100 + i as u64).with_sky(sky)
    })
    .expect("fixture dataset")
}

pub fn settings_for(w: usize, h: usize) -> FogSettings {
    FogSettings {
        intrinsics: Some(SceneSpec::new(w, h, 0).intrinsics()),
        ..FogSettings::default()
    }
}

pub fn betas(labels: &[&str]) -> Vec<BetaValue> {
    labels.iter().map(|l| l.parse().unwrap()).collect()
}

pub fn run_batch(
    manifest: &DatasetManifest,
    betas: &[BetaValue],
    settings: &FogSettings,
    workers: usize,
    out: &Path,
) -> RunReport {
    process_batch(&BatchRequest {
        manifest,
        betas,
        settings,
        workers,
        out_dir: out,
        config_echo: serde_json::Value::Null,
    })
    .expect("batch runs")
}

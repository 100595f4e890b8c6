//! Estimate atmospheric light with the dark channel prior on two synthetic
//! skies. With white clouds the estimate lands on the clouds; with a clear
//! blue sky it comes out blue.

use fogsynth::airlight::{dark_channel, estimate_airlight, Aggregation, AirlightConfig};
use fogsynth::synth::{render_scene, SceneSpec, Sky};

fn main() -> fogsynth::Result<()> {
    for (name, sky) in [
        (
            "clouds",
            Sky::Clouds {
                color: [238, 240, 242],
            },
        ),
        ("cloudless", Sky::Cloudless),
        ("overcast", Sky::Overcast { level: 205 }),
    ] {
        let scene = render_scene(&SceneSpec::new(640, 320, 7).with_sky(sky));
        let dark = dark_channel(&scene.image, 7);
        let brightest = dark.as_slice().iter().cloned().fold(0.0, f64::max);
        for aggregation in [
            Aggregation::MaxIntensityPixel,
            Aggregation::MeanOfCandidates,
        ] {
            let cfg = AirlightConfig {
                aggregation,
                ..AirlightConfig::default()
            };
            let l = estimate_airlight(&scene.image, &cfg)?;
            println!(
                "{name:>9} {aggregation:?}: L = ({:.3}, {:.3}, {:.3}), max dark {brightest:.3}",
                l.r, l.g, l.b
            );
        }
    }
    Ok(())
}

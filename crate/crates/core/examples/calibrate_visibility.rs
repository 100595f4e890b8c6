//! Convert between attenuation coefficient and visibility.
//!
//! ```text
//! cargo run --example calibrate_visibility -- 0.005 0.01 0.02 0.03 0.06
//! ```

use fogsynth::optics::{beta_from_mor, mor_from_beta, transmittance_at, validate_fog_beta};

fn main() -> fogsynth::Result<()> {
    let betas: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("beta must be a number"))
        .collect();
    let betas = if betas.is_empty() {
        vec![0.005, 0.01, 0.02, 0.03, 0.06]
    } else {
        betas
    };

    println!("{:>10} {:>10} {:>10}  class", "beta", "MOR [m]", "t(MOR)");
    for beta in betas {
        let mor = mor_from_beta(beta)?.mor;
        let class = validate_fog_beta(beta)?;
        println!(
            "{beta:>10} {mor:>10.2} {:>10.6}  {class:?}",
            transmittance_at(beta, mor)
        );
    }
    // 1 km visibility is the fog threshold.
    println!("beta at 1 km: {:.6}", beta_from_mor(1000.0)?);
    Ok(())
}

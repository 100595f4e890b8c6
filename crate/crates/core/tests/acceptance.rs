//! End-to-end acceptance checks. Runs without the libtest harness so every
//! check prints exactly one PASS/FAIL line even when stdout is captured.

mod common;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use fogsynth::airlight::{dark_channel, estimate_airlight, AirlightConfig};
use fogsynth::geometry::{planar_to_radial, CameraIntrinsics, DepthMap, DistanceMap};
use fogsynth::optics::{apply_fog, transmittance, BlendSpace, TransmittanceMap, CANONICAL_BETAS};
use fogsynth::pipeline::{prepare_frame, BetaValue, FrameStatus};
use fogsynth::raster::{BitDepth, ColorRaster, ColorTriple, Raster};
use fogsynth::raster_io;
use fogsynth::synth::{render_scene, SceneSpec, Sky};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    }};
}

fn calibration_table() -> Check {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_fog"))
        .args([
            "--json",
            "calibrate",
            "--beta",
            "0.005",
            "0.01",
            "0.02",
            "0.03",
            "0.06",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(out.status.success(), "exit status {}", out.status);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let expected = [600.0, 300.0, 150.0, 100.0, 50.0];
    let mut worst: f64 = 0.0;
    for (row, want) in rows.as_array().ok_or("not an array")?.iter().zip(expected) {
        let mor = row["mor_m"].as_f64().ok_or("missing mor_m")?;
        worst = worst.max((mor - want).abs() / want);
    }
    ensure!(rows.as_array().unwrap().len() == 5, "expected 5 rows");
    ensure!(worst < 0.01, "relative MOR error {worst:.4}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "max rel err {:.3}%, {:.0} ms",
        worst * 100.0,
        elapsed.as_secs_f64() * 1e3
    ))
}

fn contrast_at_visibility() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let target = (-2.996f64).exp();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let beta: f64 = rng.random_range(1e-4..1.0);
        let mor = fogsynth::optics::mor_from_beta(beta)
            .map_err(|e| e.to_string())?
            .mor;
        let dist = DistanceMap(Raster::from_vec(1, 1, vec![mor]).unwrap());
        let t = transmittance(&dist, beta).map_err(|e| e.to_string())?;
        worst = worst.max((t.raster().get(0, 0) - target).abs());
    }
    ensure!(worst <= 1e-9, "max |t - e^-2.996| = {worst:e}");
    Ok(format!("100 densities, max deviation {worst:.1e}"))
}

fn zero_density_identity() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (w, h) = (96, 48);
    let manifest = common::dataset(&dir.path().join("in"), 10, w, h);
    let out = dir.path().join("out");
    let report = common::run_batch(
        &manifest,
        &common::betas(&["0"]),
        &common::settings_for(w, h),
        4,
        &out,
    );
    ensure!(
        report.summary.frames_ok == 10,
        "{} frames ok",
        report.summary.frames_ok
    );
    for (frame, rec) in report.frames.iter().zip(&manifest.frames) {
        let src =
            raster_io::sha256_file(manifest.resolve(&rec.image)).map_err(|e| e.to_string())?;
        let dst = raster_io::sha256_file(out.join(&frame.variants[0].output))
            .map_err(|e| e.to_string())?;
        ensure!(src == dst, "frame {} differs", rec.id);
    }
    Ok("10 frames hash-identical".into())
}

fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ColorRaster {
    let codes: Vec<u16> = (0..w * h * 3).map(|_| rng.random_range(0..=255)).collect();
    ColorRaster::from_codes(w, h, &codes, BitDepth::Eight).unwrap()
}

fn naive_fog(image: &ColorRaster, t: &Raster<f64>, l: ColorTriple) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for y in 0..image.height() {
        for x in 0..image.width() {
            let r = image.pixels.get(x, y).channels();
            let tv = *t.get(x, y);
            let lc = l.channels();
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = (tv * r[c] + (1.0 - tv) * lc[c]).clamp(0.0, 1.0);
            }
            out.push(px);
        }
    }
    out
}

fn naive_dark(image: &ColorRaster, r: usize) -> Vec<f64> {
    let (w, h) = image.dims();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut m = f64::INFINITY;
            for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    m = m.min(image.pixels.get(xx, yy).min_channel());
                }
            }
            out.push(m);
        }
    }
    out
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_geom: f64 = 0.0;
    for case in 0..50 {
        let w = rng.random_range(1..=16);
        let h = rng.random_range(1..=16);
        let image = random_image(&mut rng, w, h);

        let t = Raster::from_fn(w, h, |_, _| rng.random_range(1e-6..=1.0));
        let l = ColorTriple::new(rng.random(), rng.random(), rng.random());
        let fogged = apply_fog(
            &image,
            &TransmittanceMap(t.clone()),
            l,
            BlendSpace::GammaEncoded,
        )
        .map_err(|e| e.to_string())?;
        let got: Vec<[f64; 3]> = fogged
            .pixels
            .as_slice()
            .iter()
            .map(|p| p.channels())
            .collect();
        ensure!(
            got == naive_fog(&image, &t, l),
            "apply_fog mismatch in case {case}"
        );

        let r = rng.random_range(0..=8);
        ensure!(
            dark_channel(&image, r).as_slice() == naive_dark(&image, r).as_slice(),
            "dark channel mismatch in case {case} (r = {r})"
        );

        let k = CameraIntrinsics::new(
            rng.random_range(5.0..500.0),
            rng.random_range(5.0..500.0),
            rng.random_range(-4.0..w as f64 + 4.0),
            rng.random_range(-4.0..h as f64 + 4.0),
        )
        .unwrap();
        let depth = Raster::from_fn(w, h, |_, _| rng.random_range(0.1..500.0));
        let dist = planar_to_radial(&DepthMap::from_raster(depth.clone()), &k)
            .map_err(|e| e.to_string())?;
        for v in 0..h {
            for u in 0..w {
                let a = (u as f64 + 0.5 - k.cx) / k.fx;
                let b = (v as f64 + 0.5 - k.cy) / k.fy;
                let want = depth.get(u, v) * (a * a + b * b + 1.0).sqrt();
                let rel = (dist.raster().get(u, v) - want).abs() / want;
                worst_geom = worst_geom.max(rel);
            }
        }
        ensure!(
            worst_geom <= 1e-6,
            "radial distance rel err {worst_geom:e} in case {case}"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "50 cases, geometry rel err {worst_geom:.1e}, {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn radial_not_shorter() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut equal = 0;
    let mut pixels = 0;
    for _ in 0..200 {
        let w = rng.random_range(1..=40);
        let h = rng.random_range(1..=40);
        // Principal points land on pixel centers half the time to exercise exact equality.
        let snap = |v: f64, rng: &mut ChaCha8Rng| if rng.random() { v.floor() + 0.5 } else { v };
        let cx = snap(rng.random_range(0.0..w as f64), &mut rng);
        let cy = snap(rng.random_range(0.0..h as f64), &mut rng);
        let k = CameraIntrinsics::new(
            rng.random_range(10.0..3000.0),
            rng.random_range(10.0..3000.0),
            cx,
            cy,
        )
        .unwrap();
        let depth = Raster::from_fn(w, h, |_, _| rng.random_range(0.01..2000.0));
        let dist = planar_to_radial(&DepthMap::from_raster(depth.clone()), &k)
            .map_err(|e| e.to_string())?;
        for v in 0..h {
            for u in 0..w {
                let (d, l) = (*depth.get(u, v), *dist.raster().get(u, v));
                pixels += 1;
                ensure!(l >= d, "l < d at ({u}, {v})");
                if l == d {
                    equal += 1;
                    let du = (u as f64 + 0.5 - cx).abs();
                    let dv = (v as f64 + 0.5 - cy).abs();
                    ensure!(
                        du <= 1.0 && dv <= 1.0,
                        "l == d at ({u}, {v}), {du:.2} / {dv:.2} px off axis"
                    );
                }
            }
        }
    }
    Ok(format!("{pixels} pixels, {equal} on-axis equalities"))
}

struct DeterminismRun {
    hashes: BTreeMap<String, String>,
    annotations_ok: bool,
    copies: usize,
}

fn batch_determinism(labels: &mut String) -> std::result::Result<DeterminismRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (w, h) = (512, 256);
    let manifest = common::dataset(&dir.path().join("in"), 20, w, h);
    let betas = common::betas(&["0.01", "0.06"]);
    let settings = common::settings_for(w, h);
    let mut reference: Option<BTreeMap<String, String>> = None;
    let mut annotations_ok = true;
    let mut copies = 0;
    let mut times = Vec::new();
    for workers in [1, 4, 8] {
        let out = dir.path().join(format!("out{workers}"));
        let start = Instant::now();
        let report = common::run_batch(&manifest, &betas, &settings, workers, &out);
        let elapsed = start.elapsed();
        times.push(format!("{workers}w {:.2}s", elapsed.as_secs_f64()));
        ensure!(
            elapsed < Duration::from_secs(60),
            "{workers} workers took {elapsed:?}"
        );
        ensure!(
            report.summary.frames_ok == 20,
            "{} frames ok with {workers} workers",
            report.summary.frames_ok
        );
        let mut hashes = BTreeMap::new();
        for f in &report.frames {
            for v in &f.variants {
                let h = raster_io::sha256_file(out.join(&v.output)).map_err(|e| e.to_string())?;
                ensure!(
                    h == v.sha256,
                    "report hash disagrees with {}",
                    v.output.display()
                );
                hashes.insert(v.output.display().to_string(), h);
            }
            for a in &f.annotations {
                let src = raster_io::sha256_file(manifest.resolve(&a.source))
                    .map_err(|e| e.to_string())?;
                let dst = raster_io::sha256_file(out.join(&a.output)).map_err(|e| e.to_string())?;
                annotations_ok &= src == dst && dst == a.sha256;
                copies += 1;
            }
        }
        match &reference {
            None => reference = Some(hashes),
            Some(r) => ensure!(*r == hashes, "outputs differ with {workers} workers"),
        }
    }
    *labels = times.join(", ");
    Ok(DeterminismRun {
        hashes: reference.unwrap(),
        annotations_ok,
        copies,
    })
}

fn transmittance_ladder() -> Check {
    let (w, h) = (160, 80);
    let settings = common::settings_for(w, h);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest = common::dataset(dir.path(), 6, w, h);
    for rec in &manifest.frames {
        let prepared = prepare_frame(rec, &manifest.root, &settings).map_err(|e| e.to_string())?;
        let means: Vec<f64> = CANONICAL_BETAS
            .iter()
            .map(|&b| {
                prepared
                    .render(b, BlendSpace::GammaEncoded)
                    .map(|v| v.mean_transmittance)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure!(
            means.windows(2).all(|p| p[1] < p[0]),
            "frame {}: {means:?}",
            rec.id
        );
    }
    Ok(format!(
        "{} frames x {} densities",
        manifest.len(),
        CANONICAL_BETAS.len()
    ))
}

fn sky_airlight() -> Check {
    let cfg = AirlightConfig::default();
    let mut details = Vec::new();
    for seed in 0..3 {
        let clear = render_scene(&SceneSpec::new(320, 160, seed).with_sky(Sky::Cloudless));
        let l = estimate_airlight(&clear.image, &cfg).map_err(|e| e.to_string())?;
        ensure!(l.b >= l.r, "cloudless seed {seed}: L = {l:?}");
        details.push(format!("blue-red {:+.3}", l.b - l.r));

        let cloud = [238u8, 240, 242];
        let cloudy =
            render_scene(&SceneSpec::new(320, 160, seed).with_sky(Sky::Clouds { color: cloud }));
        let l = estimate_airlight(&cloudy.image, &cfg).map_err(|e| e.to_string())?;
        let lsb = BitDepth::Eight.lsb();
        for (got, want) in l.channels().iter().zip(cloud) {
            ensure!(
                (got - want as f64 / 255.0).abs() <= lsb,
                "cloudy seed {seed}: L = {l:?}"
            );
        }
    }
    Ok(format!(
        "cloudless {}; clouds within 1 LSB",
        details.join(", ")
    ))
}

fn throughput() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (w, h) = (1440, 720);
    let manifest = fogsynth::synth::write_dataset(dir.path(), 1, |_| SceneSpec::new(w, h, 10))
        .map_err(|e| e.to_string())?;
    let betas: Vec<BetaValue> = CANONICAL_BETAS
        .iter()
        .map(|&b| BetaValue::new(b).unwrap())
        .collect();
    let settings = common::settings_for(w, h);
    let workers = 4;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let start = Instant::now();
    let report = common::run_batch(
        &manifest,
        &betas,
        &settings,
        workers,
        &dir.path().join("out"),
    );
    let elapsed = start.elapsed().as_secs_f64();
    ensure!(
        report.frames[0].status == FrameStatus::Ok,
        "frame failed: {:?}",
        report.frames[0].error
    );
    ensure!(elapsed < 20.0, "took {elapsed:.2}s");
    let note = if elapsed < 2.0 {
        ""
    } else {
        " (over the 2 s target)"
    };
    Ok(format!(
        "1440x720, 5 variants, {workers} workers on {cores} cores: {elapsed:.2}s{note}"
    ))
}

fn main() {
    let mut results: Vec<(u32, &str, Check)> = vec![
        (1, "calibration table", calibration_table()),
        (
            2,
            "contrast at visibility distance",
            contrast_at_visibility(),
        ),
        (3, "zero density is identity", zero_density_identity()),
        (4, "oracle equivalence", oracle_equivalence()),
        (5, "radial distance >= planar depth", radial_not_shorter()),
    ];
    let mut timing = String::new();
    match batch_determinism(&mut timing) {
        Ok(run) => {
            results.push((
                6,
                "batch determinism",
                Ok(format!("{} outputs equal; {timing}", run.hashes.len())),
            ));
            let lab = if run.annotations_ok {
                Ok(format!("{} copies hash-equal", run.copies))
            } else {
                Err("annotation copy differs from source".into())
            };
            results.push((7, "label fidelity", lab));
        }
        Err(e) => {
            results.push((6, "batch determinism", Err(e)));
            results.push((7, "label fidelity", Err("batch did not complete".into())));
        }
    }
    results.push((8, "transmittance ladder", transmittance_ladder()));
    results.push((9, "sky airlight", sky_airlight()));
    results.push((10, "throughput", throughput()));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(msg) => println!("acceptance {n:>2} PASS  {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("acceptance {n:>2} FAIL  {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

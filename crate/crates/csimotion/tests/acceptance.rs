//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p csimotion --test acceptance`. The process exits 0
//! even when a criterion fails so the workspace test run stays usable; set
//! `CSIMOTION_STRICT=1` to exit 1 on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use csimotion::formats::manifest::parse_manifest;
use csimotion::formats::pcap::parse_nexmon_pcap;
use csimotion::io::{builtin_map_for, load_capture, load_ground_truth, load_pir};
use csimotion_core::eval::{evaluate_run, summarize, RunResult};
use csimotion_core::preprocess::lowpass;
use csimotion_core::synth::{generate, multipath_profile, SynthScript};
use csimotion_core::{
    calibrate, contains_movement, detect, pcc_pair, pcc_series, preprocess_pipeline,
    running_variance, score, sliding_variance_analysis, AmplitudeSeries, Bandwidth,
    CalibrationProfile, DetectorConfig, Matrix, PccSeries, PreprocessConfig, SubcarrierMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        let status = if ok { Status::Pass } else { Status::Fail };
        Outcome { status, detail }
    }
}

/// Empty-room noise seeds and the room's multipath seed shared by every
/// synthetic capture below.
const ROOM: u64 = 2024;
const CALIBRATION_SEEDS: std::ops::Range<u64> = 9000..9005;

fn room_script(duration: f64, seed: u64) -> SynthScript {
    let mut s = SynthScript::quiet(duration, seed);
    s.base_profile = multipath_profile(s.subcarriers, ROOM);
    s
}

struct Room {
    profile: CalibrationProfile,
    map: SubcarrierMap,
    pre: PreprocessConfig,
    cfg: DetectorConfig,
}

impl Room {
    fn calibrated() -> Self {
        let map = SubcarrierMap::builtin(Bandwidth::Mhz80);
        let pre = PreprocessConfig::default();
        let series: Vec<PccSeries> = CALIBRATION_SEEDS
            .map(|seed| {
                let (c, _) = generate(&room_script(10.0, seed)).unwrap();
                pcc_series(&preprocess_pipeline(&c, &map, &pre).unwrap().0).unwrap()
            })
            .collect();
        Room {
            profile: calibrate(&series, "synthetic room").unwrap(),
            map,
            pre,
            cfg: DetectorConfig::default(),
        }
    }
}

// 1 -----------------------------------------------------------------------

/// Literal step-through of the two-window hysteresis, written from the
/// algorithm description without reference to the detector code. Branches
/// are spelled out on purpose.
#[allow(clippy::needless_bool_assign)]
fn hysteresis_oracle(var: &[f64], mov: f64, nomov: f64, w: usize, initial: bool) -> Vec<bool> {
    let n = var.len();
    let mut max = 0.0;
    for &v in var {
        if v > max {
            max = v;
        }
    }
    if max <= 0.0 {
        return vec![false; n];
    }
    let mut norm = Vec::with_capacity(n);
    for &v in var {
        norm.push(v / max);
    }
    let mut output = vec![false; n];
    let mut moving = initial;
    let mut i = 0;
    while i + 2 * w <= n {
        let mut x = 0.0;
        for v in &norm[i..i + w] {
            x += v;
        }
        let mut y = 0.0;
        for v in &norm[i + w..i + 2 * w] {
            y += v;
        }
        let diff = (x / w as f64 - y / w as f64).abs();
        if moving {
            // stay moving until the difference drops below nomov
            if diff < nomov {
                output[i] = false;
            } else {
                output[i] = true;
            }
        } else if diff > mov {
            output[i] = true;
        } else {
            output[i] = false;
        }
        moving = output[i];
        i += 1;
    }
    while i < n {
        output[i] = moving;
        i += 1;
    }
    output
}

fn random_variance(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => (0..n).map(|_| rng.random::<f64>()).collect(),
        // still stretches broken by bursts, like a real capture
        1 => {
            let mut v = Vec::with_capacity(n);
            while v.len() < n {
                let len = rng.random_range(5..80);
                let level = if rng.random_bool(0.4) {
                    rng.random_range(0.2..1.0)
                } else {
                    1e-4
                };
                for _ in 0..len {
                    v.push(level * rng.random::<f64>());
                }
            }
            v.truncate(n);
            v
        }
        // exact zeros and repeated values
        2 => (0..n)
            .map(|_| f64::from(rng.random_range(0u8..4)) * 0.25)
            .collect(),
        _ => (0..n)
            .map(|i| (i as f64 / rng.random_range(5.0..50.0)).sin().abs() * 1e-6)
            .collect(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    for case in 0..1000 {
        let n = rng.random_range(20..=2000);
        let var = random_variance(&mut rng, n);
        let cfg = if case % 2 == 0 {
            DetectorConfig::default()
        } else {
            let mov = rng.random_range(0.02..0.9);
            DetectorConfig {
                mov_threshold: mov,
                nomov_threshold: rng.random_range(0.001..mov),
                window_size: rng.random_range(1..=10),
                ..DetectorConfig::default()
            }
        };
        let initial = rng.random_bool(0.5);
        let got = sliding_variance_analysis(&var, &cfg, initial).unwrap();
        let want = hysteresis_oracle(
            &var,
            cfg.mov_threshold,
            cfg.nomov_threshold,
            cfg.window_size,
            initial,
        );
        if got != want {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    Outcome::check(
        mismatches == 0 && t < Duration::from_secs(10),
        format!("{mismatches}/1000 series differ from the step-through oracle, {t:.2?}"),
    )
}

// 2 -----------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut bounds, mut symmetry, mut invariance) = (0, 0, 0);
    let mut worst = 0.0f64;
    for k in [2usize, 46, 256] {
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..100.0)).collect();
            // partly correlated so values spread over [-1, 1]
            let mix = rng.random_range(-1.0..1.0);
            let y: Vec<f64> = x
                .iter()
                .map(|v| mix * v + rng.random_range(0.0..100.0))
                .collect();
            let r = pcc_pair(&x, &y).unwrap();
            if !(-1.0..=1.0).contains(&r) {
                bounds += 1;
            }
            let d = (r - pcc_pair(&y, &x).unwrap()).abs();
            worst = worst.max(d);
            if d >= 1e-12 {
                symmetry += 1;
            }
            let (a, b) = (rng.random_range(0.01..100.0), rng.random_range(-1e3..1e3));
            let (c, e) = (rng.random_range(0.01..100.0), rng.random_range(-1e3..1e3));
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ys: Vec<f64> = y.iter().map(|v| c * v + e).collect();
            let d = (r - pcc_pair(&xs, &ys).unwrap()).abs();
            worst = worst.max(d);
            if d >= 1e-12 {
                invariance += 1;
            }
        }
    }
    let t = start.elapsed();
    Outcome::check(
        bounds + symmetry + invariance == 0 && t < Duration::from_secs(5),
        format!(
            "30000 pairs: {bounds} out of bounds, {symmetry} asymmetric, {invariance} not invariant, max |delta| {worst:.1e}, {t:.2?}"
        ),
    )
}

// 3 -----------------------------------------------------------------------

fn brute_variance(values: &[f64], w: usize) -> Vec<f64> {
    values
        .windows(w)
        .map(|win| {
            // two-pass with one refinement of the mean, exact on constant windows
            let rough = win.iter().sum::<f64>() / w as f64;
            let mean = rough + win.iter().map(|v| v - rough).sum::<f64>() / w as f64;
            win.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w as f64
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(10..=3000);
        let w = if case % 3 == 0 {
            10
        } else {
            rng.random_range(2..=n.min(64))
        };
        let values: Vec<f64> = match case % 3 {
            0 => (0..n).map(|_| 0.99 + 0.01 * rng.random::<f64>()).collect(),
            1 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            _ => (0..n)
                .map(|i| {
                    if (i / 50) % 2 == 0 {
                        0.999
                    } else {
                        0.5 + 0.4 * rng.random::<f64>()
                    }
                })
                .collect(),
        };
        let got = running_variance(&values, w).unwrap();
        let want = brute_variance(&values, w);
        let mut bad = got.len() != want.len();
        for (g, b) in got.iter().zip(&want) {
            let err = if *b == 0.0 {
                g.abs()
            } else {
                (g - b).abs() / b
            };
            worst = worst.max(err);
            bad |= err > 1e-9;
        }
        failures += bad as usize;
    }
    Outcome::check(
        failures == 0,
        format!("{failures}/1000 series beyond 1e-9 relative, worst {worst:.1e}"),
    )
}

// 4 -----------------------------------------------------------------------

/// Amplitude of `freq` in `x` from a DFT over a whole number of cycles.
fn tone_amplitude(x: &[f64], rate: f64, freq: f64) -> f64 {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(*v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bin = (freq * n as f64 / rate).round() as usize;
    2.0 * buf[bin].norm() / n as f64
}

fn criterion_4() -> Outcome {
    let rate = 100.0;
    let n = 1000;
    let edge = 50;
    let cfg = PreprocessConfig::default();
    let mut m = Matrix::zeros(n, 2);
    for i in 0..n {
        let t = i as f64 / rate;
        m.set(
            i,
            0,
            5.0 + (2.0 * std::f64::consts::PI * 2.0 * t + 0.3).sin(),
        );
        m.set(
            i,
            1,
            5.0 + (2.0 * std::f64::consts::PI * 25.0 * t + 0.3).sin(),
        );
    }
    let series = AmplitudeSeries::new(m, rate, 0.0).unwrap();
    let out = lowpass(&series, cfg.cutoff, cfg.filter_order)
        .unwrap()
        .into_data();
    // 9 s interior: 18 and 225 whole cycles
    let pass = tone_amplitude(&out.column(0)[edge..n - edge], rate, 2.0);
    let stop = tone_amplitude(&out.column(1)[edge..n - edge], rate, 25.0);
    Outcome::check(
        (pass - 1.0).abs() < 0.01 && stop < 0.05,
        format!("2 Hz gain {pass:.6}, 25 Hz gain {stop:.2e}"),
    )
}

// 5 -----------------------------------------------------------------------

fn criterion_5(room: &Room) -> Outcome {
    const SEEDS: std::ops::Range<u64> = 0..20;
    let (mut worst_on, mut worst_off, mut min_acc, mut sum_acc) = (0.0f64, 0.0f64, 1.0f64, 0.0);
    let mut edges_ok = true;
    let mut slowest = Duration::ZERO;
    for seed in SEEDS {
        let start = Instant::now();
        let script = room_script(35.0, seed).with_episode(11.0, 25.0, 20.0);
        let (capture, gt) = generate(&script).unwrap();
        let d = detect(&capture, &room.profile, &room.cfg, &room.map, &room.pre).unwrap();
        let acc = score(&d.mask, &gt).unwrap().accuracy;
        slowest = slowest.max(start.elapsed());
        let segs = d.mask.segments();
        let (Some(first), Some(last)) = (segs.first(), segs.last()) else {
            edges_ok = false;
            min_acc = min_acc.min(acc);
            sum_acc += acc;
            continue;
        };
        let on = d.mask.time(first.0) - 11.0;
        let off = d.mask.time(last.1) - 25.0;
        if on.abs() > worst_on.abs() {
            worst_on = on;
        }
        if off.abs() > worst_off.abs() {
            worst_off = off;
        }
        edges_ok &= on.abs() <= 1.0 && off.abs() <= 1.0;
        min_acc = min_acc.min(acc);
        sum_acc += acc;
    }
    let mean_acc = sum_acc / SEEDS.count() as f64;
    Outcome::check(
        edges_ok && min_acc >= 0.9 && slowest < Duration::from_secs(5),
        format!(
            "seeds 0..20: worst onset {worst_on:+.1} s, worst offset {worst_off:+.1} s, accuracy min {:.1}% mean {:.1}% (need >= 90%), slowest run {slowest:.2?}",
            min_acc * 100.0,
            mean_acc * 100.0
        ),
    )
}

// 6 -----------------------------------------------------------------------

struct Expected {
    name: &'static str,
    threshold: f64,
    csi: f64,
    pir: f64,
}

const ENVIRONMENTS: [Expected; 2] = [
    Expected {
        name: "env1",
        threshold: 0.87,
        csi: 0.846,
        pir: 0.567,
    },
    Expected {
        name: "env2",
        threshold: 0.92,
        csi: 0.82,
        pir: 0.486,
    },
];

/// Calibrates from `<env>/calibration/*` and scores `<env>/runs.manifest`
/// (whose own `profile=` line is ignored).
fn reproduce_environment(dir: &Path, e: &Expected) -> Result<(bool, String), String> {
    let env = dir.join(e.name);
    let mut cal: Vec<PathBuf> = std::fs::read_dir(env.join("calibration"))
        .map_err(|err| format!("{}: {err}", env.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    cal.sort();
    let pre = PreprocessConfig::default();
    let cfg = DetectorConfig::default();
    let map_for = |c: &csimotion_core::CsiCapture| {
        builtin_map_for(c).unwrap_or_else(|| SubcarrierMap::identity(c.subcarrier_count()).unwrap())
    };
    let mut series = Vec::new();
    for p in &cal {
        let c = load_capture(p).map_err(|e| e.to_string())?.capture;
        let (amps, _) = preprocess_pipeline(&c, &map_for(&c), &pre).map_err(|e| e.to_string())?;
        series.push(pcc_series(&amps).map_err(|e| e.to_string())?);
    }
    let profile = calibrate(&series, e.name).map_err(|e| e.to_string())?;
    let manifest_path = env.join("runs.manifest");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| format!("{}: {e}", manifest_path.display()))?;
    let manifest = parse_manifest(&text, &env).map_err(|e| e.to_string())?;
    let mut results = Vec::new();
    for entry in &manifest.entries {
        let c = load_capture(&entry.capture)
            .map_err(|e| e.to_string())?
            .capture;
        let gt = load_ground_truth(&entry.gt).map_err(|e| e.to_string())?;
        let pir = entry
            .pir
            .as_deref()
            .map(load_pir)
            .transpose()
            .map_err(|e| e.to_string())?;
        results.push(RunResult {
            name: entry.capture.display().to_string(),
            movement: entry.movement.to_string(),
            outcome: evaluate_run(&c, &gt, pir.as_deref(), &profile, &cfg, &map_for(&c), &pre)
                .map_err(|e| e.to_string()),
        });
    }
    let s = summarize(&results);
    let th = profile.threshold();
    let csi = s.csi_mean.unwrap_or(f64::NAN);
    let pir = s.pir_mean.unwrap_or(f64::NAN);
    let ok = (th - e.threshold).abs() <= 0.03
        && (csi - e.csi).abs() <= 0.05
        && (pir - e.pir).abs() <= 0.05;
    Ok((
        ok,
        format!(
            "{}: threshold {th:.3} (want {:.2}), CSI {:.1}% (want {:.1}%), PIR {:.1}% (want {:.1}%), {} failed runs",
            e.name,
            e.threshold,
            csi * 100.0,
            e.csi * 100.0,
            pir * 100.0,
            e.pir * 100.0,
            s.failed
        ),
    ))
}

fn criterion_6() -> Outcome {
    let Some(dir) = std::env::var_os("CSIMOTION_DATASET") else {
        return Outcome {
            status: Status::Skip,
            detail: "dataset not available; set CSIMOTION_DATASET to its directory to run".into(),
        };
    };
    let start = Instant::now();
    let mut ok = true;
    let mut details = Vec::new();
    for e in &ENVIRONMENTS {
        match reproduce_environment(Path::new(&dir), e) {
            Ok((pass, detail)) => {
                ok &= pass;
                details.push(detail);
            }
            Err(err) => {
                ok = false;
                details.push(format!("{}: {err}", e.name));
            }
        }
    }
    let t = start.elapsed();
    details.push(format!("{t:.1?}"));
    Outcome::check(ok && t < Duration::from_secs(120), details.join("; "))
}

// 7 -----------------------------------------------------------------------

fn criterion_7(room: &Room) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut false_alarms = 0;
    for seed in 0..100 {
        let (c, _) = generate(&room_script(20.0, 10_000 + seed)).unwrap();
        let d = detect(&c, &room.profile, &room.cfg, &room.map, &room.pre).unwrap();
        false_alarms += (d.mask.moving_samples() > 0) as usize;
    }
    let mut missed = 0;
    for seed in 0..100 {
        let start = rng.random_range(2.0..12.0);
        let end = start + rng.random_range(2.0..6.0);
        let script =
            room_script(20.0, 20_000 + seed).with_episode(start, end, rng.random_range(10.0..40.0));
        let (c, _) = generate(&script).unwrap();
        let (amps, _) = preprocess_pipeline(&c, &room.map, &room.pre).unwrap();
        let pcc = pcc_series(&amps).unwrap();
        missed += !contains_movement(&pcc, &room.profile, room.cfg.window_size) as usize;
    }
    Outcome::check(
        false_alarms == 0 && missed == 0,
        format!(
            "{false_alarms}/100 still captures with a moving sample, {missed}/100 active captures missed by the gate (threshold {:.4})",
            room.profile.threshold()
        ),
    )
}

// 8 -----------------------------------------------------------------------

fn fixture(name: &str) -> Vec<u8> {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name]
        .iter()
        .collect();
    std::fs::read(path).unwrap()
}

fn mutate(rng: &mut ChaCha8Rng, seeds: &[Vec<u8>]) -> Vec<u8> {
    match rng.random_range(0..5) {
        0 => (0..rng.random_range(0..3000))
            .map(|_| rng.random())
            .collect(),
        // valid global header, garbage records
        1 => {
            let mut b = seeds[0][..24].to_vec();
            b.extend((0..rng.random_range(0..2000)).map(|_| rng.random::<u8>()));
            b
        }
        2 => {
            let mut b = seeds[rng.random_range(0..seeds.len())].clone();
            for _ in 0..rng.random_range(1..32) {
                let i = rng.random_range(0..b.len());
                b[i] = rng.random();
            }
            b
        }
        3 => {
            let b = &seeds[rng.random_range(0..seeds.len())];
            b[..rng.random_range(0..=b.len())].to_vec()
        }
        // hostile length fields
        _ => {
            let mut b = seeds[rng.random_range(0..seeds.len())].clone();
            let at = rng.random_range(0..b.len().saturating_sub(4));
            let v: u32 = match rng.random_range(0..3) {
                0 => u32::MAX,
                1 => 0,
                _ => rng.random_range(0..5000),
            };
            b[at..at + 4].copy_from_slice(&v.to_le_bytes());
            b
        }
    }
}

fn criterion_8() -> Outcome {
    let seeds = [
        fixture("golden3.pcap"),
        fixture("golden3-be-vlan.pcap"),
        fixture("truncated5.pcap"),
        fixture("no-csi.pcap"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut ok, mut err, mut crashed, mut invalid) = (0, 0, 0, 0);
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for _ in 0..10_000 {
        let buf = mutate(&mut rng, &seeds);
        match catch_unwind(AssertUnwindSafe(|| parse_nexmon_pcap(&buf))) {
            Ok(Ok(parsed)) => {
                let c = &parsed.capture;
                let s = c.subcarrier_count();
                let ts = c.timestamps();
                let valid = !c.is_empty()
                    && c.frames().iter().all(|f| {
                        f.subcarriers.len() == s && f.subcarriers.iter().all(|v| v.is_finite())
                    })
                    && ts.windows(2).all(|w| w[0] <= w[1])
                    && Bandwidth::from_subcarriers(s).is_some();
                if valid {
                    ok += 1;
                } else {
                    invalid += 1;
                }
            }
            Ok(Err(_)) => err += 1,
            Err(_) => crashed += 1,
        }
    }
    std::panic::set_hook(hook);
    Outcome::check(
        crashed == 0 && invalid == 0,
        format!("10000 buffers: {ok} captures, {err} typed errors, {invalid} invalid captures, {crashed} panics"),
    )
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let strict = std::env::var("CSIMOTION_STRICT").is_ok_and(|v| v == "1");
    let total = Instant::now();
    let room = Room::calibrated();
    let criteria: [(&str, Check<'_>); 8] = [
        (
            "variance analysis matches step-through oracle",
            Box::new(criterion_1),
        ),
        (
            "PCC bounds, symmetry and linear invariance",
            Box::new(criterion_2),
        ),
        (
            "running variance matches brute force",
            Box::new(criterion_3),
        ),
        ("low-pass passes 2 Hz, rejects 25 Hz", Box::new(criterion_4)),
        (
            "synthetic episode end to end",
            Box::new(|| criterion_5(&room)),
        ),
        ("dataset reproduction", Box::new(criterion_6)),
        (
            "contains-movement gate soundness",
            Box::new(|| criterion_7(&room)),
        ),
        ("pcap parser fuzz", Box::new(criterion_8)),
    ];
    let (mut passed, mut failed, mut skipped) = (0, 0, 0);
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = match o.status {
            Status::Pass => {
                passed += 1;
                "PASS"
            }
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => {
                skipped += 1;
                "SKIP"
            }
        };
        println!("{tag} {} {name}: {}", i + 1, o.detail);
    }
    println!(
        "acceptance: {passed} passed, {failed} failed, {skipped} skipped in {:.1?}",
        total.elapsed()
    );
    if strict && failed > 0 {
        std::process::exit(1);
    }
}

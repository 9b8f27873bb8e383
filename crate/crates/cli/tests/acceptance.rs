//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use fscinfo::compliance::{corner_fraction, filling_degree, minimum_claimable_resolution};
use fscinfo::info::{band_shells, fisher_information};
use fscinfo::locality::{local_fsc, local_information};
use fscinfo::metrics::half_bit_value;
use fscinfo::modelx::{run_experiment, ExperimentConfig, Verdict};
use fscinfo::packet::{ccc_fourier, ccc_real, CccMode};
use fscinfo::prep::ResamplePlan;
use fscinfo::transducer::{accumulate_fri, relative_tie, MeasurementSeries};
use fscinfo::{
    fisher_bits, forward_transform, fsc, inverse_transform, lid_map, pic_fourier, pic_real, radial_bins, InfoParams,
    Packet64, ShellFlags, Volume64, WindowSpec,
};
use fscinfo_cli::mrc::{encode_mrc, parse_mrc, read_mrc, Endian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(t: Duration, limit: Duration) -> Result<(), String> {
    ensure(t <= limit, || format!("took {:.2}s, limit {:.0}s", t.as_secs_f64(), limit.as_secs_f64()))
}

fn noise(dims: &[usize], rng: &mut ChaCha8Rng) -> Volume64 {
    Volume64::from_fn(dims, 1.0, |_| StandardNormal.sample(&mut *rng)).unwrap()
}

fn fisher_bits_fsc(c: f64) -> f64 {
    ((1.0 + c) / (1.0 - c)).log2()
}

fn c1_fisher() -> Outcome {
    let t0 = Instant::now();
    let eps = fscinfo::info::DEFAULT_CLAMP_EPS;
    let (b99, _) = fisher_bits(0.99, eps);
    let (b999, _) = fisher_bits(0.999, eps);
    ensure((b99 - 7.6366).abs() <= 1e-3, || format!("FSI(0.99) = {b99}"))?;
    ensure((b999 - 10.9650).abs() <= 1e-3, || format!("FSI(0.999) = {b999}"))?;
    ensure((b99 - fisher_bits_fsc(0.99)).abs() < 1e-12, || "closed form disagrees at 0.99".into())?;
    ensure((b999 - fisher_bits_fsc(0.999)).abs() < 1e-12, || "closed form disagrees at 0.999".into())?;
    for i in 0..=10_000 {
        let c = -1.0 + 2.0 * i as f64 / 10_000.0;
        let (p, _) = fisher_bits(c, eps);
        let (m, _) = fisher_bits(-c, eps);
        ensure(p == -m, || format!("antisymmetry broken at c = {c}"))?;
    }
    ensure((b99 - 7.0).abs() <= 1.0 && (b999 - 10.0).abs() <= 1.0, || "not within 1 bit of ~7 / ~10".into())?;
    let t = t0.elapsed();
    within_time(t, Duration::from_secs(1))?;
    Ok(format!("FSI(0.99)={b99:.4} FSI(0.999)={b999:.4}"))
}

fn c2_threshold() -> Outcome {
    let t1 = half_bit_value(1.0f64);
    ensure(t1 == 1.0, || format!("T(1) = {t1:?}"))?;
    let direct: f64 = (0.2071 + 1.9102) / (1.2071 + 0.9102);
    ensure((direct - 1.0).abs() <= 2.0 * f64::EPSILON, || format!("2.1173/2.1173 = {direct:?}"))?;
    let tinf = half_bit_value(1e16f64);
    ensure((tinf - 0.17157).abs() <= 1e-4, || format!("T(inf) = {tinf}"))?;
    let mut prev = f64::INFINITY;
    for i in 0..=6000 {
        let n = 10f64.powf(i as f64 / 1000.0);
        let t = half_bit_value(n);
        ensure(t < prev, || format!("not strictly decreasing at n_eff = {n}"))?;
        prev = t;
    }
    Ok(format!("T(1)={t1} T(1e16)={tinf:.5}"))
}

fn c3_fsc_contract() -> Outcome {
    let t0 = Instant::now();
    let dims = [32, 32, 32];
    let bins = radial_bins(&dims, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = noise(&dims, &mut rng);
    let fa = forward_transform(&a).unwrap();
    let same = fsc(&fa, &fa, &bins).unwrap();
    let neg = fsc(&fa, &forward_transform(&a.scaled(-1.0)).unwrap(), &bins).unwrap();
    for s in 0..same.n_shells() {
        ensure((same.values[s] - 1.0).abs() <= 1e-9, || format!("identical: shell {s} = {}", same.values[s]))?;
        ensure((neg.values[s] + 1.0).abs() <= 1e-9, || format!("negated: shell {s} = {}", neg.values[s]))?;
    }
    let n = bins.n_shells();
    let (mut sum, mut sum2) = (vec![0.0; n], vec![0.0; n]);
    let seeds = 200;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let x = forward_transform(&noise(&dims, &mut rng)).unwrap();
        let y = forward_transform(&noise(&dims, &mut rng)).unwrap();
        let c = fsc(&x, &y, &bins).unwrap();
        for s in 0..n {
            sum[s] += c.values[s];
            sum2[s] += c.values[s] * c.values[s];
        }
    }
    let mut worst: f64 = 1.0;
    for s in 0..n {
        let m = sum[s] / seeds as f64;
        let std = (sum2[s] / seeds as f64 - m * m).max(0.0).sqrt();
        let expected = 1.0 / (bins.counts()[s] as f64 / 2.0).sqrt();
        let ratio = std / expected;
        ensure((0.5..=2.0).contains(&ratio), || format!("shell {s}: std {std:.4} vs {expected:.4}"))?;
        if (ratio.ln()).abs() > worst.ln().abs() {
            worst = ratio;
        }
    }
    let t = t0.elapsed();
    within_time(t, Duration::from_secs(30))?;
    Ok(format!("±1 exact to 1e-9; worst std ratio {worst:.3} over {seeds} seeds"))
}

fn c4_geometry() -> Outcome {
    let f2 = corner_fraction(&radial_bins(&[256, 256], 1.0f64).unwrap());
    let f3 = corner_fraction(&radial_bins(&[128, 128, 128], 1.0f64).unwrap());
    ensure((f2 - (1.0 - PI / 4.0)).abs() <= 0.02, || format!("2D corner fraction {f2}"))?;
    ensure((f3 - (1.0 - PI / 6.0)).abs() <= 0.02, || format!("3D corner fraction {f3}"))?;
    ensure((f2 - 0.22).abs() <= 0.02 && (f3 - 0.48).abs() <= 0.02, || "not near ~22% / ~48%".into())?;
    let n = 128usize;
    let radius = 0.666 * n as f64 / 2.0;
    let c = (n as f64 - 1.0) / 2.0;
    let sphere = Volume64::from_fn(&[n, n, n], 1.0, |x| {
        let r2: f64 = x.iter().map(|&i| (i as f64 - c).powi(2)).sum();
        if r2 <= radius * radius {
            1.0
        } else {
            0.0
        }
    })
    .unwrap();
    let counted = sphere.data().iter().filter(|&&v| v > 0.0).count() as f64 / sphere.len() as f64;
    let kappa = filling_degree(&sphere, 0.5).unwrap().kappa;
    ensure((kappa - 0.1547).abs() <= 0.002, || format!("sphere filling degree {kappa}"))?;
    ensure((kappa - counted).abs() < 1e-12, || format!("filling degree {kappa} vs direct count {counted}"))?;
    Ok(format!("corners 2D {f2:.4} 3D {f3:.4}; sphere kappa {kappa:.4}"))
}

fn c5_sampling() -> Outcome {
    let r = minimum_claimable_resolution(1.05);
    ensure(r == 3.15, || format!("minimum claimable resolution {r:?}"))?;
    let plan = ResamplePlan::new(&[256, 256, 256], 1.05, 0.84).map_err(|e| e.to_string())?;
    ensure(plan.dst_dims == vec![320, 320, 320], || format!("planned dims {:?}", plan.dst_dims))?;
    ensure(plan.dst_step == 0.84, || format!("planned step {:?}", plan.dst_step))?;
    Ok("3.15 exactly; 256^3@1.05 -> 320^3@0.84".into())
}

fn c6_parseval() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 1024;
    let mut worst_ccc: f64 = 0.0;
    let mut worst_pic: f64 = 0.0;
    for i in 0..1000 {
        let offset: f64 = rng.random_range(-2.0..2.0);
        let x: Vec<f64> = (0..n).map(|_| offset + { let z: f64 = StandardNormal.sample(&mut rng); z }).collect();
        let mix: f64 = rng.random_range(-1.0..1.0);
        let y: Vec<f64> = x.iter().map(|&v| mix * v + { let z: f64 = StandardNormal.sample(&mut rng); z }).collect();
        let step = rng.random_range(0.1..3.0);
        let (p1, p2) = (Packet64::new(x, step).unwrap(), Packet64::new(y, step).unwrap());
        let mode = if i % 2 == 0 { CccMode::Literal } else { CccMode::Centered };
        let cr = ccc_real(&p1, &p2, mode).unwrap().value;
        let cf = ccc_fourier(&p1, &p2, mode).unwrap().value;
        worst_ccc = worst_ccc.max((cr - cf).abs());
        let bl = p1.extent();
        let pr = pic_real(&p1, &p2, bl, mode).unwrap().bits;
        let pf = pic_fourier(&p1, &p2, bl, mode).unwrap().bits;
        worst_pic = worst_pic.max((pr - pf).abs());
    }
    ensure(worst_ccc <= 1e-9, || format!("ccc routes differ by {worst_ccc:e}"))?;
    ensure(worst_pic <= 1e-9, || format!("pic routes differ by {worst_pic:e}"))?;
    let t = t0.elapsed();
    within_time(t, Duration::from_secs(10))?;
    Ok(format!("max |ccc diff| {worst_ccc:.1e}, max |pic diff| {worst_pic:.1e}"))
}

fn c7_model() -> Outcome {
    let t0 = Instant::now();
    let bins = radial_bins(&[64, 64, 64], 1.0f64).unwrap();
    let seeds = 20;
    let mut dominant = 0;
    let mut worst_residual: f64 = 0.0;
    for i in 0..seeds {
        let cfg = ExperimentConfig {
            seed: 7000 + 2 * i,
            noise_to_signal: 1.0,
            ..ExperimentConfig::default()
        };
        let r = run_experiment::<f64>(&cfg, &bins).map_err(|e| e.to_string())?;
        let ratio = r.noise.n1.rms() / r.phantom.volume.rms();
        ensure((ratio - 1.0).abs() < 0.05, || format!("noise/signal RMS {ratio}"))?;
        let res = r.curves.additivity_residual();
        worst_residual = worst_residual.max(res);
        ensure(res <= 1e-9, || format!("seed {}: additivity residual {res:e}", cfg.seed))?;
        let d = &r.curves;
        let band = &r.report.band;
        let independent = if band.is_empty() {
            false
        } else {
            let cross: f64 = band.iter().map(|&s| (d.t_sn1.values[s] + d.t_sn2.values[s]).abs()).sum();
            let nn: f64 = band.iter().map(|&s| d.t_n1n2.values[s].abs()).sum();
            cross > nn
        };
        let verdict = r.report.verdict == Verdict::CrossTermsDominant;
        ensure(independent == verdict, || format!("seed {}: verdict disagrees with direct sums", cfg.seed))?;
        if verdict {
            dominant += 1;
        }
    }
    ensure(dominant * 10 >= seeds * 9, || format!("cross terms dominant in {dominant}/{seeds}"))?;
    let t = t0.elapsed();
    within_time(t, Duration::from_secs(60))?;
    Ok(format!(
        "dominant in {dominant}/{seeds}; max additivity residual {worst_residual:.1e}; {:.1}s",
        t.as_secs_f64()
    ))
}

/// Signal with per-shell SNR `snr(shell)` against unit white noise.
fn shaped_signal(dims: &[usize], rng: &mut ChaCha8Rng, snr: impl Fn(usize) -> f64, fallback: f64) -> Volume64 {
    let bins = radial_bins(dims, 1.0).unwrap();
    let mut s = forward_transform(&noise(dims, rng)).unwrap();
    for (i, v) in s.values_mut().iter_mut().enumerate() {
        let gain = bins.shell_of(i).map_or(fallback, &snr).sqrt();
        *v *= gain;
    }
    inverse_transform(&s).unwrap()
}

fn c8_doubling() -> Outcome {
    let dims = [32, 32, 32];
    let bins = radial_bins(&dims, 1.0).unwrap();
    let n = bins.n_shells();
    let last = (n - 1) as f64;
    let snr = |r: usize| 20.0 * (0.08f64 / 20.0).powf(r as f64 / last);
    let eps = fscinfo::info::DEFAULT_CLAMP_EPS;
    let seeds = 100;
    let (mut m1, mut m2) = (vec![0.0; n], vec![0.0; n]);
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(8000 + seed);
        let s = shaped_signal(&dims, &mut rng, snr, snr(n - 1));
        let na: Vec<Volume64> = (0..2).map(|_| noise(&dims, &mut rng)).collect();
        let nb: Vec<Volume64> = (0..2).map(|_| noise(&dims, &mut rng)).collect();
        let half = |ns: &[Volume64], m: usize| {
            let mut v = s.clone();
            for k in 0..m {
                v = v.zip_with(&ns[k].scaled(1.0 / m as f64), |x, y| x + y).unwrap();
            }
            forward_transform(&v).unwrap()
        };
        for (m, acc) in [(1usize, &mut m1), (2, &mut m2)] {
            let c = fsc(&half(&na, m), &half(&nb, m), &bins).unwrap();
            let f = fisher_information(&c, 1.0, eps);
            for s in 0..n {
                acc[s] += f.values[s] / seeds as f64;
            }
        }
    }
    let (mut low, mut high) = (Vec::new(), Vec::new());
    for s in 1..n {
        let ratio = m2[s] / m1[s];
        if m1[s] < 0.5 {
            ensure((1.6..=2.4).contains(&ratio), || format!("shell {s}: FSI {:.3} ratio {ratio:.3}", m1[s]))?;
            low.push(ratio);
        } else if m1[s] > 3.0 {
            ensure(ratio < 1.5, || format!("shell {s}: FSI {:.3} ratio {ratio:.3}", m1[s]))?;
            high.push(ratio);
        }
    }
    ensure(!low.is_empty() && !high.is_empty(), || "a regime has no shells".into())?;
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(",");
    Ok(format!("low-info ratios [{}]; high-info ratios [{}]", fmt(&low), fmt(&high)))
}

fn gaussian_blob(x: &[usize], c: [f64; 3], sigma: f64) -> f64 {
    let r2: f64 = x.iter().zip(c).map(|(&i, c)| (i as f64 - c).powi(2)).sum();
    (-r2 / (2.0 * sigma * sigma)).exp()
}

fn c9_locality() -> Outcome {
    let dims = [48, 48, 48];
    let w = WindowSpec::new(16, 4, fscinfo::locality::DEFAULT_MASK_SIGMA_FRAC).unwrap();
    let p = InfoParams::from_fill(3, 1.0).unwrap();
    let (lo, hi) = fscinfo::info::DEFAULT_BAND;
    let left = [24.0, 24.0, 14.0];
    let right = [24.0, 24.0, 34.0];
    let signal = Volume64::from_fn(&dims, 1.0, |x| 4.0 * (gaussian_blob(x, left, 1.5) + gaussian_blob(x, right, 1.5)))
        .unwrap();
    let sigma_at = |x: &[usize]| if x[2] >= 24 { 2.0 } else { 1.0 };
    let seeds = 50;
    let mut correct = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let mut half = || {
            let n = noise(&dims, &mut rng);
            Volume64::from_fn(&dims, 1.0, |x| signal.get(x) + sigma_at(x) * n.get(x)).unwrap()
        };
        let (a, b) = (half(), half());
        let m = lid_map(&a, &b, &w, &p, lo, hi).map_err(|e| e.to_string())?;
        let (vl, _) = m.get(&[24, 24, 14]);
        let (vr, _) = m.get(&[24, 24, 34]);
        if vl > vr {
            correct += 1;
        }
    }
    ensure(correct * 100 >= seeds * 95, || format!("ordering correct in {correct}/{seeds}"))?;

    let dims = [32, 32, 32];
    let kappa = w.kappa(3);
    let mut lids = Vec::new();
    let mut shell_vals: Vec<Vec<f64>> = Vec::new();
    let mut band: Vec<usize> = Vec::new();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(9500 + seed);
        let a = noise(&dims, &mut rng);
        let b = noise(&dims, &mut rng);
        for cz in [8, 24] {
            for cy in [8, 24] {
                for cx in [8, 24] {
                    let c = [cz, cy, cx];
                    let curve = local_fsc(&a, &b, &c, &w).map_err(|e| e.to_string())?;
                    if band.is_empty() {
                        band = band_shells(&curve, lo, hi).map_err(|e| e.to_string())?;
                        shell_vals = vec![Vec::new(); band.len()];
                    }
                    let norm: f64 = band.iter().map(|&r| kappa * (r * r) as f64 * 2.0 / LN_2).sum();
                    let v = local_information(&a, &b, &c, &w, &p, lo, hi).map_err(|e| e.to_string())?;
                    lids.push(v.bits / norm);
                    for (k, &r) in band.iter().enumerate() {
                        shell_vals[k].push(curve.values[r]);
                    }
                }
            }
        }
    }
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let v_lid = var(&lids);
    let v_shells: Vec<f64> = shell_vals.iter().map(|s| var(s)).collect();
    let min_shell = v_shells.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(v_lid < min_shell, || format!("normalized LID variance {v_lid:.3e} vs shell minimum {min_shell:.3e}"))?;
    Ok(format!(
        "ordering {correct}/{seeds}; LID variance {v_lid:.2e} < min shell variance {min_shell:.2e} (shells {band:?})"
    ))
}

fn c10_tie() -> Outcome {
    let dims = [32, 32];
    let p = InfoParams::from_fill(2, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let signal = shaped_signal(&dims, &mut rng, |r| 4.0 / (1.0 + r as f64), 0.1);
    let mut series = |noise_scale: f64, len: usize| {
        let pairs = (0..len)
            .map(|_| {
                let a = signal.zip_with(&noise(&dims, &mut rng), |s, n| s + noise_scale * n).unwrap();
                let b = signal.zip_with(&noise(&dims, &mut rng), |s, n| s + noise_scale * n).unwrap();
                (a, b)
            })
            .collect();
        MeasurementSeries::new(pairs, 1.0).unwrap()
    };
    let s1 = series(1.0, 3);
    let s2 = series(1.5, 4);
    let f1 = accumulate_fri(&s1, &p).map_err(|e| e.to_string())?;
    let f2 = accumulate_fri(&s2, &p).map_err(|e| e.to_string())?;
    let ab = relative_tie(&f1, &f2).map_err(|e| e.to_string())?;
    let ba = relative_tie(&f2, &f1).map_err(|e| e.to_string())?;
    let mut defined = 0;
    for s in 0..ab.n_shells() {
        if ab.flags[s].contains(ShellFlags::UNDEFINED) || ba.flags[s].contains(ShellFlags::UNDEFINED) {
            continue;
        }
        defined += 1;
        let prod = ab.values[s] * ba.values[s];
        ensure((prod - 1.0).abs() <= 1e-12, || format!("shell {s}: product {prod}"))?;
    }
    ensure(defined > 0, || "no defined shells".into())?;
    let joined = accumulate_fri(&s1.concat(&s2).unwrap(), &p).map_err(|e| e.to_string())?;
    for s in 0..joined.n_shells() {
        ensure(joined.values[s] == f1.values[s] + f2.values[s], || format!("additivity broken at shell {s}"))?;
    }
    for c in [&f1, &f2, &joined] {
        ensure(c.values[0] == 0.0, || format!("FRI_r at the origin is {}", c.values[0]))?;
    }
    Ok(format!("reciprocity on {defined} shells; additivity exact; origin 0"))
}

fn c11_io() -> Outcome {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let v = noise(&[10, 12, 14], &mut rng).with_step(1.0 / 3.0).unwrap();
    let v = v.map(|x| x as f32 as f64);
    for endian in [Endian::Little, Endian::Big] {
        let bytes = encode_mrc(&v, endian, &[]).map_err(|e| e.to_string())?;
        let back = parse_mrc(&bytes).map_err(|e| e.to_string())?.volume;
        ensure(back.dims() == v.dims(), || "dims changed".into())?;
        ensure(back.step() == v.step(), || format!("step {:?} -> {:?}", v.step(), back.step()))?;
        ensure(
            back.data().iter().zip(v.data()).all(|(a, b)| a.to_bits() == b.to_bits()),
            || "samples changed".into(),
        )?;
    }
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let le = read_mrc(&fixtures.join("small_le.mrc")).map_err(|e| e.to_string())?;
    let be = read_mrc(&fixtures.join("small_be.mrc")).map_err(|e| e.to_string())?;
    ensure(le.volume == be.volume, || "byte-swapped fixture differs".into())?;
    ensure(le.volume.dims() == [4, 5, 6] && le.volume.step() == 1.5, || "fixture geometry".into())?;
    ensure(
        le.volume.data().iter().enumerate().all(|(i, &x)| x == i as f64 * 0.25 - 3.0),
        || "fixture samples".into(),
    )?;

    let exe = env!("CARGO_BIN_EXE_fscinfo");
    let csv = dir.path().join("model.csv");
    let svg = dir.path().join("model.svg");
    let run = |args: &[&std::ffi::OsStr]| -> Result<String, String> {
        let out = Command::new(exe).args(args).output().map_err(|e| e.to_string())?;
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        ensure(out.status.success(), || {
            format!("{:?} failed: {}", args, String::from_utf8_lossy(&out.stderr))
        })?;
        ensure(stdout.lines().any(|l| l.starts_with("params: ")), || "no params line".into())?;
        Ok(stdout)
    };
    run(&["model-experiment".as_ref(), "--seed".as_ref(), "3".as_ref(), "-o".as_ref(), csv.as_os_str()])?;
    run(&["plot".as_ref(), csv.as_os_str(), "-o".as_ref(), svg.as_os_str()])?;
    let text = std::fs::read_to_string(&svg).map_err(|e| e.to_string())?;
    let doc = roxmltree::Document::parse(&text).map_err(|e| format!("invalid SVG: {e}"))?;
    ensure(doc.root_element().tag_name().name() == "svg", || "root element is not svg".into())?;
    let lines = doc
        .descendants()
        .filter(|n| n.tag_name().name() == "polyline" && n.attribute("class") == Some("curve"))
        .count();
    ensure(lines >= 5, || format!("{lines} curve polylines"))?;
    let t = t0.elapsed();
    within_time(t, Duration::from_secs(120))?;
    Ok(format!("round trips bit-identical; fixtures agree; CLI pipeline {:.1}s", t.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("fisher transform values", c1_fisher),
        ("half-bit threshold", c2_threshold),
        ("fsc contract", c3_fsc_contract),
        ("geometry constants", c4_geometry),
        ("sampling claim rule", c5_sampling),
        ("parseval identity", c6_parseval),
        ("model experiment", c7_model),
        ("information doubling", c8_doubling),
        ("lid ordering and variance", c9_locality),
        ("tie algebra", c10_tie),
        ("i/o and cli", c11_io),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.2}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}

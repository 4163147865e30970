//! Acceptance criteria 1 to 8, run in order on one thread. Prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use edgemetric::data::{load_split, synth_generate, synth_sample, CorpusSpec, Split, SynthKind};
use edgemetric::detect::{Detector, FeatureConfig};
use edgemetric::eval::{evaluate_binary, match_boundaries, BinaryMap, Tolerance};
use edgemetric::features::{
    extract_feature_stack, half_disk_side, normalize_pair, BinConfig, CueStack, HalfCounts, ScaleConfig, Side, NUM_CUES,
};
use edgemetric::imgproc::DEFAULT_NOISE_VARIANCE;
use edgemetric::metric::{chi_square, kernel_distance, ChiSquareModel, DistanceKernel, FeatureEcho, MetricModel, ScaleParams};
use edgemetric::pipeline::{corpus_codebook, detect_all, evaluate_detector, prepare_images, PreparedImage};
use edgemetric::postproc::thinning_violations;
use edgemetric::training::{
    gradients, init_model, sample_loss, train, Objective, SampleOrigin, TrainConfig, TrainingSample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_hist(rng: &mut impl Rng, bins: &[usize]) -> Vec<f64> {
    let mut h = Vec::new();
    for &b in bins {
        let raw: Vec<f64> = (0..b).map(|_| rng.random::<f64>().powi(3)).collect();
        let s: f64 = raw.iter().sum();
        h.extend(raw.iter().map(|v| v / s));
    }
    h
}

fn gradient_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bins = BinConfig([5, 4, 3, 6]);
    let scales = ScaleConfig::new(vec![2, 4], 8).unwrap();
    let h = 1e-5;
    let (mut draws, mut coords, mut worst) = (0, 0usize, 0.0f64);
    for rep in 0..3 {
        for kernel in [DistanceKernel::Rbf, DistanceKernel::Linear] {
            for positive in [true, false] {
                for objective in [Objective::PerScale, Objective::Combined] {
                    let n = rng.random_range(3..=8);
                    let m = bins.total();
                    let mut model = MetricModel {
                        kernel,
                        sigma: rng.random_range(0.2..0.8),
                        n,
                        m,
                        scales: (0..2)
                            .map(|scale_index| ScaleParams {
                                scale_index,
                                alpha: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
                                beta: (0..n * m).map(|_| rng.random_range(-1.0..1.0)).collect(),
                            })
                            .collect(),
                        features: FeatureEcho::new(bins, &scales),
                        textons: None,
                    };
                    let sample = TrainingSample {
                        pairs: (0..2).map(|_| (random_hist(&mut rng, &bins.0), random_hist(&mut rng, &bins.0))).collect(),
                        positive,
                        origin: SampleOrigin {
                            image: format!("draw{rep}"),
                            x: 0,
                            y: 0,
                            orientation: 0,
                        },
                    };
                    let g = gradients(&model, &sample, objective).map_err(|e| e.to_string())?;
                    for s in 0..2 {
                        for k in 0..n + n * m {
                            fn get(md: &mut MetricModel, s: usize, k: usize) -> &mut f64 {
                                let n = md.n;
                                if k < n {
                                    &mut md.scales[s].alpha[k]
                                } else {
                                    &mut md.scales[s].beta[k - n]
                                }
                            }
                            let orig = *get(&mut model, s, k);
                            *get(&mut model, s, k) = orig + h;
                            let up = sample_loss(&model, &sample, objective).unwrap();
                            *get(&mut model, s, k) = orig - h;
                            let down = sample_loss(&model, &sample, objective).unwrap();
                            *get(&mut model, s, k) = orig;
                            let fd = (up - down) / (2.0 * h);
                            let an = if k < n { g.alpha[s][k] } else { g.beta[s][k - n] };
                            // gradients below 1e-6 are compared absolutely
                            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                            worst = worst.max(rel);
                            coords += 1;
                        }
                    }
                    draws += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst < 1e-4 && draws >= 20 && secs < 10.0,
        format!("{draws} draws, {coords} coordinates, worst relative error {worst:.2e}, {secs:.1}s"),
    )
}

fn metric_properties() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let bins = [25usize];
    let sigma = 0.2;
    let mut failures = Vec::new();
    let mut by_q: Vec<(f64, f64)> = Vec::new();
    for i in 0..1000 {
        let u = random_hist(&mut rng, &bins);
        let v = random_hist(&mut rng, &bins);
        let (a, b) = (chi_square(&u, &v).unwrap(), chi_square(&v, &u).unwrap());
        let z = chi_square(&u, &u).unwrap();
        if a != b || !(0.0..=1.0).contains(&a) || z.abs() > 1e-12 || a <= 1e-12 {
            failures.push(format!("chi2 pair {i}: {a} {b} self {z}"));
        }
        let (d1, d2) = (
            kernel_distance(&u, &v, DistanceKernel::Rbf, sigma).unwrap(),
            kernel_distance(&v, &u, DistanceKernel::Rbf, sigma).unwrap(),
        );
        let d0 = kernel_distance(&u, &u, DistanceKernel::Rbf, sigma).unwrap();
        if d1 != d2 || !(0.0..1.0).contains(&d1) || d0 != 0.0 {
            failures.push(format!("rbf pair {i}: {d1} {d2} self {d0}"));
        }
        let q: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        by_q.push((q, d1));
        // along the segment from u to v the distance grows strictly
        let mut prev = 0.0;
        for t in 1..=10 {
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + (b - a) * t as f64 / 10.0).collect();
            let d = kernel_distance(&u, &w, DistanceKernel::Rbf, sigma).unwrap();
            if d <= prev {
                failures.push(format!("rbf pair {i}: not increasing at step {t}"));
                break;
            }
            prev = d;
        }
    }
    by_q.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mono = by_q.windows(2).all(|w| w[0].0 == w[1].0 || w[0].1 < w[1].1);
    if !mono {
        failures.push("rbf not strictly monotone in squared distance".into());
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        failures.is_empty() && secs < 5.0,
        format!("1000 pairs, {} failures{}, {secs:.2}s", failures.len(), failures.first().map_or(String::new(), |f| format!(" (first: {f})"))),
    )
}

fn pooling_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let bins = BinConfig::default();
    let cfg = ScaleConfig::default();
    let (w, h) = (32usize, 32usize);
    let labels: Vec<[u16; NUM_CUES]> = (0..w * h)
        .map(|_| std::array::from_fn(|c| rng.random_range(0..bins.0[c] as u16)))
        .collect();
    let cues = CueStack::new(w, h, bins, labels).unwrap();
    let stack = extract_feature_stack(&cues, &cfg).map_err(|e| e.to_string())?;
    let offsets = bins.offsets();
    let (mut checked, mut count_mismatch, mut worst) = (0usize, 0usize, 0.0f64);
    for (s, &r) in cfg.radii.iter().enumerate() {
        for o in 0..cfg.n_orient {
            let theta = cfg.orientation(o);
            for y in 0..h {
                for x in 0..w {
                    let mut bu = HalfCounts { counts: vec![0; bins.total()], n: 0 };
                    let mut bv = bu.clone();
                    let ri = r as i32;
                    for dy in -ri..=ri {
                        for dx in -ri..=ri {
                            let (px, py) = (x as i32 + dx, y as i32 + dy);
                            if px < 0 || py < 0 || px >= w as i32 || py >= h as i32 {
                                continue;
                            }
                            let Some(side) = half_disk_side(dx, dy, r, theta) else { continue };
                            let half = if side == Side::U { &mut bu } else { &mut bv };
                            half.n += 1;
                            for (c, &l) in cues.labels[py as usize * w + px as usize].iter().enumerate() {
                                half.counts[offsets[c] + l as usize] += 1;
                            }
                        }
                    }
                    let (su, sv) = stack.counts(x, y, o, s);
                    if su != bu || sv != bv {
                        count_mismatch += 1;
                    }
                    let (nu, nv) = normalize_pair(&bu, &bv);
                    let p = stack.pair(x, y, o, s).map_err(|e| e.to_string())?;
                    for (a, b) in nu.iter().chain(&nv).zip(p.u.iter().chain(&p.v)) {
                        worst = worst.max((a - b).abs());
                    }
                    checked += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        count_mismatch == 0 && worst <= 1e-12 && secs < 60.0,
        format!("{checked} half-disk pairs, {count_mismatch} count mismatches, max normalized difference {worst:.1e}, {secs:.1}s"),
    )
}

/// Largest one-to-one matching by exhaustive search over subsets of matched
/// ground-truth pixels.
fn exhaustive_max_matching(cand: &[(i32, i32)], gt: &[(i32, i32)], tol: f64) -> usize {
    let n_gt = gt.len();
    assert!(n_gt <= 16);
    let near: Vec<Vec<usize>> = cand
        .iter()
        .map(|&(x, y)| {
            (0..n_gt)
                .filter(|&j| {
                    let (dx, dy) = ((gt[j].0 - x) as f64, (gt[j].1 - y) as f64);
                    dx * dx + dy * dy <= tol * tol
                })
                .collect()
        })
        .collect();
    // best[mask] = largest matching of the candidates seen so far using exactly the gt set `mask`
    let mut best = vec![None::<usize>; 1 << n_gt];
    best[0] = Some(0);
    for opts in &near {
        let prev = best.clone();
        for (mask, v) in prev.iter().enumerate() {
            let Some(v) = *v else { continue };
            for &j in opts {
                if mask & (1 << j) == 0 {
                    let nm = mask | (1 << j);
                    best[nm] = Some(best[nm].map_or(v + 1, |b: usize| b.max(v + 1)));
                }
            }
        }
    }
    best.iter().flatten().copied().max().unwrap_or(0)
}

fn matching_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut bad = Vec::new();
    for case in 0..200 {
        let (w, h) = (rng.random_range(2..=8usize), rng.random_range(2..=8usize));
        let pick = |rng: &mut ChaCha8Rng| -> Vec<(i32, i32)> {
            let k = rng.random_range(0..=12.min(w * h));
            rand::seq::index::sample(rng, w * h, k)
                .into_iter()
                .map(|i| ((i % w) as i32, (i / w) as i32))
                .collect()
        };
        let (c, g) = (pick(&mut rng), pick(&mut rng));
        let to_map = |pts: &[(i32, i32)]| {
            let mut m = BinaryMap::empty(w, h);
            for &(x, y) in pts {
                m.data[y as usize * w + x as usize] = true;
            }
            m
        };
        let got = match_boundaries(&to_map(&c), &to_map(&g), 2.0).map_err(|e| e.to_string())?.count;
        let want = exhaustive_max_matching(&c, &g, 2.0);
        if got != want {
            bad.push(format!("case {case}: {got} vs {want}"));
        }
    }
    // two annotators: A is column 2; B follows column 3 on the top half and
    // column 6 below. The detector reproduces A exactly (tolerance 1 px):
    // all 8 detections match A, B gets 4 matches, so P = 8/8, R = (8+4)/16.
    let col = |pts: &[(usize, usize)]| {
        let mut m = BinaryMap::empty(8, 8);
        for &(x, y) in pts {
            m.data[y * 8 + x] = true;
        }
        m
    };
    let a = col(&(0..8).map(|y| (2, y)).collect::<Vec<_>>());
    let b = col(&(0..8).map(|y| (if y < 4 { 3 } else { 6 }, y)).collect::<Vec<_>>());
    let counts = evaluate_binary(&a, &[a.clone(), b], 1.0).map_err(|e| e.to_string())?;
    let (p, r, f) = (counts.precision(), counts.recall(), counts.f_measure());
    let hand = (p - 1.0).abs() < 1e-12 && (r - 0.75).abs() < 1e-12 && (f - 6.0 / 7.0).abs() < 1e-12;
    let secs = t0.elapsed().as_secs_f64();
    check(
        bad.is_empty() && hand && secs < 30.0,
        format!(
            "200 random pairs, {} below the exhaustive maximum; two-annotator P {p:.4} R {r:.4} F {f:.4} (expected 1, 0.75, 0.8571); {secs:.2}s",
            bad.len()
        ),
    )
}

/// Everything criteria 5, 6 and 8 share.
struct Synthetic {
    test: Vec<edgemetric::data::LoadedItem>,
    codebook: edgemetric::imgproc::TextonCodebook,
    test_clean: Vec<PreparedImage>,
    chi: Detector,
    lbm: Detector,
    chi_ods: f64,
    lbm_ods: f64,
    loss_drop: Option<f64>,
    best_epoch: usize,
    secs: f64,
}

fn synthetic_run() -> edgemetric::Result<Synthetic> {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    let spec = CorpusSpec::default();
    let items = synth_generate(&spec, spec.seed, dir.path())?;
    let features = FeatureConfig::default();
    let train_items = load_split(&items, Split::Train)?;
    let val_items = load_split(&items, Split::Val)?;
    let test = load_split(&items, Split::Test)?;
    let codebook = corpus_codebook(&train_items, &features)?;
    let prep = |it| prepare_images(it, Some(&codebook), &features, 0.0, 0);
    let (tr, va, te) = (prep(&train_items)?, prep(&val_items)?, prep(&test)?);

    let chi = Detector::chi_square(features.clone(), ChiSquareModel::equal(features.scales.n_scales()), Some(codebook.clone()));
    let chi_ods = evaluate_detector(&chi, &te, Tolerance::default())?.ods;

    let cfg = TrainConfig::default();
    assert_eq!((cfg.n, cfg.sigma, cfg.learning_rate, cfg.kernel), (16, 0.2, 1e-4, DistanceKernel::Rbf));
    let init = init_model(&cfg, FeatureEcho::new(features.bins, &features.scales), Some(codebook.clone()))?;
    let out = train(&tr, &va, init, &cfg)?;
    let lbm = Detector::lbm(out.model, 0);
    let lbm_ods = evaluate_detector(&lbm, &te, Tolerance::default())?.ods;
    Ok(Synthetic {
        test,
        codebook,
        test_clean: te,
        chi,
        lbm,
        chi_ods,
        lbm_ods,
        loss_drop: out.log.loss_decrease(100),
        best_epoch: out.log.best_epoch,
        secs: t0.elapsed().as_secs_f64(),
    })
}

fn end_to_end(s: &Synthetic) -> Outcome {
    let drop = s.loss_drop.unwrap_or(f64::NAN);
    check(
        drop >= 0.2 && s.lbm_ods >= s.chi_ods + 0.02 && s.secs < 600.0,
        format!(
            "smoothed loss drop {:.1}% (best epoch {}), test ODS lbm-rbf {:.4} vs chi2-equal {:.4} (margin {:+.4}), {:.0}s",
            drop * 100.0,
            s.best_epoch,
            s.lbm_ods,
            s.chi_ods,
            s.lbm_ods - s.chi_ods,
            s.secs
        ),
    )
}

fn thinning(s: &Synthetic) -> Outcome {
    let mut maps = 0;
    let mut violations = 0;
    for det in [&s.chi, &s.lbm] {
        for m in detect_all(det, &s.test_clean).map_err(|e| e.to_string())? {
            violations += thinning_violations(&m);
            maps += 1;
        }
    }
    check(violations == 0, format!("{maps} thinned maps, {violations} violations"))
}

fn speedup(s: &Synthetic) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let img = synth_sample(SynthKind::Mixed, 481, 321, 0.3, 0.0, &mut rng).map_err(|e| e.to_string())?.image;
    let cues = s.chi.cues(&img).map_err(|e| e.to_string())?;
    let median = |d: &Detector| -> Result<Duration, String> {
        let mut t = Vec::new();
        for _ in 0..5 {
            let t0 = Instant::now();
            d.responses(&cues).map_err(|e| e.to_string())?;
            t.push(t0.elapsed());
        }
        t.sort();
        Ok(t[2])
    };
    let (c, l) = (median(&s.chi)?, median(&s.lbm)?);
    let ratio = c.as_secs_f64() / l.as_secs_f64();
    check(
        ratio > 1.0,
        format!("481x321 distance stage median of 5: chi2 {c:.2?}, lbm {l:.2?}, ratio {ratio:.2} (target 2)"),
    )
}

fn noise(s: &Synthetic) -> Outcome {
    let features = FeatureConfig::default();
    let noisy = prepare_images(&s.test, Some(&s.codebook), &features, DEFAULT_NOISE_VARIANCE, 99).map_err(|e| e.to_string())?;
    let chi_noisy = evaluate_detector(&s.chi, &noisy, Tolerance::default()).map_err(|e| e.to_string())?.ods;
    let lbm_noisy = evaluate_detector(&s.lbm, &noisy, Tolerance::default()).map_err(|e| e.to_string())?.ods;
    check(
        chi_noisy < s.chi_ods && lbm_noisy < s.lbm_ods && lbm_noisy >= chi_noisy,
        format!(
            "ODS clean/noisy: chi2-equal {:.4}/{chi_noisy:.4}, lbm-rbf {:.4}/{lbm_noisy:.4}",
            s.chi_ods, s.lbm_ods
        ),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let results: Vec<(usize, &str, Outcome)> = pool.install(|| {
        let mut r: Vec<(usize, &str, Outcome)> = vec![
            (1, "gradient oracle", guarded(gradient_oracle)),
            (2, "metric properties", guarded(metric_properties)),
            (3, "pooling oracle", guarded(pooling_oracle)),
            (4, "matching and PR oracle", guarded(matching_oracle)),
        ];
        match catch_unwind(synthetic_run) {
            Ok(Ok(s)) => {
                r.push((5, "synthetic end-to-end", guarded(|| end_to_end(&s))));
                r.push((6, "thinning invariant", guarded(|| thinning(&s))));
                r.push((7, "distance stage speed-up", guarded(|| speedup(&s))));
                r.push((8, "noise robustness", guarded(|| noise(&s))));
            }
            other => {
                let why = match other {
                    Ok(Err(e)) => e.to_string(),
                    _ => "panicked".into(),
                };
                for (i, name) in [(5, "synthetic end-to-end"), (6, "thinning invariant"), (7, "distance stage speed-up"), (8, "noise robustness")] {
                    r.push((i, name, Err(format!("synthetic run failed: {why}"))));
                }
            }
        }
        r
    });
    let mut failed = 0;
    for (i, name, out) in &results {
        match out {
            Ok(d) => println!("criterion {i} ({name}): PASS: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {i} ({name}): FAIL: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}

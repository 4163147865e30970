//! The `edgemetric` command line: `detect`, `train`, `eval`, `bench` and `synth`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{load_dataset, load_split, synth_generate, synth_sample, CorpusSpec, LoadedItem, Split, SynthKind};
use crate::detect::{Detector, FeatureConfig, MetricMode, ScaleMode, StageTimes};
use crate::error::Error;
use crate::eval::{default_thresholds, pr_curve, summarize, EvalImage, EvalReport, Tolerance, DEFAULT_THRESHOLDS};
use crate::imgproc::{add_gaussian_noise, load_image, TextonCodebook, DEFAULT_TEXTONS};
use crate::io_util::write_atomic;
use crate::metric::{ChiSquareModel, FeatureEcho, MetricModel};
use crate::pipeline::{corpus_codebook, detect_all, evaluate_detector, evaluate_maps, prepare_images, PreparedImage};
use crate::training::{
    fit_chi_square_weights, init_model, load_any, save_chi_square, save_model, train, ChiSquareBundle, Objective,
    SavedModel, TrainConfig,
};

#[derive(Parser, Debug)]
#[command(name = "edgemetric", version, about = "Boundary detection with χ² or a learned histogram metric")]
pub struct Cli {
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "EDGEMETRIC_THREADS", default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write raw and thinned 16-bit boundary maps of one image.
    Detect(DetectArgs),
    /// Train a learned metric (or fit χ² weights) on a dataset.
    Train(TrainArgs),
    /// Precision/recall evaluation on a dataset split.
    Eval(EvalArgs),
    /// Time the pipeline stages of both metrics.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct MetricArgs {
    /// chi2-learned, chi2-equal, lbm-rbf or lbm-linear.
    #[arg(long, default_value = "chi2-equal")]
    pub mode: String,
    /// Model file; may be repeated when several modes are evaluated.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    /// multi, single or single:<index>.
    #[arg(long, default_value = "multi")]
    pub scale: String,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    pub image: PathBuf,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Gaussian noise variance added to the image first.
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset root with train and val splits.
    pub dataset: PathBuf,
    /// lbm-rbf, lbm-linear or chi2-learned.
    #[arg(long, default_value = "lbm-rbf")]
    pub mode: String,
    #[arg(long, default_value = "multi")]
    pub scale: String,
    /// Model file to write.
    #[arg(long, default_value = "model.toml")]
    pub out: PathBuf,
    /// Training log CSV; defaults to the model path with a `.csv` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 40)]
    pub max_epochs: usize,
    /// per-scale or combined.
    #[arg(long, default_value = "per-scale")]
    pub objective: String,
    /// Fraction of the image diagonal, or pixels with a `px` suffix.
    #[arg(long, default_value = "0.0075")]
    pub tolerance: String,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub dataset: PathBuf,
    /// Modes may be comma separated to compare several in one run.
    #[command(flatten)]
    pub metric: MetricArgs,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Directory of precomputed maps `<id>.png` to score instead of detecting.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Threshold count, or a comma separated list of thresholds.
    #[arg(long, default_value_t = DEFAULT_THRESHOLDS.to_string())]
    pub thresholds: String,
    #[arg(long, default_value = "0.0075")]
    pub tolerance: String,
    /// Also evaluate with Gaussian noise of this variance added to every image.
    #[arg(long)]
    pub noise_var: Option<f64>,
    /// Directory for `<prefix>_pr.csv` and `<prefix>_summary.csv`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Image to time; a 481x321 synthetic image when omitted.
    pub image: Option<PathBuf>,
    /// Learned model; a random one of the default shape when omitted.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    /// CSV report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Corpus TOML; defaults otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma separated kinds, overriding the config.
    #[arg(long)]
    pub kinds: Option<String>,
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long, default_value = "synthetic")]
    pub out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Parameter errors in user input are usage errors.
fn as_usage(e: Error) -> CliError {
    match e {
        Error::InvalidParameter(m) | Error::OutOfRange(m) => CliError::Usage(m),
        other => CliError::Run(other),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} threads: {e}", cli.threads);
            return 1;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("usage error: {m}");
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a, cli.seed),
        Command::Train(a) => cmd_train(a, cli.seed),
        Command::Eval(a) => cmd_eval(a, cli.seed),
        Command::Bench(a) => cmd_bench(a, cli.seed),
        Command::Synth(a) => cmd_synth(a, cli.seed),
    }
}

fn parse_tolerance(s: &str) -> CliResult<Tolerance> {
    let t = match s.strip_suffix("px") {
        Some(p) => p.trim().parse().ok().map(Tolerance::Pixels),
        None => s.parse().ok().map(Tolerance::Relative),
    };
    match t {
        Some(Tolerance::Pixels(v) | Tolerance::Relative(v)) if v > 0.0 && v.is_finite() => Ok(t.expect("matched")),
        _ => usage(format!("--tolerance '{s}' must be a positive fraction or '<n>px'")),
    }
}

fn parse_thresholds(s: &str) -> CliResult<Vec<f64>> {
    if let Ok(n) = s.parse::<usize>() {
        if n == 0 {
            return usage("--thresholds needs at least one threshold");
        }
        return Ok(default_thresholds(n));
    }
    let mut v = Vec::new();
    for part in s.split(',') {
        match part.trim().parse::<f64>() {
            Ok(t) if (0.0..=1.0).contains(&t) => v.push(t),
            _ => return usage(format!("--thresholds: '{part}' is not a threshold in [0, 1]")),
        }
    }
    Ok(v)
}

fn parse_noise(v: Option<f64>) -> CliResult<f64> {
    match v {
        None => Ok(0.0),
        Some(x) if x >= 0.0 && x.is_finite() => Ok(x),
        Some(x) => usage(format!("--noise-var {x} must be finite and >= 0")),
    }
}

fn load_models(paths: &[PathBuf]) -> CliResult<Vec<SavedModel>> {
    paths
        .iter()
        .map(|p| {
            if !p.is_file() {
                return usage(format!("--model: no such file {}", p.display()));
            }
            Ok(load_any(p)?)
        })
        .collect()
}

fn lbm_features(model: &MetricModel, seed: u64) -> FeatureConfig {
    FeatureConfig {
        bins: model.features.bins,
        scales: model.features.scale_config(),
        n_textons: model.textons.as_ref().map_or(DEFAULT_TEXTONS, TextonCodebook::k),
        seed,
    }
}

/// Detector for `mode`, taking the model it needs from `models`. χ²-equal
/// uses `codebook` (per-image textons when `None`).
fn build_detector(
    mode: MetricMode,
    models: &[SavedModel],
    scale: ScaleMode,
    seed: u64,
    codebook: Option<TextonCodebook>,
) -> CliResult<Detector> {
    let det = match mode {
        MetricMode::Chi2Equal => {
            let features = FeatureConfig {
                seed,
                ..FeatureConfig::default()
            };
            let n = features.scales.n_scales();
            Detector::chi_square(features, ChiSquareModel::equal(n), codebook)
        }
        MetricMode::Chi2Learned => {
            let Some(b) = models.iter().find_map(|m| match m {
                SavedModel::ChiSquare(b) => Some(b),
                SavedModel::Lbm(_) => None,
            }) else {
                return usage("--mode chi2-learned requires --model <file> with fitted χ² weights");
            };
            let features = FeatureConfig {
                bins: b.features.bins,
                scales: b.features.scale_config(),
                n_textons: b.textons.as_ref().map_or(DEFAULT_TEXTONS, TextonCodebook::k),
                seed,
            };
            Detector::chi_square(features, b.model.clone(), b.textons.clone())
        }
        MetricMode::LbmRbf | MetricMode::LbmLinear => {
            let kernel = mode.kernel().expect("learned mode");
            let lbm: Vec<&MetricModel> = models
                .iter()
                .filter_map(|m| match m {
                    SavedModel::Lbm(l) => Some(l),
                    SavedModel::ChiSquare(_) => None,
                })
                .collect();
            let Some(model) = lbm.iter().find(|m| m.kernel == kernel) else {
                if lbm.is_empty() {
                    return usage(format!("--mode {} requires --model <file>", mode.name()));
                }
                return usage(format!("--model: no {} model among the given files", kernel.name()));
            };
            let mut d = Detector::lbm((*model).clone(), seed);
            d.features = lbm_features(model, seed);
            d
        }
    };
    det.with_scale_mode(scale).map_err(as_usage)
}

fn parse_mode(s: &str) -> CliResult<MetricMode> {
    MetricMode::from_str(s.trim()).map_err(as_usage)
}

fn parse_scale(s: &str) -> CliResult<ScaleMode> {
    ScaleMode::from_str(s).map_err(as_usage)
}

fn cmd_detect(a: &DetectArgs, seed: u64) -> CliResult<()> {
    let mode = parse_mode(&a.metric.mode)?;
    let scale = parse_scale(&a.metric.scale)?;
    let noise = parse_noise(a.noise_var)?;
    let models = load_models(&a.metric.model)?;
    let det = build_detector(mode, &models, scale, seed, None)?;
    let mut img = load_image(&a.image)?;
    if noise > 0.0 {
        img = add_gaussian_noise(&img, noise, seed)?;
    }
    let d = det.detect(&img)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let stem = a.image.file_stem().map_or("image".into(), |s| s.to_string_lossy().into_owned());
    let raw = a.out.join(format!("{stem}_raw.png"));
    let thin = a.out.join(format!("{stem}_thin.png"));
    d.raw.save_png(&raw)?;
    d.thin.save_png(&thin)?;
    println!(
        "{} ({}x{}, {}): max strength {:.4}",
        a.image.display(),
        img.width(),
        img.height(),
        mode.name(),
        d.thin.max_strength()
    );
    println!("wrote {} and {}", raw.display(), thin.display());
    Ok(())
}

fn load_named_split(items: &[crate::data::DatasetItem], split: Split, root: &Path) -> CliResult<Vec<LoadedItem>> {
    let loaded = load_split(items, split)?;
    if loaded.is_empty() {
        return Err(Error::Dataset(format!("no {} images under {}", split.name(), root.display())).into());
    }
    Ok(loaded)
}

fn cmd_train(a: &TrainArgs, seed: u64) -> CliResult<()> {
    let mode = parse_mode(&a.mode)?;
    let scale = parse_scale(&a.scale)?;
    let tolerance = parse_tolerance(&a.tolerance)?;
    let objective = match a.objective.as_str() {
        "per-scale" => Objective::PerScale,
        "combined" => Objective::Combined,
        o => return usage(format!("--objective '{o}' (expected per-scale or combined)")),
    };
    if mode == MetricMode::Chi2Equal {
        return usage("--mode chi2-equal has nothing to train");
    }
    let items = load_dataset(&a.dataset)?;
    let train_items = load_named_split(&items, Split::Train, &a.dataset)?;
    let val_items = load_named_split(&items, Split::Val, &a.dataset)?;
    let features = FeatureConfig {
        seed,
        ..FeatureConfig::default()
    };
    let codebook = corpus_codebook(&train_items, &features)?;
    let tr = prepare_images(&train_items, Some(&codebook), &features, 0.0, 0)?;
    let va = prepare_images(&val_items, Some(&codebook), &features, 0.0, 0)?;

    if mode == MetricMode::Chi2Learned {
        let mut weights = fit_chi_square_weights(&tr, &features.scales, tolerance, seed)?;
        let mut det = Detector::chi_square(features.clone(), weights.clone(), Some(codebook.clone()));
        if let ScaleMode::Single(_) = scale {
            det = det.with_scale_mode(scale).map_err(as_usage)?;
            weights = match &det.model {
                crate::detect::DistanceModel::ChiSquare(m) => m.clone(),
                crate::detect::DistanceModel::Lbm(_) => unreachable!("χ² detector"),
            };
        }
        let f = evaluate_detector(&det, &va, tolerance)?.ods;
        let bundle = ChiSquareBundle {
            model: weights,
            features: FeatureEcho::new(features.bins, &det.features.scales),
            textons: Some(codebook),
        };
        save_chi_square(&bundle, &a.out)?;
        println!("validation F {f:.4}");
        println!("wrote {}", a.out.display());
        return Ok(());
    }

    let cfg = TrainConfig {
        learning_rate: a.lr,
        n: a.n,
        sigma: a.sigma,
        kernel: mode.kernel().expect("learned mode"),
        patience: a.patience,
        max_epochs: a.max_epochs,
        objective,
        tolerance,
        seed,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(as_usage)?;
    let mut init = init_model(&cfg, FeatureEcho::new(features.bins, &features.scales), Some(codebook))?;
    if let ScaleMode::Single(s) = scale {
        if s >= init.scales.len() {
            return usage(format!("--scale single:{s} with {} scales", init.scales.len()));
        }
        init.scales.retain(|p| p.scale_index == s);
    }
    let out = train(&tr, &va, init, &cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    for e in &out.log.epochs {
        match e.mean_loss {
            Some(l) => println!("epoch {:>3}  loss {l:.4}  val F {:.4}  samples {}", e.epoch, e.val_f, e.samples),
            None => println!("epoch {:>3}  val F {:.4}", e.epoch, e.val_f),
        }
    }
    save_model(&out.model, &a.out)?;
    let log = a.log.clone().unwrap_or_else(|| a.out.with_extension("csv"));
    write_atomic(&log, out.log.to_csv().as_bytes())?;
    println!("best validation F {:.4} (epoch {})", out.log.best_f(), out.log.best_epoch);
    println!("wrote {} and {}", a.out.display(), log.display());
    Ok(())
}

/// Strength map stored as a gray PNG, scaled to `[0, 1]`.
fn load_strength(path: &Path) -> CliResult<(Vec<f64>, usize, usize)> {
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let g = img.into_luma16();
    let (w, h) = (g.width() as usize, g.height() as usize);
    Ok((g.into_raw().into_iter().map(|v| f64::from(v) / 65535.0).collect(), w, h))
}

fn eval_detections(dir: &Path, items: &[LoadedItem], thresholds: &[f64], tolerance: Tolerance) -> CliResult<EvalReport> {
    let maps: Vec<(Vec<f64>, usize, usize)> = items
        .iter()
        .map(|it| load_strength(&dir.join(format!("{}.png", it.id))))
        .collect::<CliResult<_>>()?;
    let eval: Vec<EvalImage<'_>> = maps
        .iter()
        .zip(items)
        .map(|((s, w, h), it)| EvalImage {
            strength: s,
            width: *w,
            height: *h,
            annotations: &it.annotations,
        })
        .collect();
    Ok(summarize(pr_curve(&eval, thresholds, tolerance)?)?)
}

fn cmd_eval(a: &EvalArgs, seed: u64) -> CliResult<()> {
    let split = Split::from_str(&a.split).map_err(as_usage)?;
    let thresholds = parse_thresholds(&a.thresholds)?;
    let tolerance = parse_tolerance(&a.tolerance)?;
    let noise = parse_noise(a.noise_var)?;
    let scale = parse_scale(&a.metric.scale)?;
    let modes: Vec<MetricMode> = a.metric.mode.split(',').map(parse_mode).collect::<CliResult<_>>()?;
    let models = load_models(&a.metric.model)?;
    let items = load_dataset(&a.dataset)?;
    let loaded = load_named_split(&items, split, &a.dataset)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;

    if let Some(dir) = &a.detections {
        let r = eval_detections(dir, &loaded, &thresholds, tolerance)?;
        r.write(&a.out, "detections")?;
        println!("{}", r.summary_text("detections"));
        return Ok(());
    }

    let detectors = modes
        .iter()
        .map(|&m| build_detector(m, &models, scale, seed, None))
        .collect::<CliResult<Vec<_>>>()?;
    let needs_corpus_codebook = detectors.iter().any(|d| d.codebook.is_none());
    let corpus = if needs_corpus_codebook {
        Some(corpus_codebook(&loaded, &FeatureConfig { seed, ..FeatureConfig::default() })?)
    } else {
        None
    };

    let mut reports: Vec<(MetricMode, EvalReport, Option<EvalReport>)> = Vec::new();
    for (mode, mut det) in modes.iter().copied().zip(detectors) {
        if det.codebook.is_none() {
            det.codebook = corpus.clone();
        }
        let score = |noise: f64| -> CliResult<EvalReport> {
            let prepared: Vec<PreparedImage> = prepare_images(&loaded, det.codebook.as_ref(), &det.features, noise, seed)?;
            Ok(evaluate_maps(&detect_all(&det, &prepared)?, &prepared, tolerance, &thresholds)?)
        };
        let clean = score(0.0)?;
        let prefix = match scale {
            ScaleMode::Multi => mode.name().to_string(),
            ScaleMode::Single(s) => format!("{}_single{s}", mode.name()),
        };
        clean.write(&a.out, &prefix)?;
        println!("{}", clean.summary_text(&prefix));
        let noisy = if noise > 0.0 {
            let r = score(noise)?;
            let p = format!("{prefix}_noisy");
            r.write(&a.out, &p)?;
            println!("{}", r.summary_text(&format!("{prefix} (noise variance {noise})")));
            println!("{prefix}: ODS change under noise {:+.4}", r.ods - clean.ods);
            Some(r)
        } else {
            None
        };
        reports.push((mode, clean, noisy));
    }
    if let Some((base, rest)) = reports.split_first() {
        let mut s = String::new();
        for (m, r, n) in rest {
            let _ = write!(s, "{} vs {}: ODS {:+.4}  OIS {:+.4}  AP {:+.4}", m.name(), base.0.name(), r.ods - base.1.ods, r.ois - base.1.ois, r.ap - base.1.ap);
            if let (Some(n), Some(bn)) = (n, &base.2) {
                let _ = write!(s, "  noisy ODS {:+.4}", n.ods - bn.ods);
            }
            s.push('\n');
        }
        print!("{s}");
    }
    Ok(())
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn cmd_bench(a: &BenchArgs, seed: u64) -> CliResult<()> {
    if a.runs < 5 {
        return usage(format!("--runs {} (at least 5 are needed for a median)", a.runs));
    }
    let img = match &a.image {
        Some(p) => load_image(p)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            synth_sample(SynthKind::Mixed, 481, 321, 0.3, 0.0, &mut rng)?.image
        }
    };
    let features = FeatureConfig {
        seed,
        ..FeatureConfig::default()
    };
    let model = match &a.model {
        Some(p) => match load_models(std::slice::from_ref(p))?.pop() {
            Some(SavedModel::Lbm(m)) => m,
            _ => return usage("--model must be a learned-metric model file"),
        },
        None => init_model(
            &TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            FeatureEcho::new(features.bins, &features.scales),
            None,
        )?,
    };
    let chi = Detector::chi_square(features.clone(), ChiSquareModel::equal(features.scales.n_scales()), None);
    let mut lbm = Detector::lbm(model.clone(), seed);
    lbm.features = lbm_features(&model, seed);

    let time = |d: &Detector| -> CliResult<[Duration; 3]> {
        let mut runs: Vec<StageTimes> = Vec::with_capacity(a.runs);
        for _ in 0..a.runs {
            runs.push(d.detect_timed(&img)?.1);
        }
        Ok([
            median(runs.iter().map(|t| t.features).collect()),
            median(runs.iter().map(|t| t.distance).collect()),
            median(runs.iter().map(|t| t.postproc).collect()),
        ])
    };
    let c = time(&chi)?;
    let l = time(&lbm)?;
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let mut csv = String::from("stage,chi2_ms,lbm_ms\n");
    for (name, i) in [("features", 0), ("distance", 1), ("postproc", 2)] {
        let _ = writeln!(csv, "{name},{:.3},{:.3}", ms(c[i]), ms(l[i]));
    }
    let ratio = c[1].as_secs_f64() / l[1].as_secs_f64().max(1e-12);
    println!(
        "{}x{} image, median of {} runs, {} threads",
        img.width(),
        img.height(),
        a.runs,
        rayon::current_num_threads()
    );
    print!("{csv}");
    println!("distance stage speed-up (chi2 / lbm): {ratio:.2}");
    if let Some(p) = &a.out {
        let _ = writeln!(csv, "distance_speedup,{ratio:.4},");
        write_atomic(p, csv.as_bytes())?;
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs, seed: u64) -> CliResult<()> {
    let mut spec = match &a.config {
        Some(p) => CorpusSpec::load(p).map_err(as_usage)?,
        None => CorpusSpec::default(),
    };
    if let Some(k) = &a.kinds {
        spec.kinds = k
            .split(',')
            .map(|s| SynthKind::from_str(s.trim()))
            .collect::<Result<_, _>>()
            .map_err(as_usage)?;
    }
    if let Some(n) = a.noise_var {
        spec.noise = n;
    }
    spec.validate().map_err(as_usage)?;
    let items = synth_generate(&spec, seed, &a.out)?;
    println!("wrote {} images to {}", items.len(), a.out.display());
    Ok(())
}

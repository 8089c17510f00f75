//! Command-line interface.
//!
//! Subcommands: `obfuscate` (per-epoch dataset obfuscation), `score`
//! (pairwise metric scoring), `roc` (curves and thresholds from recognition
//! records), `attack` (de-obfuscation simulation), and `survey-gen`
//! (survey-sample generation).
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 gate failure.
//!
//! A flat `key = value` config file (keys named like the long flags) can
//! supply any option; explicit flags win.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::attacks::{
    evaluate_attack, write_report, AttackCase, AttackKind, DEFAULT_DENOISE_KSIZE,
    DEFAULT_DENOISE_SIGMA, DEFAULT_WIENER_WINDOW,
};
use crate::error::{Error, Result};
use crate::fmt_sig9;
use crate::imgcore::{load_image_with, resize_bilinear, sigma_for_ksize, AlphaPolicy, Image};
use crate::metrics::{frechet_distance, score, FeatureSet, MetricId};
use crate::obfuscate::{apply, MixWeights, ObfuscationParams, Scheme};
use crate::pipeline::{
    generate_survey_samples, plan_epoch, run_epoch, write_summary_line, ClassMode, Dataset,
    EpochConfig, Gate, Pairing, DEFAULT_GATE_ATTEMPTS,
};
use crate::thresholds::{
    build_roc, export_roc, ingest_records, select_thresholds, RecognitionRecord,
};

/// Runs the CLI on the given argument vector (including argv[0]) and returns
/// the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GateUnreachable(_) => 3,
        Error::InvalidParameter(_) => 1,
        _ => 2,
    }
}

#[derive(Parser)]
#[command(
    name = "pixveil",
    version,
    about = "Mixup-based image obfuscation with measurable privacy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Obfuscate a dataset, writing one output tree per epoch
    Obfuscate(ObfuscateArgs),
    /// Score an image pair (or two feature files for fid) with a metric
    Score(ScoreArgs),
    /// Build ROC curves and privacy thresholds from recognition records
    Roc(RocArgs),
    /// Attack obfuscated samples and report the privacy drop
    Attack(AttackArgs),
    /// Generate survey samples cycling the six obfuscation techniques
    SurveyGen(SurveyGenArgs),
}

#[derive(Args, Clone)]
struct DatasetOpts {
    /// Dataset root: one subdirectory per class, PNG images inside
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Canonical size WxH every image is resized to (default 256x256)
    #[arg(long)]
    size: Option<String>,
    /// Alpha handling on load: strip or reject (default strip)
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Args, Clone)]
struct SchemeOpts {
    /// Obfuscation scheme: mix | graft-mix | shuffle-mix | noise-mix |
    /// pixelize-mix | blur-mix
    #[arg(long)]
    scheme: Option<String>,
    /// Two-way mixing weight lambda (weight of the first source)
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated n-way weights (plain mix only), e.g. 0.7,0.2,0.1
    #[arg(long)]
    weights: Option<String>,
    /// Graft fraction p in [0,1] (graft-mix)
    #[arg(long)]
    p: Option<f64>,
    /// Shuffle neighborhood edge b (shuffle-mix)
    #[arg(long)]
    b: Option<usize>,
    /// Pixelization square edge s (pixelize-mix)
    #[arg(long)]
    s: Option<usize>,
    /// Noise standard deviation on the 0..255 scale (noise-mix)
    #[arg(long)]
    sigma: Option<f64>,
    /// Blur kernel width k, odd; blur sigma is derived from k unless
    /// --blur-sigma is given (blur-mix)
    #[arg(long)]
    k: Option<usize>,
    /// Explicit blur standard deviation (blur-mix)
    #[arg(long)]
    blur_sigma: Option<f64>,
}

#[derive(Args)]
struct ObfuscateArgs {
    #[command(flatten)]
    dataset: DatasetOpts,
    #[command(flatten)]
    scheme: SchemeOpts,
    /// Output directory (epoch_<e> trees are created inside)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value config file; flags win over config values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of epochs to generate
    #[arg(long)]
    epochs: Option<u64>,
    /// Master seed for all randomness
    #[arg(long)]
    seed: Option<u64>,
    /// Pairing strategy: disjoint | permutation
    #[arg(long)]
    pairing: Option<String>,
    /// Partner constraint: blind | intra
    #[arg(long)]
    class_mode: Option<String>,
    /// Privacy gate metric (mse | dssim | phash | dhaar)
    #[arg(long)]
    gate_metric: Option<String>,
    /// Minimum gate score a sample must reach before release
    #[arg(long)]
    gate_min: Option<f64>,
    /// Regeneration attempts per pair before rejecting (default 5)
    #[arg(long)]
    gate_attempts: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Metric: mse | dssim | phash | dhaar | fid
    #[arg(long)]
    metric: String,
    /// Reference image (PNG)
    image_a: Option<PathBuf>,
    /// Comparison image (PNG)
    image_b: Option<PathBuf>,
    /// Feature file for the first set (fid)
    #[arg(long)]
    features_a: Option<PathBuf>,
    /// Feature file for the second set (fid)
    #[arg(long)]
    features_b: Option<PathBuf>,
    /// Resize both images to WxH before scoring
    #[arg(long)]
    resize: Option<String>,
}

#[derive(Args)]
struct RocArgs {
    /// Recognition records CSV (sample_id,metric,score,recognized)
    #[arg(long)]
    records: PathBuf,
    /// Restrict to one metric (otherwise every metric present is analyzed)
    #[arg(long)]
    metric: Option<String>,
    /// Write the ROC curve CSV here (requires a single metric)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackArgs {
    #[command(flatten)]
    dataset: DatasetOpts,
    #[command(flatten)]
    scheme: SchemeOpts,
    /// Flat key=value config file; flags win over config values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the simulated epoch
    #[arg(long)]
    seed: Option<u64>,
    /// Pairing strategy: disjoint | permutation
    #[arg(long)]
    pairing: Option<String>,
    /// Partner constraint: blind | intra
    #[arg(long)]
    class_mode: Option<String>,
    /// Attack: identity | wiener | gaussian-denoise
    #[arg(long)]
    attack: Option<String>,
    /// Wiener window edge (odd, default 3)
    #[arg(long)]
    window: Option<usize>,
    /// Fixed Wiener noise power (default: mean of local variances)
    #[arg(long)]
    noise_power: Option<f64>,
    /// Gaussian denoiser sigma (default 0.35)
    #[arg(long)]
    denoise_sigma: Option<f64>,
    /// Gaussian denoiser kernel width (odd, default 3)
    #[arg(long)]
    denoise_ksize: Option<usize>,
    /// Metric for before/after scoring (default dssim)
    #[arg(long)]
    metric: Option<String>,
    /// Evaluate at most this many pairs
    #[arg(long)]
    limit: Option<usize>,
    /// Write the per-sample report CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SurveyGenArgs {
    #[command(flatten)]
    dataset: DatasetOpts,
    /// Output directory (a survey/ tree is created inside)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value config file; flags win over config values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of samples to emit (default 49)
    #[arg(long)]
    count: Option<usize>,
    /// Seed for parameter and source draws
    #[arg(long)]
    seed: Option<u64>,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Obfuscate(args) => cmd_obfuscate(args),
        Command::Score(args) => cmd_score(args),
        Command::Roc(args) => cmd_roc(args),
        Command::Attack(args) => cmd_attack(args),
        Command::SurveyGen(args) => cmd_survey_gen(args),
    }
}

// --- config file -------------------------------------------------------

/// Flat `key = value` file; keys are the long flag names.
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| Error::RecordParse {
                    line: idx as u64 + 1,
                    reason: format!("expected 'key = value', got '{line}'"),
                })?;
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::InvalidParameter(format!("config value '{raw}' is invalid for '{key}'"))
            }),
        }
    }
}

/// Flag value if present, else config value, else `None`.
fn resolve<T: FromStr>(flag: Option<T>, cfg: &Config, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => cfg.get(key),
    }
}

fn required<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::InvalidParameter(format!("missing required option --{what}")))
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::InvalidParameter(format!("bad size '{s}', expected WxH")))?;
    let w = w
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad width in '{s}'")))?;
    let h = h
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad height in '{s}'")))?;
    Ok((w, h))
}

fn open_dataset(opts: &DatasetOpts, cfg: &Config) -> Result<Dataset> {
    let root = required(resolve(opts.dataset.clone(), cfg, "dataset")?, "dataset")?;
    let size = resolve(opts.size.clone(), cfg, "size")?
        .map(|s| parse_size(&s))
        .transpose()?
        .unwrap_or((256, 256));
    let alpha: AlphaPolicy = resolve(opts.alpha.clone(), cfg, "alpha")?
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or_default();
    Dataset::from_dir_with(root, size, alpha)
}

fn build_params(opts: &SchemeOpts, cfg: &Config) -> Result<ObfuscationParams> {
    let scheme: Scheme =
        required(resolve(opts.scheme.clone(), cfg, "scheme")?, "scheme")?.parse()?;
    let lambda = resolve(opts.lambda, cfg, "lambda")?;
    let two_way = |what: &str| -> Result<MixWeights> {
        let l = required(lambda, what)?;
        MixWeights::two(l)
    };
    let params = match scheme {
        Scheme::Mix => {
            let weights = match resolve(opts.weights.clone(), cfg, "weights")? {
                Some(list) => {
                    let parsed: Vec<f64> = list
                        .split(',')
                        .map(|tok| {
                            tok.trim()
                                .parse::<f64>()
                                .map_err(|_| Error::InvalidParameter(format!("bad weight '{tok}'")))
                        })
                        .collect::<Result<_>>()?;
                    MixWeights::new(parsed)?
                }
                None => two_way("lambda")?,
            };
            ObfuscationParams::Mix { weights }
        }
        Scheme::GraftMix => ObfuscationParams::GraftMix {
            weights: two_way("lambda")?,
            p: required(resolve(opts.p, cfg, "p")?, "p")?,
        },
        Scheme::ShuffleMix => ObfuscationParams::ShuffleMix {
            weights: two_way("lambda")?,
            b: required(resolve(opts.b, cfg, "b")?, "b")?,
        },
        Scheme::NoiseMix => ObfuscationParams::NoiseMix {
            weights: two_way("lambda")?,
            sigma: required(resolve(opts.sigma, cfg, "sigma")?, "sigma")?,
        },
        Scheme::PixelizeMix => ObfuscationParams::PixelizeMix {
            weights: two_way("lambda")?,
            s: required(resolve(opts.s, cfg, "s")?, "s")?,
        },
        Scheme::BlurMix => {
            let k = resolve(opts.k, cfg, "k")?;
            let blur_sigma = resolve(opts.blur_sigma, cfg, "blur-sigma")?;
            let (sigma, ksize) = match (k, blur_sigma) {
                (Some(k), Some(sig)) => (sig, k),
                (Some(k), None) => (sigma_for_ksize(k), k),
                (None, Some(sig)) => {
                    // Cover +-3 sigma with an odd kernel.
                    let k = 2 * (3.0 * sig).ceil() as usize + 1;
                    (sig, k)
                }
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "blur-mix needs --k or --blur-sigma".into(),
                    ))
                }
            };
            ObfuscationParams::BlurMix {
                weights: two_way("lambda")?,
                sigma,
                ksize,
            }
        }
    };
    params.validate()?;
    Ok(params)
}

// --- subcommands -------------------------------------------------------

fn cmd_obfuscate(args: ObfuscateArgs) -> Result<()> {
    let cfg = Config::load(args.config.as_deref())?;
    let ds = open_dataset(&args.dataset, &cfg)?;
    let params = build_params(&args.scheme, &cfg)?;
    let out = required(resolve(args.out, &cfg, "out")?, "out")?;

    let epochs = resolve(args.epochs, &cfg, "epochs")?.unwrap_or(1);
    let master_seed = resolve(args.seed, &cfg, "seed")?.unwrap_or(0);
    let pairing: Pairing = resolve(args.pairing, &cfg, "pairing")?
        .map(|s: String| s.parse())
        .transpose()?
        .unwrap_or_default();
    let class_mode: ClassMode = resolve(args.class_mode, &cfg, "class-mode")?
        .map(|s: String| s.parse())
        .transpose()?
        .unwrap_or_default();

    let gate_metric: Option<String> = resolve(args.gate_metric, &cfg, "gate-metric")?;
    let gate_min: Option<f64> = resolve(args.gate_min, &cfg, "gate-min")?;
    let gate = match (gate_metric, gate_min) {
        (Some(metric), Some(min_score)) => Some(Gate {
            metric: metric.parse()?,
            min_score,
            max_regen_attempts: resolve(args.gate_attempts, &cfg, "gate-attempts")?
                .unwrap_or(DEFAULT_GATE_ATTEMPTS),
        }),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidParameter(
                "a gate needs both --gate-metric and --gate-min".into(),
            ))
        }
    };

    for epoch_index in 0..epochs {
        let epoch_cfg = EpochConfig {
            params: params.clone(),
            pairing,
            class_mode,
            epoch_index,
            master_seed,
            gate,
        };
        let manifest = run_epoch(&ds, &epoch_cfg, &out)?;
        write_summary_line(
            std::io::stdout().lock(),
            &manifest,
            epoch_cfg.record_metric(),
        )
        .map_err(|e| Error::io(&out, e))?;
    }
    Ok(())
}

fn load_score_image(path: &Path) -> Result<Image> {
    load_image_with(path, AlphaPolicy::Strip)
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let metric: MetricId = args.metric.parse()?;
    let value = if metric == MetricId::Fid {
        let fa = required(args.features_a, "features-a")?;
        let fb = required(args.features_b, "features-b")?;
        let f1 = FeatureSet::read_file(fa)?;
        let f2 = FeatureSet::read_file(fb)?;
        frechet_distance(&f1, &f2)?.value
    } else {
        let pa = required(args.image_a, "IMAGE_A")?;
        let pb = required(args.image_b, "IMAGE_B")?;
        let mut a = load_score_image(&pa)?;
        let mut b = load_score_image(&pb)?;
        if let Some(size) = &args.resize {
            let (w, h) = parse_size(size)?;
            a = resize_bilinear(&a, w, h)?;
            b = resize_bilinear(&b, w, h)?;
        }
        score(&a, &b, metric)?.value
    };
    println!("{}", fmt_sig9(value));
    Ok(())
}

fn cmd_roc(args: RocArgs) -> Result<()> {
    let records = ingest_records(&args.records)?;
    let only: Option<MetricId> = args.metric.as_deref().map(str::parse).transpose()?;

    let mut metrics_present: Vec<MetricId> = MetricId::ALL
        .into_iter()
        .filter(|m| records.iter().any(|r| r.metric == *m))
        .collect();
    if let Some(metric) = only {
        metrics_present.retain(|m| *m == metric);
        if metrics_present.is_empty() {
            return Err(Error::NoRecords(format!("no records for metric {metric}")));
        }
    }
    if args.out.is_some() && metrics_present.len() > 1 {
        return Err(Error::InvalidParameter(
            "--out exports a single curve; pick one metric with --metric".into(),
        ));
    }

    for metric in metrics_present {
        let subset: Vec<RecognitionRecord> = records
            .iter()
            .filter(|r| r.metric == metric)
            .cloned()
            .collect();
        let roc = build_roc(&subset)?;
        let thresholds = select_thresholds(&roc)?;
        println!("metric={metric} auc={}", fmt_sig9(roc.auc));
        println!(
            "  t_acc={} (fpr={}, tpr={})",
            fmt_sig9(thresholds.t_acc.threshold),
            fmt_sig9(thresholds.t_acc.fpr),
            fmt_sig9(thresholds.t_acc.tpr)
        );
        println!(
            "  t_cutoff={} (fpr={}, tpr={})",
            fmt_sig9(thresholds.t_cutoff.threshold),
            fmt_sig9(thresholds.t_cutoff.fpr),
            fmt_sig9(thresholds.t_cutoff.tpr)
        );
        if let Some(out) = &args.out {
            let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
            export_roc(&roc, std::io::BufWriter::new(file)).map_err(|e| Error::io(out, e))?;
        }
    }
    Ok(())
}

fn cmd_attack(args: AttackArgs) -> Result<()> {
    let cfg = Config::load(args.config.as_deref())?;
    let ds = open_dataset(&args.dataset, &cfg)?;
    let params = build_params(&args.scheme, &cfg)?;
    let master_seed = resolve(args.seed, &cfg, "seed")?.unwrap_or(0);
    let metric: MetricId = resolve(args.metric, &cfg, "metric")?
        .map(|m: String| m.parse())
        .transpose()?
        .unwrap_or(MetricId::Dssim);

    let attack_name: String =
        resolve(args.attack, &cfg, "attack")?.unwrap_or_else(|| "identity".to_string());
    let attack = match attack_name.as_str() {
        "identity" => AttackKind::Identity,
        "wiener" => AttackKind::Wiener {
            window: resolve(args.window, &cfg, "window")?.unwrap_or(DEFAULT_WIENER_WINDOW),
            noise_power: resolve(args.noise_power, &cfg, "noise-power")?,
        },
        "gaussian-denoise" => AttackKind::GaussianDenoise {
            sigma: resolve(args.denoise_sigma, &cfg, "denoise-sigma")?
                .unwrap_or(DEFAULT_DENOISE_SIGMA),
            ksize: resolve(args.denoise_ksize, &cfg, "denoise-ksize")?
                .unwrap_or(DEFAULT_DENOISE_KSIZE),
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown attack '{other}' (expected identity|wiener|gaussian-denoise)"
            )))
        }
    };

    let epoch_cfg = EpochConfig {
        params,
        pairing: resolve(args.pairing, &cfg, "pairing")?
            .map(|s: String| s.parse())
            .transpose()?
            .unwrap_or_default(),
        class_mode: resolve(args.class_mode, &cfg, "class-mode")?
            .map(|s: String| s.parse())
            .transpose()?
            .unwrap_or_default(),
        epoch_index: 0,
        master_seed,
        gate: None,
    };
    let mut plan = plan_epoch(&ds, &epoch_cfg)?;
    if let Some(limit) = resolve(args.limit, &cfg, "limit")? {
        plan.truncate(limit);
    }

    let mut cases = Vec::with_capacity(plan.len());
    for (pair_index, &(i, j)) in plan.iter().enumerate() {
        let xi = ds.load(i)?;
        let xj = ds.load(j)?;
        let rng = crate::imgcore::Rng::from_words([master_seed, 0, pair_index as u64, 0]);
        let mut sample = apply(
            &epoch_cfg.params,
            &[(xi.clone(), ds.label(i)?), (xj.clone(), ds.label(j)?)],
            rng,
        )?;
        sample.image.quantize();
        cases.push(AttackCase {
            sample_id: format!("sample_{pair_index:05}"),
            sample,
            sources: vec![xi, xj],
        });
    }

    let reports = evaluate_attack(&cases, &attack, metric)?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_report(&reports, std::io::BufWriter::new(file))
                .map_err(|e| Error::io(path, e))?;
        }
        None => {
            write_report(&reports, std::io::stdout().lock()).map_err(|e| Error::io("stdout", e))?;
        }
    }
    let drop = crate::attacks::mean_drop(&reports);
    println!(
        "attack={} metric={} samples={} mean_drop={}",
        attack.name(),
        metric,
        reports.len(),
        fmt_sig9(drop)
    );
    Ok(())
}

fn cmd_survey_gen(args: SurveyGenArgs) -> Result<()> {
    let cfg = Config::load(args.config.as_deref())?;
    let ds = open_dataset(&args.dataset, &cfg)?;
    let out = required(resolve(args.out, &cfg, "out")?, "out")?;
    let count = resolve(args.count, &cfg, "count")?.unwrap_or(49);
    let seed = resolve(args.seed, &cfg, "seed")?.unwrap_or(0);

    let output = generate_survey_samples(&ds, count, seed, &out)?;
    match output.manifest.score_summary() {
        Some(s) => println!(
            "survey: {} samples; dssim mean={} min={} median={}",
            output.manifest.public.len(),
            fmt_sig9(s.mean),
            fmt_sig9(s.min),
            fmt_sig9(s.median)
        ),
        None => println!("survey: 0 samples"),
    }
    Ok(())
}

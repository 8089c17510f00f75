//! Dataset-level epoch generation: pairing strategies, per-epoch obfuscation
//! with fresh randomness, privacy gating, and manifest emission.
//!
//! Every sample's randomness is keyed by
//! `(master_seed, epoch_index, pair_index, attempt)`, so a run is fully
//! reproducible regardless of thread scheduling, epochs get fresh mixtures,
//! and gate regeneration redraws only the scheme randomness of the affected
//! pair.

mod manifest;
mod survey;

pub use manifest::{
    read_private, read_public, score_summary, write_summary_line, EpochManifest, PrivateEntry,
    PublicEntry, RejectedPair, ScoreSummary,
};
pub use survey::{
    generate_survey_samples, SurveyOutput, GRAFT_P_GRID, LAMBDA3_GRID, LAMBDA_GRID,
    NOISE_SIGMA_GRID, PIXELIZE_S_GRID, SHUFFLE_B_GRID, SURVEY_BLUR_K_GRID,
};

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::{
    load_image_with, resize_bilinear, save_image, AlphaPolicy, Image, Label, Rng,
};
use crate::metrics::{score_sample, MetricId};
use crate::obfuscate::{apply, ObfuscatedSample, ObfuscationParams};

/// Stream tag separating pairing-plan draws from per-sample draws.
const PLAN_STREAM: u64 = 0x706c_616e_0000_0001;
/// Stream tag for survey-sample generation.
pub(crate) const SURVEY_STREAM: u64 = 0x7375_7276_0000_0001;

/// One dataset entry: an image path (relative to the dataset root) plus its
/// class.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub rel_path: String,
    pub class_id: usize,
}

/// A labeled image dataset rooted at a directory with one subdirectory per
/// class. Images are resized to the canonical size when loaded.
#[derive(Debug, Clone)]
pub struct Dataset {
    root: PathBuf,
    entries: Vec<DatasetEntry>,
    class_names: Vec<String>,
    canonical_size: (usize, usize),
    alpha: AlphaPolicy,
}

impl Dataset {
    /// Scans `root` for class subdirectories (sorted by name) containing PNG
    /// files (sorted by name).
    pub fn from_dir(root: impl AsRef<Path>, canonical_size: (usize, usize)) -> Result<Self> {
        Dataset::from_dir_with(root, canonical_size, AlphaPolicy::Strip)
    }

    pub fn from_dir_with(
        root: impl AsRef<Path>,
        canonical_size: (usize, usize),
        alpha: AlphaPolicy,
    ) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        if canonical_size.0 == 0 || canonical_size.1 == 0 {
            return Err(Error::InvalidParameter(
                "canonical size must be at least 1x1".into(),
            ));
        }
        let mut class_dirs: Vec<PathBuf> = std::fs::read_dir(&root)
            .map_err(|e| Error::io(&root, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        class_dirs.sort();

        let mut class_names = Vec::new();
        let mut entries = Vec::new();
        for dir in class_dirs {
            let class_name = dir
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::Unsupported(format!("bad class dir name: {dir:?}")))?
                .to_string();
            let class_id = class_names.len();
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file()
                        && p.extension()
                            .and_then(|e| e.to_str())
                            .is_some_and(|e| e.eq_ignore_ascii_case("png"))
                })
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "class directory '{class_name}' contains no PNG files"
                )));
            }
            for file in files {
                let rel = format!(
                    "{class_name}/{}",
                    file.file_name()
                        .and_then(|n| n.to_str())
                        .unwrap_or_default()
                );
                entries.push(DatasetEntry {
                    rel_path: rel,
                    class_id,
                });
            }
            class_names.push(class_name);
        }

        if class_names.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "dataset needs at least 2 classes, found {}",
                class_names.len()
            )));
        }
        if entries.len() < 2 {
            return Err(Error::InvalidParameter(
                "dataset needs at least 2 images".into(),
            ));
        }
        Ok(Dataset {
            root,
            entries,
            class_names,
            canonical_size,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn canonical_size(&self) -> (usize, usize) {
        self.canonical_size
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn class_name(&self, class_id: usize) -> &str {
        &self.class_names[class_id]
    }

    pub fn label(&self, index: usize) -> Result<Label> {
        Label::new(self.entries[index].class_id, self.num_classes())
    }

    /// Indices of all entries of one class.
    pub fn class_members(&self, class_id: usize) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|&i| self.entries[i].class_id == class_id)
            .collect()
    }

    /// Loads an entry and resizes it to the canonical size.
    pub fn load(&self, index: usize) -> Result<Image> {
        let path = self.root.join(&self.entries[index].rel_path);
        let img = load_image_with(&path, self.alpha)?;
        let (w, h) = self.canonical_size;
        if img.width() == w && img.height() == h {
            Ok(img)
        } else {
            resize_bilinear(&img, w, h)
        }
    }
}

/// How images are paired within an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// A random perfect matching: each image appears in exactly one pair.
    /// The stricter privacy reading (each original used at most once per
    /// epoch); an odd leftover image is skipped for that epoch, rotating
    /// with the epoch index.
    #[default]
    Disjoint,
    /// A fixed-point-free permutation: pair `(i, pi(i))` for every `i`, so
    /// the epoch has as many samples as images and each image also appears
    /// once as a partner.
    Permutation,
}

impl std::str::FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(Pairing::Disjoint),
            "permutation" => Ok(Pairing::Permutation),
            other => Err(Error::InvalidParameter(format!(
                "unknown pairing '{other}' (expected disjoint|permutation)"
            ))),
        }
    }
}

/// Whether partners are drawn from the whole dataset or the same class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassMode {
    #[default]
    Blind,
    Intra,
}

impl std::str::FromStr for ClassMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blind" => Ok(ClassMode::Blind),
            "intra" => Ok(ClassMode::Intra),
            other => Err(Error::InvalidParameter(format!(
                "unknown class mode '{other}' (expected blind|intra)"
            ))),
        }
    }
}

/// A minimum privacy score a sample must reach before release. Samples that
/// fail are re-drawn with fresh scheme randomness (same pair) up to
/// `max_regen_attempts` times, then recorded as rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    pub metric: MetricId,
    pub min_score: f64,
    pub max_regen_attempts: usize,
}

pub const DEFAULT_GATE_ATTEMPTS: usize = 5;

/// Configuration of one obfuscation epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochConfig {
    pub params: ObfuscationParams,
    pub pairing: Pairing,
    pub class_mode: ClassMode,
    pub epoch_index: u64,
    pub master_seed: u64,
    pub gate: Option<Gate>,
}

impl EpochConfig {
    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if let Some(gate) = &self.gate {
            if gate.max_regen_attempts == 0 {
                return Err(Error::InvalidParameter(
                    "gate needs max_regen_attempts >= 1".into(),
                ));
            }
            if !gate.min_score.is_finite() {
                return Err(Error::InvalidParameter(
                    "gate min_score must be finite".into(),
                ));
            }
            if gate.metric == MetricId::Fid {
                return Err(Error::InvalidParameter(
                    "gate metric must be an image metric".into(),
                ));
            }
        }
        Ok(())
    }

    /// Metric recorded per sample: the gate metric when present, dSSIM
    /// otherwise.
    pub fn record_metric(&self) -> MetricId {
        self.gate.map_or(MetricId::Dssim, |g| g.metric)
    }
}

/// Builds the epoch's pairing plan: a list of `(first, partner)` entry
/// indices.
pub fn plan_epoch(ds: &Dataset, cfg: &EpochConfig) -> Result<Vec<(usize, usize)>> {
    cfg.validate()?;
    if ds.len() < 2 {
        return Err(Error::InvalidParameter(
            "cannot pair a dataset with fewer than 2 images".into(),
        ));
    }
    let groups: Vec<Vec<usize>> = match cfg.class_mode {
        ClassMode::Blind => vec![(0..ds.len()).collect()],
        ClassMode::Intra => (0..ds.num_classes()).map(|c| ds.class_members(c)).collect(),
    };
    for (c, group) in groups.iter().enumerate() {
        if group.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "intra-class pairing needs at least 2 images per class; class '{}' has {}",
                ds.class_name(c),
                group.len()
            )));
        }
    }

    let mut rng = Rng::from_words([cfg.master_seed, cfg.epoch_index, PLAN_STREAM, 0]);
    let mut pairs = Vec::new();
    for group in groups {
        match cfg.pairing {
            Pairing::Disjoint => {
                let mut members = group;
                if members.len() % 2 == 1 {
                    // Rotate which image sits out so coverage balances
                    // across epochs.
                    let skip = (cfg.epoch_index as usize) % members.len();
                    members.remove(skip);
                }
                rng.shuffle(&mut members);
                for chunk in members.chunks_exact(2) {
                    pairs.push((chunk[0], chunk[1]));
                }
            }
            Pairing::Permutation => {
                let mut perm: Vec<usize> = (0..group.len()).collect();
                rng.shuffle(&mut perm);
                // Repair fixed points: swapping a fixed point with its right
                // neighbor removes it without creating a new one.
                for i in 0..perm.len() {
                    if perm[i] == i {
                        let j = (i + 1) % perm.len();
                        perm.swap(i, j);
                    }
                }
                for (i, &p) in perm.iter().enumerate() {
                    debug_assert_ne!(i, p);
                    pairs.push((group[i], group[p]));
                }
            }
        }
    }
    Ok(pairs)
}

struct PairOutcome {
    pair_index: usize,
    accepted: Option<(ObfuscatedSample, f64)>,
    attempts: usize,
    source_paths: [String; 2],
    label_name: String,
    seed_words: [u64; 4],
}

/// Runs one epoch: pairs the dataset, applies the operator with per-pair rng
/// streams, gates samples when configured, and writes
/// `epoch_<e>/sample_*.png` plus the public and private manifest halves
/// under `out_dir`.
///
/// Images are quantized to their 8-bit form *before* scoring, so rescoring
/// the written files reproduces the recorded scores exactly. Aborts without
/// writing anything when the gate rejects more than half of the pairs.
pub fn run_epoch(
    ds: &Dataset,
    cfg: &EpochConfig,
    out_dir: impl AsRef<Path>,
) -> Result<EpochManifest> {
    cfg.validate()?;
    let plan = plan_epoch(ds, cfg)?;
    let record_metric = cfg.record_metric();
    let max_attempts = cfg.gate.map_or(1, |g| g.max_regen_attempts);

    let outcomes: Vec<PairOutcome> = plan
        .par_iter()
        .enumerate()
        .map(|(pair_index, &(i, j))| -> Result<PairOutcome> {
            let xi = ds.load(i)?;
            let xj = ds.load(j)?;
            let yi = ds.label(i)?;
            let yj = ds.label(j)?;
            let sources = [xi.clone(), xj.clone()];

            let mut accepted = None;
            let mut attempts = 0;
            let mut seed_words = [0u64; 4];
            for attempt in 0..max_attempts {
                attempts = attempt + 1;
                let rng = Rng::from_words([
                    cfg.master_seed,
                    cfg.epoch_index,
                    pair_index as u64,
                    attempt as u64,
                ]);
                seed_words = rng.identity();
                let mut sample = apply(&cfg.params, &[(xi.clone(), yi), (xj.clone(), yj)], rng)?;
                sample.image.quantize();
                let s = score_sample(&sample, &sources, record_metric)?.value;
                let pass = cfg.gate.is_none_or(|g| s >= g.min_score);
                if pass {
                    sample.private.source_ids = vec![
                        ds.entries()[i].rel_path.clone(),
                        ds.entries()[j].rel_path.clone(),
                    ];
                    accepted = Some((sample, s));
                    break;
                }
            }

            let label_name = match &accepted {
                Some((sample, _)) => ds.class_name(sample.public_label.class_id()).to_string(),
                None => String::new(),
            };
            Ok(PairOutcome {
                pair_index,
                accepted,
                attempts,
                source_paths: [
                    ds.entries()[i].rel_path.clone(),
                    ds.entries()[j].rel_path.clone(),
                ],
                label_name,
                seed_words,
            })
        })
        .collect::<Result<_>>()?;

    let rejected_count = outcomes.iter().filter(|o| o.accepted.is_none()).count();
    if let Some(gate) = &cfg.gate {
        if 2 * rejected_count > plan.len() {
            return Err(Error::GateUnreachable(format!(
                "epoch {}: {rejected_count} of {} pairs failed to reach {} >= {} within {} attempts",
                cfg.epoch_index,
                plan.len(),
                record_metric,
                gate.min_score,
                max_attempts
            )));
        }
    }

    let epoch_dir = out_dir.as_ref().join(format!("epoch_{}", cfg.epoch_index));
    std::fs::create_dir_all(&epoch_dir).map_err(|e| Error::io(&epoch_dir, e))?;

    let mut manifest = EpochManifest::new(cfg.epoch_index);
    for outcome in outcomes {
        let file = format!("sample_{:05}.png", outcome.pair_index);
        match outcome.accepted {
            Some((sample, score)) => {
                save_image(&sample.image, epoch_dir.join(&file))?;
                manifest.public.push(PublicEntry {
                    file: file.clone(),
                    label: outcome.label_name,
                });
                manifest.private.push(PrivateEntry {
                    file,
                    sources: sample.private.source_ids.clone(),
                    lambdas: sample.private.weights.as_slice().to_vec(),
                    seed_words: sample.private.seed_words,
                    score,
                });
            }
            None => {
                manifest.rejected.push(RejectedPair {
                    file,
                    sources: outcome.source_paths.to_vec(),
                    attempts: outcome.attempts,
                    seed_words: outcome.seed_words,
                });
            }
        }
    }

    manifest.write(&epoch_dir)?;
    Ok(manifest)
}

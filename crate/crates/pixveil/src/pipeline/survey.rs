//! Survey-sample generation: obfuscated images cycling the six techniques in
//! equal proportion, with parameters drawn uniformly from the survey grids.
//!
//! Sources are drawn class-first (n distinct classes, then one image within
//! each class), so every sample's sources carry distinct labels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::imgcore::{save_image, sigma_for_ksize, Rng};
use crate::metrics::{score_sample, MetricId};
use crate::obfuscate::{apply, MixWeights, ObfuscationParams, Scheme};
use crate::pipeline::manifest::{EpochManifest, PrivateEntry, PublicEntry};
use crate::pipeline::{Dataset, SURVEY_STREAM};

/// Two-way mixing weights offered in the survey.
pub const LAMBDA_GRID: [f64; 3] = [0.5, 0.6, 0.7];
/// Three-way weight vectors. The printed decimal forms truncate the exact
/// fractions (1/2, 1/3, 1/6) and (1/3, 1/3, 1/3), which are used here so the
/// weights sum to one.
pub const LAMBDA3_GRID: [[f64; 3]; 3] = [
    [0.7, 0.2, 0.1],
    [0.5, 1.0 / 3.0, 1.0 / 6.0],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
];
pub const GRAFT_P_GRID: [f64; 4] = [0.5, 0.6, 0.7, 0.8];
pub const SURVEY_BLUR_K_GRID: [usize; 3] = [17, 35, 45];
pub const PIXELIZE_S_GRID: [usize; 3] = [16, 20, 32];
pub const SHUFFLE_B_GRID: [usize; 3] = [4, 8, 16];
pub const NOISE_SIGMA_GRID: [f64; 3] = [10.0, 20.0, 40.0];

/// The generated survey set: its manifest plus the exact parameters of every
/// emitted sample, aligned with the manifest order.
#[derive(Debug, Clone)]
pub struct SurveyOutput {
    pub manifest: EpochManifest,
    pub params: Vec<ObfuscationParams>,
}

/// Emits `count` obfuscated survey samples into `<out_dir>/survey/`.
///
/// Techniques cycle in the fixed order mix, graft-mix, shuffle-mix,
/// noise-mix, pixelize-mix, blur-mix, so any multiple of six gives exact
/// equal proportions. Needs at least 3 classes (three-way mixes pick three
/// distinct classes).
pub fn generate_survey_samples(
    ds: &Dataset,
    count: usize,
    seed: u64,
    out_dir: impl AsRef<Path>,
) -> Result<SurveyOutput> {
    if ds.num_classes() < 3 {
        return Err(Error::InvalidParameter(format!(
            "survey generation needs at least 3 classes, dataset has {}",
            ds.num_classes()
        )));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("survey count must be >= 1".into()));
    }

    let survey_dir = out_dir.as_ref().join("survey");
    std::fs::create_dir_all(&survey_dir).map_err(|e| Error::io(&survey_dir, e))?;

    let mut manifest = EpochManifest::new(0);
    let mut all_params = Vec::with_capacity(count);
    let mut params_rows = String::from("file,scheme,detail\n");

    for i in 0..count {
        let mut rng = Rng::from_words([seed, SURVEY_STREAM, i as u64, 0]);
        let scheme = Scheme::ALL[i % Scheme::ALL.len()];
        let params = draw_params(scheme, &mut rng)?;
        let n_sources = params.weights().len();

        // Class-first selection: n distinct classes, then one image each.
        let mut classes: Vec<usize> = (0..ds.num_classes()).collect();
        rng.shuffle(&mut classes);
        classes.truncate(n_sources);
        let mut sources = Vec::with_capacity(n_sources);
        let mut source_paths = Vec::with_capacity(n_sources);
        for &class in &classes {
            let members = ds.class_members(class);
            let idx = members[rng.index(members.len())];
            sources.push((ds.load(idx)?, ds.label(idx)?));
            source_paths.push(ds.entries()[idx].rel_path.clone());
        }

        let mut sample = apply(&params, &sources, rng)?;
        sample.image.quantize();
        let source_images: Vec<_> = sources.iter().map(|(img, _)| img.clone()).collect();
        let score = score_sample(&sample, &source_images, MetricId::Dssim)?.value;

        let file = format!("sample_{i:05}.png");
        save_image(&sample.image, survey_dir.join(&file))?;
        manifest.public.push(PublicEntry {
            file: file.clone(),
            label: ds.class_name(sample.public_label.class_id()).to_string(),
        });
        manifest.private.push(PrivateEntry {
            file: file.clone(),
            sources: source_paths,
            lambdas: sample.private.weights.as_slice().to_vec(),
            seed_words: sample.private.seed_words,
            score,
        });
        params_rows.push_str(&format!("{file},{},{}\n", scheme, params_detail(&params)));
        all_params.push(params);
    }

    manifest.write(&survey_dir)?;
    let params_path = survey_dir.join("params.csv");
    std::fs::write(&params_path, params_rows).map_err(|e| Error::io(&params_path, e))?;

    Ok(SurveyOutput {
        manifest,
        params: all_params,
    })
}

fn draw_params(scheme: Scheme, rng: &mut Rng) -> Result<ObfuscationParams> {
    let two = |rng: &mut Rng| -> Result<MixWeights> { MixWeights::two(*rng.pick(&LAMBDA_GRID)) };
    Ok(match scheme {
        Scheme::Mix => {
            // Plain mixing appears with either two or three sources.
            if rng.index(2) == 0 {
                ObfuscationParams::Mix { weights: two(rng)? }
            } else {
                let v = *rng.pick(&LAMBDA3_GRID);
                ObfuscationParams::Mix {
                    weights: MixWeights::new(v.to_vec())?,
                }
            }
        }
        Scheme::GraftMix => ObfuscationParams::GraftMix {
            weights: two(rng)?,
            p: *rng.pick(&GRAFT_P_GRID),
        },
        Scheme::ShuffleMix => ObfuscationParams::ShuffleMix {
            weights: two(rng)?,
            b: *rng.pick(&SHUFFLE_B_GRID),
        },
        Scheme::NoiseMix => ObfuscationParams::NoiseMix {
            weights: two(rng)?,
            sigma: *rng.pick(&NOISE_SIGMA_GRID),
        },
        Scheme::PixelizeMix => ObfuscationParams::PixelizeMix {
            weights: two(rng)?,
            s: *rng.pick(&PIXELIZE_S_GRID),
        },
        Scheme::BlurMix => {
            let k = *rng.pick(&SURVEY_BLUR_K_GRID);
            ObfuscationParams::BlurMix {
                weights: two(rng)?,
                sigma: sigma_for_ksize(k),
                ksize: k,
            }
        }
    })
}

fn params_detail(params: &ObfuscationParams) -> String {
    match params {
        ObfuscationParams::Mix { weights } => format!("n={}", weights.len()),
        ObfuscationParams::GraftMix { p, .. } => format!("p={p}"),
        ObfuscationParams::ShuffleMix { b, .. } => format!("b={b}"),
        ObfuscationParams::NoiseMix { sigma, .. } => format!("sigma={sigma}"),
        ObfuscationParams::PixelizeMix { s, .. } => format!("s={s}"),
        ObfuscationParams::BlurMix { ksize, .. } => format!("k={ksize}"),
    }
}

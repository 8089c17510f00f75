//! The six obfuscation operators and their label rules.
//!
//! Every operator builds a convex pixel combination of its sources; the
//! combined variants first push each source through a scheme-specific
//! distortion (grafting mask, local shuffling, additive Gaussian noise,
//! pixelization, Gaussian blur). Setting the distortion to its identity value
//! (`p = 0`, `b = 1`, `sigma = 0`, `s = 1`, `ksize = 1`) makes each operator
//! bit-identical to plain [`mix`] under the same weights and rng stream.
//!
//! The published half of a sample is the mixed image and a single class
//! label (the source with the largest effective contribution). Mixing
//! weights, masks, permutations, and noise seeds stay in the private half.

use crate::error::{Error, Result};
use crate::imgcore::{block_map, gaussian_blur, Image, Label, Rng};
use crate::metrics::{score, MetricId};

type SourcePair<'a> = (&'a (Image, Label), &'a (Image, Label));

/// Convex mixing weights: `n >= 2` fractions in `[0, 1]` summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MixWeights(Vec<f64>);

impl MixWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidParameter(
                "mixing needs at least 2 weights".into(),
            ));
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0 || *w > 1.0)
        {
            return Err(Error::InvalidParameter(format!(
                "weights must lie in [0, 1]: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1 (got {sum})"
            )));
        }
        Ok(MixWeights(weights))
    }

    /// Two-way weights `(lambda, 1 - lambda)`.
    pub fn two(lambda: f64) -> Result<Self> {
        MixWeights::new(vec![lambda, 1.0 - lambda])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Private provenance of an obfuscated sample. Never serialized into the
/// public manifest half.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// Identifiers of the source images. Operators fill in positional
    /// indices; the pipeline replaces them with dataset paths.
    pub source_ids: Vec<String>,
    pub weights: MixWeights,
    /// The rng stream words the sample's randomness was drawn from.
    pub seed_words: [u64; 4],
}

/// An obfuscated sample: the shareable image and label, plus the private
/// provenance that must not leave the client.
#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscatedSample {
    pub image: Image,
    pub public_label: Label,
    pub private: Provenance,
}

/// The six obfuscation schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Mix,
    GraftMix,
    ShuffleMix,
    NoiseMix,
    PixelizeMix,
    BlurMix,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Mix,
        Scheme::GraftMix,
        Scheme::ShuffleMix,
        Scheme::NoiseMix,
        Scheme::PixelizeMix,
        Scheme::BlurMix,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Mix => "mix",
            Scheme::GraftMix => "graft-mix",
            Scheme::ShuffleMix => "shuffle-mix",
            Scheme::NoiseMix => "noise-mix",
            Scheme::PixelizeMix => "pixelize-mix",
            Scheme::BlurMix => "blur-mix",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mix" => Ok(Scheme::Mix),
            "graft-mix" => Ok(Scheme::GraftMix),
            "shuffle-mix" => Ok(Scheme::ShuffleMix),
            "noise-mix" => Ok(Scheme::NoiseMix),
            "pixelize-mix" => Ok(Scheme::PixelizeMix),
            "blur-mix" => Ok(Scheme::BlurMix),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// A scheme together with its parameters. Combined schemes are two-way; only
/// plain mixing supports n-way weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum ObfuscationParams {
    Mix {
        weights: MixWeights,
    },
    GraftMix {
        weights: MixWeights,
        p: f64,
    },
    ShuffleMix {
        weights: MixWeights,
        b: usize,
    },
    NoiseMix {
        weights: MixWeights,
        sigma: f64,
    },
    PixelizeMix {
        weights: MixWeights,
        s: usize,
    },
    BlurMix {
        weights: MixWeights,
        sigma: f64,
        ksize: usize,
    },
}

impl ObfuscationParams {
    pub fn scheme(&self) -> Scheme {
        match self {
            ObfuscationParams::Mix { .. } => Scheme::Mix,
            ObfuscationParams::GraftMix { .. } => Scheme::GraftMix,
            ObfuscationParams::ShuffleMix { .. } => Scheme::ShuffleMix,
            ObfuscationParams::NoiseMix { .. } => Scheme::NoiseMix,
            ObfuscationParams::PixelizeMix { .. } => Scheme::PixelizeMix,
            ObfuscationParams::BlurMix { .. } => Scheme::BlurMix,
        }
    }

    pub fn weights(&self) -> &MixWeights {
        match self {
            ObfuscationParams::Mix { weights }
            | ObfuscationParams::GraftMix { weights, .. }
            | ObfuscationParams::ShuffleMix { weights, .. }
            | ObfuscationParams::NoiseMix { weights, .. }
            | ObfuscationParams::PixelizeMix { weights, .. }
            | ObfuscationParams::BlurMix { weights, .. } => weights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let two_way = |weights: &MixWeights, scheme: Scheme| {
            if weights.len() != 2 {
                Err(Error::InvalidParameter(format!(
                    "{scheme} is two-way, got {} weights",
                    weights.len()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            ObfuscationParams::Mix { .. } => Ok(()),
            ObfuscationParams::GraftMix { weights, p } => {
                two_way(weights, Scheme::GraftMix)?;
                if !p.is_finite() || !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidParameter(format!(
                        "graft fraction must lie in [0, 1], got {p}"
                    )));
                }
                Ok(())
            }
            ObfuscationParams::ShuffleMix { weights, b } => {
                two_way(weights, Scheme::ShuffleMix)?;
                if *b == 0 {
                    return Err(Error::InvalidParameter("block edge must be >= 1".into()));
                }
                Ok(())
            }
            ObfuscationParams::NoiseMix { weights, sigma } => {
                two_way(weights, Scheme::NoiseMix)?;
                if !sigma.is_finite() || *sigma < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "noise sigma must be >= 0, got {sigma}"
                    )));
                }
                Ok(())
            }
            ObfuscationParams::PixelizeMix { weights, s } => {
                two_way(weights, Scheme::PixelizeMix)?;
                if *s == 0 {
                    return Err(Error::InvalidParameter("square edge must be >= 1".into()));
                }
                Ok(())
            }
            ObfuscationParams::BlurMix {
                weights,
                sigma,
                ksize,
            } => {
                two_way(weights, Scheme::BlurMix)?;
                if ksize.is_multiple_of(2) {
                    return Err(Error::InvalidParameter(format!(
                        "blur kernel width must be odd, got {ksize}"
                    )));
                }
                if *ksize > 1 && (!sigma.is_finite() || *sigma <= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "blur sigma must be > 0, got {sigma}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Applies the configured scheme to the given sources.
pub fn apply(
    params: &ObfuscationParams,
    sources: &[(Image, Label)],
    rng: Rng,
) -> Result<ObfuscatedSample> {
    params.validate()?;
    let pair = || -> Result<SourcePair<'_>> {
        if sources.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "{} needs exactly 2 sources, got {}",
                params.scheme(),
                sources.len()
            )));
        }
        Ok((&sources[0], &sources[1]))
    };
    match params {
        ObfuscationParams::Mix { weights } => mix(sources, weights, rng),
        ObfuscationParams::GraftMix { weights, p } => {
            let (xi, xj) = pair()?;
            graft_mix(xi, xj, *p, weights, rng)
        }
        ObfuscationParams::ShuffleMix { weights, b } => {
            let (xi, xj) = pair()?;
            shuffle_mix(xi, xj, *b, weights, rng)
        }
        ObfuscationParams::NoiseMix { weights, sigma } => {
            let (xi, xj) = pair()?;
            noise_mix(xi, xj, *sigma, weights, rng)
        }
        ObfuscationParams::PixelizeMix { weights, s } => {
            let (xi, xj) = pair()?;
            pixelize_mix(xi, xj, *s, weights, rng)
        }
        ObfuscationParams::BlurMix {
            weights,
            sigma,
            ksize,
        } => {
            let (xi, xj) = pair()?;
            blur_mix(xi, xj, *sigma, *ksize, weights, rng)
        }
    }
}

/// Pixelwise convex combination. The label is the source with the largest
/// weight; exact ties are broken by a uniform draw from `rng`.
pub fn mix(
    sources: &[(Image, Label)],
    weights: &MixWeights,
    mut rng: Rng,
) -> Result<ObfuscatedSample> {
    if sources.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} sources but {} weights",
            sources.len(),
            weights.len()
        )));
    }
    let images: Vec<&Image> = sources.iter().map(|(img, _)| img).collect();
    let image = mix_pixels(&images, weights.as_slice())?;
    let labels: Vec<Label> = sources.iter().map(|(_, l)| *l).collect();
    let public_label = argmax_label(&labels, weights.as_slice(), &mut rng);
    Ok(sample(image, public_label, sources.len(), weights, &rng))
}

/// Grafting plus mixing: a mask of exactly `round(p * W * H)` pixel positions
/// keeps `x_i` untouched; everywhere else the two sources are mixed. The mask
/// is drawn uniformly without replacement and shared across channels. The
/// label is `y_i` iff `p + (1 - p) * lambda >= 1/2`.
pub fn graft_mix(
    xi: &(Image, Label),
    xj: &(Image, Label),
    p: f64,
    weights: &MixWeights,
    mut rng: Rng,
) -> Result<ObfuscatedSample> {
    require_two_way(weights)?;
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "graft fraction must lie in [0, 1], got {p}"
        )));
    }
    let lambda = weights.as_slice()[0];
    let keep = (p * xi.0.pixel_count() as f64).round() as usize;
    let mask = if keep > 0 {
        rng.sample_indices(xi.0.pixel_count(), keep)
    } else {
        Vec::new()
    };

    let mut image = mix_pixels(&[&xi.0, &xj.0], weights.as_slice())?;
    let channels = image.channels();
    let width = image.width();
    for &pos in &mask {
        let (x, y) = (pos % width, pos / width);
        for c in 0..channels {
            image.set(x, y, c, xi.0.get(x, y, c));
        }
    }

    let public_label = if p + (1.0 - p) * lambda >= 0.5 {
        xi.1
    } else {
        xj.1
    };
    Ok(sample(image, public_label, 2, weights, &rng))
}

/// Local pixel shuffling plus mixing: each source is independently shuffled
/// in `b x b` neighborhoods with fresh per-tile permutations, then mixed.
pub fn shuffle_mix(
    xi: &(Image, Label),
    xj: &(Image, Label),
    b: usize,
    weights: &MixWeights,
    mut rng: Rng,
) -> Result<ObfuscatedSample> {
    require_two_way(weights)?;
    let si = shuffle_blocks(&xi.0, b, &mut rng)?;
    let sj = shuffle_blocks(&xj.0, b, &mut rng)?;
    let image = mix_pixels(&[&si, &sj], weights.as_slice())?;
    let public_label = argmax_label(&[xi.1, xj.1], weights.as_slice(), &mut rng);
    Ok(sample(image, public_label, 2, weights, &rng))
}

/// Additive Gaussian noise plus mixing: independent per-pixel, per-channel
/// N(0, sigma²) noise is added to each source before mixing; the mixture is
/// clamped to `[0, 255]`.
pub fn noise_mix(
    xi: &(Image, Label),
    xj: &(Image, Label),
    sigma: f64,
    weights: &MixWeights,
    mut rng: Rng,
) -> Result<ObfuscatedSample> {
    require_two_way(weights)?;
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be >= 0, got {sigma}"
        )));
    }
    let image = if sigma == 0.0 {
        mix_pixels(&[&xi.0, &xj.0], weights.as_slice())?
    } else {
        let mut ni = xi.0.clone();
        add_noise(&mut ni, sigma, &mut rng);
        let mut nj = xj.0.clone();
        add_noise(&mut nj, sigma, &mut rng);
        mix_pixels(&[&ni, &nj], weights.as_slice())?
    };
    let public_label = argmax_label(&[xi.1, xj.1], weights.as_slice(), &mut rng);
    Ok(sample(image, public_label, 2, weights, &rng))
}

/// Pixelization plus mixing: each source is reduced to per-tile mean values
/// over an `s x s` grid, then mixed.
pub fn pixelize_mix(
    xi: &(Image, Label),
    xj: &(Image, Label),
    s: usize,
    weights: &MixWeights,
    mut rng: Rng,
) -> Result<ObfuscatedSample> {
    require_two_way(weights)?;
    let ri = pixelize(&xi.0, s)?;
    let rj = pixelize(&xj.0, s)?;
    let image = mix_pixels(&[&ri, &rj], weights.as_slice())?;
    let public_label = argmax_label(&[xi.1, xj.1], weights.as_slice(), &mut rng);
    Ok(sample(image, public_label, 2, weights, &rng))
}

/// Gaussian blur plus mixing. Blurring and mixing commute, so the result
/// equals blurring the plain mixture.
pub fn blur_mix(
    xi: &(Image, Label),
    xj: &(Image, Label),
    blur_sigma: f64,
    ksize: usize,
    weights: &MixWeights,
    mut rng: Rng,
) -> Result<ObfuscatedSample> {
    require_two_way(weights)?;
    let gi = gaussian_blur(&xi.0, blur_sigma, ksize)?;
    let gj = gaussian_blur(&xj.0, blur_sigma, ksize)?;
    let image = mix_pixels(&[&gi, &gj], weights.as_slice())?;
    let public_label = argmax_label(&[xi.1, xj.1], weights.as_slice(), &mut rng);
    Ok(sample(image, public_label, 2, weights, &rng))
}

/// Replaces each `s x s` tile by its per-channel mean. Remainder tiles use
/// their own mean.
pub fn pixelize(img: &Image, s: usize) -> Result<Image> {
    block_map(img, s, |_, _, tiles| {
        for tile in tiles.iter_mut() {
            let mean = tile.iter().sum::<f64>() / tile.len() as f64;
            tile.fill(mean);
        }
    })
}

/// Shuffles pixels within `b x b` tiles using a fresh permutation per tile,
/// shared across channels so color stays coherent.
pub fn shuffle_blocks(img: &Image, b: usize, rng: &mut Rng) -> Result<Image> {
    if b == 0 {
        return Err(Error::InvalidParameter("block edge must be >= 1".into()));
    }
    if b == 1 {
        return Ok(img.clone());
    }
    block_map(img, b, |tw, th, tiles| {
        let mut perm: Vec<usize> = (0..tw * th).collect();
        rng.shuffle(&mut perm);
        for tile in tiles.iter_mut() {
            let orig = tile.clone();
            for (dst, &src) in perm.iter().enumerate() {
                tile[dst] = orig[src];
            }
        }
    })
}

/// Grid search for the mixing weight that maximizes the smaller of the two
/// source distortions, i.e. the weight for which even the better-preserved
/// source stays hard to recognize. Ties resolve to the smallest candidate.
pub fn choose_lambda(xi: &Image, xj: &Image, metric: MetricId, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty lambda grid".into()));
    }
    if grid.iter().any(|l| !l.is_finite() || *l < 0.5 || *l >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda candidates must lie in [0.5, 1): {grid:?}"
        )));
    }
    let mut candidates = grid.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best: Option<(f64, f64)> = None; // (score, lambda)
    for &lambda in &candidates {
        let mixed = mix_pixels(&[xi, xj], &[lambda, 1.0 - lambda])?;
        let si = score(&mixed, xi, metric)?.value;
        let sj = score(&mixed, xj, metric)?.value;
        let s = si.min(sj);
        if best.is_none_or(|(bs, _)| s > bs) {
            best = Some((s, lambda));
        }
    }
    Ok(best.expect("non-empty grid").1)
}

/// Shared convex pixel combination; the common core of every operator. The
/// result is clamped to `[0, 255]` to absorb float round-off at the range
/// edges.
pub(crate) fn mix_pixels(images: &[&Image], weights: &[f64]) -> Result<Image> {
    debug_assert_eq!(images.len(), weights.len());
    let first = images[0];
    for img in &images[1..] {
        if !img.same_shape(first) {
            return Err(Error::DimensionMismatch(format!(
                "cannot mix {}x{}x{} with {}x{}x{}",
                first.width(),
                first.height(),
                first.channels(),
                img.width(),
                img.height(),
                img.channels()
            )));
        }
    }
    let mut acc = vec![0.0; first.sample_count()];
    for (img, &w) in images.iter().zip(weights) {
        for (a, &v) in acc.iter_mut().zip(img.data()) {
            *a += w * v;
        }
    }
    for a in &mut acc {
        *a = a.clamp(0.0, 255.0);
    }
    Ok(Image::from_parts(
        first.width(),
        first.height(),
        first.channels(),
        acc,
    ))
}

fn add_noise(img: &mut Image, sigma: f64, rng: &mut Rng) {
    let mut noise = vec![0.0; img.sample_count()];
    rng.fill_normal(sigma, &mut noise);
    for (v, z) in img.data_mut().iter_mut().zip(noise) {
        *v += z;
    }
}

/// The argmax label rule: the source with the largest weight wins; exact ties
/// are broken by a uniform seeded draw among the tied sources.
fn argmax_label(labels: &[Label], weights: &[f64], rng: &mut Rng) -> Label {
    debug_assert_eq!(labels.len(), weights.len());
    let max = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] == max).collect();
    let winner = if tied.len() == 1 {
        tied[0]
    } else {
        tied[rng.index(tied.len())]
    };
    labels[winner]
}

fn require_two_way(weights: &MixWeights) -> Result<()> {
    if weights.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "combined schemes are two-way, got {} weights",
            weights.len()
        )));
    }
    Ok(())
}

fn sample(
    image: Image,
    public_label: Label,
    n_sources: usize,
    weights: &MixWeights,
    rng: &Rng,
) -> ObfuscatedSample {
    ObfuscatedSample {
        image,
        public_label,
        private: Provenance {
            source_ids: (0..n_sources).map(|i| i.to_string()).collect(),
            weights: weights.clone(),
            seed_words: rng.identity(),
        },
    }
}

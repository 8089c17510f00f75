//! Full-reference privacy scores.
//!
//! Image quality metrics are re-purposed as privacy measures: the more an
//! obfuscated image differs from its sources, the more private it is. MSE is
//! unbounded; dSSIM, pHash distance, and dHaar live in `[0, 1]`; the Fréchet
//! distance operates on externally computed deep-feature sets and is
//! unbounded.

mod frechet;
mod haarpsi;
mod phash;
mod ssim;

pub use frechet::{frechet_distance, FeatureSet};
pub use haarpsi::dhaar;
pub use phash::{phash64, phash_distance};
pub use ssim::dssim;

use crate::error::{Error, Result};
use crate::imgcore::Image;
use crate::obfuscate::ObfuscatedSample;

/// Identifier of a privacy metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricId {
    Mse,
    Dssim,
    Phash,
    Dhaar,
    Fid,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::Mse,
        MetricId::Dssim,
        MetricId::Phash,
        MetricId::Dhaar,
        MetricId::Fid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::Mse => "mse",
            MetricId::Dssim => "dssim",
            MetricId::Phash => "phash",
            MetricId::Dhaar => "dhaar",
            MetricId::Fid => "fid",
        }
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(MetricId::Mse),
            "dssim" => Ok(MetricId::Dssim),
            "phash" => Ok(MetricId::Phash),
            "dhaar" => Ok(MetricId::Dhaar),
            "fid" => Ok(MetricId::Fid),
            other => Err(Error::InvalidParameter(format!("unknown metric '{other}'"))),
        }
    }
}

/// A metric value. Higher means more private.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyScore {
    pub metric: MetricId,
    pub value: f64,
}

/// Mean squared difference over all pixel-channel samples.
pub fn mse(a: &Image, b: &Image) -> Result<PrivacyScore> {
    check_same_shape(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(PrivacyScore {
        metric: MetricId::Mse,
        value: sum / a.sample_count() as f64,
    })
}

/// Dispatches an image pair to the named metric. FID operates on feature
/// sets, not images, and is rejected here.
pub fn score(a: &Image, b: &Image, metric: MetricId) -> Result<PrivacyScore> {
    match metric {
        MetricId::Mse => mse(a, b),
        MetricId::Dssim => dssim(a, b),
        MetricId::Phash => Ok(phash_distance(a, b)),
        MetricId::Dhaar => dhaar(a, b),
        MetricId::Fid => Err(Error::InvalidParameter(
            "fid requires feature sets; use frechet_distance".into(),
        )),
    }
}

/// Scores an obfuscated sample against its source images and returns the
/// minimum: the sample is only as private as its most recognizable source.
pub fn score_sample(
    sample: &ObfuscatedSample,
    sources: &[Image],
    metric: MetricId,
) -> Result<PrivacyScore> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter(
            "score_sample needs at least one source".into(),
        ));
    }
    let mut min = f64::INFINITY;
    for src in sources {
        let s = score(&sample.image, src, metric)?;
        min = min.min(s.value);
    }
    Ok(PrivacyScore { metric, value: min })
}

pub(crate) fn check_same_shape(a: &Image, b: &Image) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::{Label, Rng};
    use crate::obfuscate::{mix, MixWeights};

    fn random_image(rng: &mut Rng, w: usize, h: usize, c: usize) -> Image {
        let data = (0..w * h * c).map(|_| rng.uniform() * 255.0).collect();
        Image::new(w, h, c, data).unwrap()
    }

    #[test]
    fn mse_identical_is_zero() {
        let mut rng = Rng::new(40, 0);
        let img = random_image(&mut rng, 12, 12, 3);
        assert_eq!(mse(&img, &img).unwrap().value, 0.0);
    }

    #[test]
    fn mse_constant_offset() {
        let a = Image::constant(8, 8, 1, 100.0);
        let b = Image::constant(8, 8, 1, 110.0);
        assert!((mse(&a, &b).unwrap().value - 100.0).abs() < 1e-12);
    }

    #[test]
    fn mse_half_saturated() {
        // all-0 vs half 0 half 255: mean square is 255^2 / 2.
        let mut data = vec![0.0; 16];
        for v in data.iter_mut().take(8) {
            *v = 255.0;
        }
        let a = Image::zeros(4, 4, 1);
        let b = Image::new(4, 4, 1, data).unwrap();
        assert!((mse(&a, &b).unwrap().value - 32512.5).abs() < 1e-9);
    }

    #[test]
    fn mse_rejects_mismatch() {
        let a = Image::zeros(4, 4, 1);
        let b = Image::zeros(4, 5, 1);
        assert!(mse(&a, &b).is_err());
        let c = Image::zeros(4, 4, 3);
        assert!(mse(&a, &c).is_err());
    }

    #[test]
    fn score_dispatch_matches_direct_calls() {
        let mut rng = Rng::new(41, 0);
        let a = random_image(&mut rng, 32, 32, 3);
        let b = random_image(&mut rng, 32, 32, 3);
        assert_eq!(
            score(&a, &b, MetricId::Phash).unwrap().value,
            phash_distance(&a, &b).value
        );
        assert_eq!(score(&a, &a, MetricId::Dssim).unwrap().value, 0.0);
        assert_eq!(score(&a, &a, MetricId::Mse).unwrap().value, 0.0);
        assert!(score(&a, &b, MetricId::Fid).is_err());
    }

    #[test]
    fn score_sample_is_min_over_sources() {
        let mut rng = Rng::new(42, 0);
        let xi = (random_image(&mut rng, 16, 16, 1), Label::new(0, 2).unwrap());
        let xj = (random_image(&mut rng, 16, 16, 1), Label::new(1, 2).unwrap());
        let w = MixWeights::two(0.8).unwrap();
        let sample = mix(&[xi.clone(), xj.clone()], &w, Rng::new(43, 0)).unwrap();

        let si = mse(&sample.image, &xi.0).unwrap().value;
        let sj = mse(&sample.image, &xj.0).unwrap().value;
        let agg = score_sample(&sample, &[xi.0.clone(), xj.0.clone()], MetricId::Mse)
            .unwrap()
            .value;
        assert_eq!(agg, si.min(sj));

        let single = score_sample(&sample, std::slice::from_ref(&xi.0), MetricId::Mse)
            .unwrap()
            .value;
        assert_eq!(single, si);
        assert!(score_sample(&sample, &[], MetricId::Mse).is_err());
    }

    #[test]
    fn score_sample_degenerate_weights_give_zero() {
        let mut rng = Rng::new(44, 0);
        let xi = (random_image(&mut rng, 16, 16, 1), Label::new(0, 2).unwrap());
        let xj = (random_image(&mut rng, 16, 16, 1), Label::new(1, 2).unwrap());
        let w = MixWeights::new(vec![1.0, 0.0]).unwrap();
        let sample = mix(&[xi.clone(), xj], &w, Rng::new(45, 0)).unwrap();
        let s = score_sample(&sample, &[xi.0], MetricId::Dssim).unwrap();
        assert!(s.value.abs() < 1e-12);
    }
}

//! Structural similarity, reported as the dissimilarity dSSIM = 1 - SSIM.
//!
//! The index uses the standard construction: an 11x11 Gaussian window with
//! sigma 1.5, Gaussian-weighted local means, variances, and covariance at
//! every position where the window fits entirely, stabilizers
//! C1 = (K1 L)^2 and C2 = (K2 L)^2 with K1 = 0.01, K2 = 0.03, L = 255, and
//! the plain mean of the per-window index. Color images are compared on
//! BT.601 luminance. The raw index can leave `[0, 1]`, so it is clamped
//! before the dissimilarity is formed.

use crate::error::{Error, Result};
use crate::imgcore::{to_grayscale, Image};
use crate::metrics::{check_same_shape, MetricId, PrivacyScore};

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const L: f64 = 255.0;

/// Dissimilarity 1 - SSIM, in `[0, 1]`.
pub fn dssim(a: &Image, b: &Image) -> Result<PrivacyScore> {
    check_same_shape(a, b)?;
    if a.width() < WINDOW || a.height() < WINDOW {
        return Err(Error::TooSmall(format!(
            "ssim needs at least {WINDOW}x{WINDOW}, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let ga = to_grayscale(a);
    let gb = to_grayscale(b);
    let index = ssim_index(&ga, &gb).clamp(0.0, 1.0);
    Ok(PrivacyScore {
        metric: MetricId::Dssim,
        value: 1.0 - index,
    })
}

fn ssim_index(a: &Image, b: &Image) -> f64 {
    let c1 = (K1 * L) * (K1 * L);
    let c2 = (K2 * L) * (K2 * L);
    let kernel = gaussian_window();

    let mu_a = windowed_mean(a, &kernel);
    let mu_b = windowed_mean(b, &kernel);
    let m_aa = windowed_mean(&product(a, a), &kernel);
    let m_bb = windowed_mean(&product(b, b), &kernel);
    let m_ab = windowed_mean(&product(a, b), &kernel);

    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = m_aa[i] - ma * ma;
        let vb = m_bb[i] - mb * mb;
        let cov = m_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        sum += num / den;
    }
    sum / mu_a.len() as f64
}

fn gaussian_window() -> Vec<f64> {
    let half = (WINDOW / 2) as i64;
    let mut kernel: Vec<f64> = (0..WINDOW)
        .map(|i| {
            let d = (i as i64 - half) as f64;
            (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    kernel
}

fn product(a: &Image, b: &Image) -> Image {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Image::from_parts(a.width(), a.height(), 1, data)
}

/// Separable Gaussian-weighted local mean, valid positions only. Returns a
/// row-major buffer of size `(W - 10) * (H - 10)`.
fn windowed_mean(img: &Image, kernel: &[f64]) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let ow = w - WINDOW + 1;
    let oh = h - WINDOW + 1;

    // Horizontal pass over full rows.
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * img.get(x + k, y, 0);
            }
            horiz[y * ow + x] = acc;
        }
    }

    // Vertical pass.
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * horiz[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::Rng;

    fn random_image(rng: &mut Rng, w: usize, h: usize, c: usize) -> Image {
        let data = (0..w * h * c).map(|_| rng.uniform() * 255.0).collect();
        Image::new(w, h, c, data).unwrap()
    }

    #[test]
    fn identical_images_score_zero() {
        let mut rng = Rng::new(50, 0);
        let img = random_image(&mut rng, 24, 24, 3);
        assert!(dssim(&img, &img).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn dssim_is_symmetric() {
        let mut rng = Rng::new(51, 0);
        let a = random_image(&mut rng, 32, 20, 1);
        let b = random_image(&mut rng, 32, 20, 1);
        let ab = dssim(&a, &b).unwrap().value;
        let ba = dssim(&b, &a).unwrap().value;
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn constant_images_match_closed_form() {
        // For constant signals all variances vanish:
        // SSIM = (2 mu_a mu_b + C1) C2 / ((mu_a^2 + mu_b^2 + C1) C2).
        let a = Image::zeros(16, 16, 1);
        let b = Image::constant(16, 16, 1, 255.0);
        let c1 = (K1 * L) * (K1 * L);
        let expected_ssim = c1 / (255.0 * 255.0 + c1);
        let got = dssim(&a, &b).unwrap().value;
        assert!((got - (1.0 - expected_ssim)).abs() < 1e-12);
    }

    #[test]
    fn too_small_image_is_rejected() {
        let img = Image::zeros(10, 16, 1);
        assert!(matches!(dssim(&img, &img), Err(Error::TooSmall(_))));
    }

    #[test]
    fn value_stays_in_unit_range() {
        let mut rng = Rng::new(52, 0);
        for _ in 0..5 {
            let a = random_image(&mut rng, 16, 16, 1);
            let b = random_image(&mut rng, 16, 16, 1);
            let v = dssim(&a, &b).unwrap().value;
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

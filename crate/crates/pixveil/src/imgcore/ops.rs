//! Shared raster primitives: grayscale conversion, bilinear resize, Gaussian
//! convolution, and tiled block operations.

use crate::error::{Error, Result};
use crate::imgcore::Image;

/// ITU-R BT.601 luma weights.
const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Converts to a single luminance channel. Grayscale input is returned
/// unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| LUMA_R * p[0] + LUMA_G * p[1] + LUMA_B * p[2])
        .collect();
    Image::from_parts(img.width(), img.height(), 1, data)
}

/// Bilinear resize with the half-pixel-center coordinate convention.
/// Output intensities never leave the input's `[min, max]` range.
pub fn resize_bilinear(img: &Image, width: usize, height: usize) -> Result<Image> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(
            "resize target must be at least 1x1".into(),
        ));
    }
    let (sw, sh, c) = (img.width(), img.height(), img.channels());
    let scale_x = sw as f64 / width as f64;
    let scale_y = sh as f64 / height as f64;

    let mut data = vec![0.0; width * height * c];
    for dy in 0..height {
        let sy = (dy as f64 + 0.5) * scale_y - 0.5;
        let y0 = sy.floor();
        let ty = sy - y0;
        let iy0 = (y0 as i64).clamp(0, sh as i64 - 1) as usize;
        let iy1 = ((y0 as i64) + 1).clamp(0, sh as i64 - 1) as usize;
        for dx in 0..width {
            let sx = (dx as f64 + 0.5) * scale_x - 0.5;
            let x0 = sx.floor();
            let tx = sx - x0;
            let ix0 = (x0 as i64).clamp(0, sw as i64 - 1) as usize;
            let ix1 = ((x0 as i64) + 1).clamp(0, sw as i64 - 1) as usize;
            for ch in 0..c {
                let top = (1.0 - tx) * img.get(ix0, iy0, ch) + tx * img.get(ix1, iy0, ch);
                let bottom = (1.0 - tx) * img.get(ix0, iy1, ch) + tx * img.get(ix1, iy1, ch);
                data[(dy * width + dx) * c + ch] = (1.0 - ty) * top + ty * bottom;
            }
        }
    }
    Ok(Image::from_parts(width, height, c, data))
}

/// The kernel-width to standard-deviation coupling used when a blur strength
/// is given only as an odd kernel size `k`:
/// `sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn sigma_for_ksize(ksize: usize) -> f64 {
    0.3 * ((ksize as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

/// Separable Gaussian blur with edge replication. The kernel is normalized to
/// sum 1, so constant images pass through unchanged. `ksize == 1` is the
/// identity regardless of sigma.
pub fn gaussian_blur(img: &Image, sigma: f64, ksize: usize) -> Result<Image> {
    if ksize.is_multiple_of(2) || ksize == 0 {
        return Err(Error::InvalidParameter(format!(
            "blur kernel width must be odd and >= 1, got {ksize}"
        )));
    }
    if ksize == 1 {
        return Ok(img.clone());
    }
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "blur sigma must be > 0 for kernel width {ksize}, got {sigma}"
        )));
    }
    let half = (ksize / 2) as i64;
    let mut kernel: Vec<f64> = (0..ksize)
        .map(|i| {
            let d = i as i64 - half;
            (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    Ok(sepconv_replicate(img, &kernel))
}

/// Separable convolution with an odd symmetric kernel, replicating edge
/// pixels at the borders. Horizontal pass, then vertical.
pub(crate) fn sepconv_replicate(img: &Image, kernel: &[f64]) -> Image {
    debug_assert!(kernel.len() % 2 == 1);
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let half = (kernel.len() / 2) as i64;

    let mut horiz = vec![0.0; img.sample_count()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, &kv) in kernel.iter().enumerate() {
                    let sx = (x as i64 + k as i64 - half).clamp(0, w as i64 - 1) as usize;
                    acc += kv * img.get(sx, y, ch);
                }
                horiz[(y * w + x) * c + ch] = acc;
            }
        }
    }

    let tmp = Image::from_parts(w, h, c, horiz);
    let mut out = vec![0.0; img.sample_count()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (k, &kv) in kernel.iter().enumerate() {
                    let sy = (y as i64 + k as i64 - half).clamp(0, h as i64 - 1) as usize;
                    acc += kv * tmp.get(x, sy, ch);
                }
                out[(y * w + x) * c + ch] = acc;
            }
        }
    }
    Image::from_parts(w, h, c, out)
}

/// Uniform window mean over `window x window` with edge replication.
pub(crate) fn box_filter(img: &Image, window: usize) -> Image {
    debug_assert!(window % 2 == 1);
    let kernel = vec![1.0 / window as f64; window];
    sepconv_replicate(img, &kernel)
}

/// Partitions the image into a grid of `b x b` tiles anchored at (0,0) and
/// applies `f` to each tile. Right and bottom remainder tiles are smaller
/// rather than padded. `f` receives the tile width, tile height, and one
/// row-major value buffer per channel, and may rewrite the buffers in place.
///
/// Tiles are visited top-to-bottom, left-to-right, which fixes the order of
/// any randomness consumed by `f`.
pub fn block_map<F>(img: &Image, b: usize, mut f: F) -> Result<Image>
where
    F: FnMut(usize, usize, &mut [Vec<f64>]),
{
    if b == 0 {
        return Err(Error::InvalidParameter("block edge must be >= 1".into()));
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    let mut out = img.clone();

    for ty in (0..h).step_by(b) {
        let th = b.min(h - ty);
        for tx in (0..w).step_by(b) {
            let tw = b.min(w - tx);
            let mut tiles: Vec<Vec<f64>> = (0..c)
                .map(|ch| {
                    let mut vals = Vec::with_capacity(tw * th);
                    for y in ty..ty + th {
                        for x in tx..tx + tw {
                            vals.push(img.get(x, y, ch));
                        }
                    }
                    vals
                })
                .collect();
            f(tw, th, &mut tiles);
            for (ch, vals) in tiles.iter().enumerate() {
                debug_assert_eq!(vals.len(), tw * th);
                for (i, &v) in vals.iter().enumerate() {
                    out.set(tx + i % tw, ty + i / tw, ch, v);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_identity_on_gray() {
        let img = Image::new(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(to_grayscale(&img), img);
    }

    #[test]
    fn grayscale_weights_sum_to_one() {
        let img = Image::constant(3, 2, 3, 120.0);
        let gray = to_grayscale(&img);
        for &v in gray.data() {
            assert!((v - 120.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grayscale_pure_red() {
        let img = Image::new(1, 1, 3, vec![255.0, 0.0, 0.0]).unwrap();
        let gray = to_grayscale(&img);
        assert!((gray.data()[0] - 76.245).abs() < 1e-9);
    }

    #[test]
    fn resize_same_size_is_identity() {
        let img = Image::new(3, 2, 1, vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]).unwrap();
        let out = resize_bilinear(&img, 3, 2).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = Image::constant(5, 7, 3, 42.0);
        let out = resize_bilinear(&img, 13, 3).unwrap();
        for &v in out.data() {
            assert!((v - 42.0).abs() < 1e-9);
        }
    }

    #[test]
    fn resize_upsamples_monotone_ramp() {
        // Half-pixel centers: [0,255] -> [0, 63.75, 191.25, 255].
        let img = Image::new(2, 1, 1, vec![0.0, 255.0]).unwrap();
        let out = resize_bilinear(&img, 4, 1).unwrap();
        let d = out.data();
        assert!((d[0] - 0.0).abs() < 1e-9);
        assert!((d[1] - 63.75).abs() < 1e-9);
        assert!((d[2] - 191.25).abs() < 1e-9);
        assert!((d[3] - 255.0).abs() < 1e-9);
        for pair in d.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn resize_stays_within_input_range() {
        let mut rng = crate::imgcore::Rng::new(5, 0);
        let data: Vec<f64> = (0..9 * 6).map(|_| rng.uniform() * 255.0).collect();
        let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let img = Image::new(9, 6, 1, data).unwrap();
        let out = resize_bilinear(&img, 20, 14).unwrap();
        for &v in out.data() {
            assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }
    }

    #[test]
    fn blur_ksize_one_is_identity() {
        let img = Image::new(2, 2, 1, vec![9.0, 1.0, 4.0, 7.0]).unwrap();
        assert_eq!(gaussian_blur(&img, 0.0, 1).unwrap(), img);
    }

    #[test]
    fn blur_preserves_constant() {
        let img = Image::constant(8, 8, 3, 77.0);
        let out = gaussian_blur(&img, 2.0, 5).unwrap();
        for &v in out.data() {
            assert!((v - 77.0).abs() < 1e-9);
        }
    }

    #[test]
    fn blur_leaves_linear_ramp_interior_unchanged() {
        // A symmetric normalized kernel reproduces affine signals exactly;
        // border replication only perturbs the outermost half-kernel band.
        let mut img = Image::zeros(16, 16, 1);
        for y in 0..16 {
            for x in 0..16 {
                img.set(x, y, 0, 10.0 + 3.0 * x as f64 + 2.0 * y as f64);
            }
        }
        let out = gaussian_blur(&img, 1.2, 5).unwrap();
        for y in 2..14 {
            for x in 2..14 {
                assert!((out.get(x, y, 0) - img.get(x, y, 0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn blur_rejects_even_kernel() {
        let img = Image::zeros(4, 4, 1);
        assert!(gaussian_blur(&img, 1.0, 4).is_err());
        assert!(gaussian_blur(&img, 0.0, 3).is_err());
    }

    #[test]
    fn blur_impulse_center_matches_kernel() {
        let mut img = Image::zeros(7, 7, 1);
        img.set(3, 3, 0, 1.0);
        let out = gaussian_blur(&img, 1.0, 3).unwrap();
        // 3-tap kernel: [e^-1/2, 1, e^-1/2] / (1 + 2 e^-1/2); the separable
        // impulse response at the center is the squared center weight.
        let w0 = 1.0 / (1.0 + 2.0 * (-0.5f64).exp());
        assert!((out.get(3, 3, 0) - w0 * w0).abs() < 1e-12);
        assert!((out.get(2, 3, 0) - w0 * w0 * (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn block_map_identity_when_b_is_one() {
        let img = Image::new(3, 3, 1, (0..9).map(f64::from).collect()).unwrap();
        let out = block_map(&img, 1, |_, _, _| {}).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn block_map_single_tile_when_b_covers_image() {
        let img = Image::zeros(4, 3, 1);
        let mut calls = 0;
        let _ = block_map(&img, 8, |tw, th, _| {
            calls += 1;
            assert_eq!((tw, th), (4, 3));
        })
        .unwrap();
        assert_eq!(calls, 1);
    }

    #[test]
    fn block_map_remainder_tile_shapes() {
        let img = Image::zeros(5, 5, 1);
        let mut shapes: Vec<(usize, usize)> = Vec::new();
        let _ = block_map(&img, 2, |tw, th, _| shapes.push((tw, th))).unwrap();
        assert_eq!(shapes.len(), 9);
        let count = |s: (usize, usize)| shapes.iter().filter(|&&x| x == s).count();
        assert_eq!(count((2, 2)), 4);
        assert_eq!(count((1, 2)), 2);
        assert_eq!(count((2, 1)), 2);
        assert_eq!(count((1, 1)), 1);
    }

    #[test]
    fn sigma_coupling_reference_points() {
        assert!((sigma_for_ksize(17) - (0.3 * 7.0 + 0.8)).abs() < 1e-12);
        assert!((sigma_for_ksize(3) - 0.8).abs() < 1e-12);
    }
}

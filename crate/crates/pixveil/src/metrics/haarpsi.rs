//! Haar wavelet-based perceptual similarity, reported as dHaar = 1 - HaarPSI.
//!
//! Construction: both images are 2x-subsampled (2x2 mean filter, stride 2),
//! decomposed with three scales of Haar filters in two orientations, and
//! compared per pixel. The local similarity combines the first two scales via
//! `(2 |g1| |g2| + C) / (g1^2 + g2^2 + C)` with `C = 30`; weights come from
//! the third-scale magnitude maxima. Local similarities are squashed with a
//! logistic of slope `alpha = 4.2`, averaged under the weights, and mapped
//! back through the inverse logistic; the square of that value is the index.
//! Color images add a chroma similarity channel from the I/Q planes.
//!
//! Convolutions are zero-padded and centered the same way as a "same"-mode
//! full convolution, which keeps the coefficient grids aligned with the
//! original pixel grid.

use crate::error::{Error, Result};
use crate::imgcore::Image;
use crate::metrics::{check_same_shape, MetricId, PrivacyScore};

const C: f64 = 30.0;
const ALPHA: f64 = 4.2;
const SCALES: usize = 3;
const MIN_SIDE: usize = 8;

/// Dissimilarity 1 - HaarPSI, in `[0, 1]`.
pub fn dhaar(a: &Image, b: &Image) -> Result<PrivacyScore> {
    check_same_shape(a, b)?;
    if a.width() < MIN_SIDE || a.height() < MIN_SIDE {
        return Err(Error::TooSmall(format!(
            "haarpsi needs at least {MIN_SIDE}x{MIN_SIDE}, got {}x{}",
            a.width(),
            a.height()
        )));
    }
    let index = haarpsi_index(a, b).clamp(0.0, 1.0);
    Ok(PrivacyScore {
        metric: MetricId::Dhaar,
        value: 1.0 - index,
    })
}

fn haarpsi_index(a: &Image, b: &Image) -> f64 {
    let color = a.channels() == 3;
    let (ya, ia, qa) = yiq_planes(a);
    let (yb, ib, qb) = yiq_planes(b);

    let ya = subsample(&ya);
    let yb = subsample(&yb);

    let coeffs_a = haar_decompose(&ya);
    let coeffs_b = haar_decompose(&yb);

    let n = ya.v.len();
    let mut weighted = 0.0;
    let mut weight_sum = 0.0;
    let mut plain = 0.0;
    let mut plain_n = 0.0;

    let mut orientation_weights = vec![0.0; 2 * n];
    for orientation in 0..2 {
        let base = orientation * SCALES;
        for px in 0..n {
            let g1a = coeffs_a[base].v[px].abs();
            let g1b = coeffs_b[base].v[px].abs();
            let g2a = coeffs_a[base + 1].v[px].abs();
            let g2b = coeffs_b[base + 1].v[px].abs();
            let local = (similarity(g1a, g1b) + similarity(g2a, g2b)) / 2.0;

            let w = coeffs_a[base + 2].v[px]
                .abs()
                .max(coeffs_b[base + 2].v[px].abs());
            orientation_weights[orientation * n + px] = w;

            let s = sigmoid(local);
            weighted += s * w;
            weight_sum += w;
            plain += s;
            plain_n += 1.0;
        }
    }

    if color {
        let ca = mean2_abs(&subsample(&ia));
        let cb = mean2_abs(&subsample(&ib));
        let da = mean2_abs(&subsample(&qa));
        let db = mean2_abs(&subsample(&qb));
        for px in 0..n {
            let sim_i = similarity(ca.v[px], cb.v[px]);
            let sim_q = similarity(da.v[px], db.v[px]);
            let local = (sim_i + sim_q) / 2.0;
            let w = (orientation_weights[px] + orientation_weights[n + px]) / 2.0;
            let s = sigmoid(local);
            weighted += s * w;
            weight_sum += w;
            plain += s;
            plain_n += 1.0;
        }
    }

    // Degenerate case: no wavelet energy anywhere (constant images). Fall
    // back to the unweighted mean so identical inputs still score 1.
    let pooled = if weight_sum > 0.0 {
        weighted / weight_sum
    } else {
        plain / plain_n
    };
    let v = logit(pooled);
    v * v
}

#[inline]
fn similarity(x: f64, y: f64) -> f64 {
    (2.0 * x * y + C) / (x * x + y * y + C)
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-ALPHA * v).exp())
}

#[inline]
fn logit(v: f64) -> f64 {
    (v / (1.0 - v)).ln() / ALPHA
}

struct Grid {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

fn yiq_planes(img: &Image) -> (Grid, Grid, Grid) {
    let (w, h) = (img.width(), img.height());
    if img.channels() == 1 {
        return (
            Grid {
                w,
                h,
                v: img.data().to_vec(),
            },
            Grid { w, h, v: vec![] },
            Grid { w, h, v: vec![] },
        );
    }
    let mut y = Vec::with_capacity(w * h);
    let mut i = Vec::with_capacity(w * h);
    let mut q = Vec::with_capacity(w * h);
    for p in img.data().chunks_exact(3) {
        let (r, g, b) = (p[0], p[1], p[2]);
        y.push(0.299 * r + 0.587 * g + 0.114 * b);
        i.push(0.596 * r - 0.274 * g - 0.322 * b);
        q.push(0.211 * r - 0.523 * g + 0.312 * b);
    }
    (
        Grid { w, h, v: y },
        Grid { w, h, v: i },
        Grid { w, h, v: q },
    )
}

/// 2x2 mean filter followed by stride-2 decimation.
fn subsample(g: &Grid) -> Grid {
    let filtered = conv2_same(g, &[0.5, 0.5], &[0.5, 0.5]);
    let ow = g.w.div_ceil(2);
    let oh = g.h.div_ceil(2);
    let mut v = Vec::with_capacity(ow * oh);
    for y in (0..g.h).step_by(2) {
        for x in (0..g.w).step_by(2) {
            v.push(filtered.v[y * g.w + x]);
        }
    }
    Grid { w: ow, h: oh, v }
}

/// 2x2 mean filter, absolute values (chroma preprocessing).
fn mean2_abs(g: &Grid) -> Grid {
    let mut out = conv2_same(g, &[0.5, 0.5], &[0.5, 0.5]);
    for v in &mut out.v {
        *v = v.abs();
    }
    out
}

/// Haar coefficients for three scales in two orientations. Index layout:
/// `[o1s1, o1s2, o1s3, o2s1, o2s2, o2s3]`.
fn haar_decompose(g: &Grid) -> Vec<Grid> {
    let mut out = Vec::with_capacity(2 * SCALES);
    for orientation in 0..2 {
        for scale in 1..=SCALES {
            let m = 1usize << scale;
            let mag = 1.0 / m as f64;
            let signed: Vec<f64> = (0..m).map(|u| if u < m / 2 { -mag } else { mag }).collect();
            let ones: Vec<f64> = vec![1.0; m];
            let coeff = if orientation == 0 {
                conv2_same(g, &signed, &ones)
            } else {
                conv2_same(g, &ones, &signed)
            };
            out.push(coeff);
        }
    }
    out
}

/// Zero-padded separable 2-D convolution with "same"-mode centering: the
/// output pixel (i, j) is full-convolution pixel (i + (kh-1)/2, j + (kw-1)/2).
fn conv2_same(g: &Grid, col: &[f64], row: &[f64]) -> Grid {
    let (w, h) = (g.w, g.h);
    let row_off = (row.len() - 1) / 2;
    let col_off = (col.len() - 1) / 2;

    // Horizontal pass (true convolution: kernel indices run backwards).
    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (p, &kv) in row.iter().enumerate() {
                let sx = x as i64 + row_off as i64 - p as i64;
                if sx >= 0 && (sx as usize) < w {
                    acc += kv * g.v[y * w + sx as usize];
                }
            }
            horiz[y * w + x] = acc;
        }
    }

    // Vertical pass.
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (p, &kv) in col.iter().enumerate() {
                let sy = y as i64 + col_off as i64 - p as i64;
                if sy >= 0 && (sy as usize) < h {
                    acc += kv * horiz[sy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    Grid { w, h, v: out }
}

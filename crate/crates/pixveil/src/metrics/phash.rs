//! Perceptual hashing from low-frequency DCT coefficients.
//!
//! Each image is reduced to a 64-bit fingerprint: grayscale, bilinear resize
//! to 32x32, 2-D DCT-II, keep the top-left 8x8 low-frequency block, threshold
//! each coefficient against the mean of the block excluding the DC term. The
//! distance between two fingerprints is the normalized Hamming distance.
//!
//! Excluding the DC term from the mean makes the hash invariant to global
//! brightness shifts: a constant offset moves only the DC coefficient.

use crate::imgcore::{resize_bilinear, to_grayscale, Image};
use crate::metrics::{MetricId, PrivacyScore};

const DCT_SIZE: usize = 32;
const BLOCK: usize = 8;

/// The 64-bit perceptual fingerprint of an image.
pub fn phash64(img: &Image) -> u64 {
    let gray = to_grayscale(img);
    let small = resize_bilinear(&gray, DCT_SIZE, DCT_SIZE).expect("fixed 32x32 target is valid");
    let coeffs = dct2(small.data());

    let mut block = [0.0; BLOCK * BLOCK];
    for y in 0..BLOCK {
        for x in 0..BLOCK {
            block[y * BLOCK + x] = coeffs[y * DCT_SIZE + x];
        }
    }
    let mean = block[1..].iter().sum::<f64>() / (BLOCK * BLOCK - 1) as f64;

    let mut hash = 0u64;
    for (i, &c) in block.iter().enumerate() {
        if c > mean {
            hash |= 1 << i;
        }
    }
    hash
}

/// Normalized Hamming distance between the two fingerprints, in
/// `{0, 1/64, ..., 1}`.
pub fn phash_distance(a: &Image, b: &Image) -> PrivacyScore {
    let d = (phash64(a) ^ phash64(b)).count_ones() as f64 / 64.0;
    PrivacyScore {
        metric: MetricId::Phash,
        value: d,
    }
}

/// Unnormalized 2-D DCT-II of a 32x32 row-major buffer. Uniform scale factors
/// are irrelevant for mean-thresholding and are omitted.
fn dct2(input: &[f64]) -> Vec<f64> {
    debug_assert_eq!(input.len(), DCT_SIZE * DCT_SIZE);
    let table = cos_table();

    // Rows.
    let mut rows = vec![0.0; DCT_SIZE * DCT_SIZE];
    for y in 0..DCT_SIZE {
        for k in 0..DCT_SIZE {
            let mut acc = 0.0;
            for n in 0..DCT_SIZE {
                acc += input[y * DCT_SIZE + n] * table[k * DCT_SIZE + n];
            }
            rows[y * DCT_SIZE + k] = acc;
        }
    }
    // Columns.
    let mut out = vec![0.0; DCT_SIZE * DCT_SIZE];
    for k in 0..DCT_SIZE {
        for x in 0..DCT_SIZE {
            let mut acc = 0.0;
            for n in 0..DCT_SIZE {
                acc += rows[n * DCT_SIZE + x] * table[k * DCT_SIZE + n];
            }
            out[k * DCT_SIZE + x] = acc;
        }
    }
    out
}

fn cos_table() -> Vec<f64> {
    let mut table = vec![0.0; DCT_SIZE * DCT_SIZE];
    for k in 0..DCT_SIZE {
        for n in 0..DCT_SIZE {
            table[k * DCT_SIZE + n] = (std::f64::consts::PI * (2.0 * n as f64 + 1.0) * k as f64
                / (2.0 * DCT_SIZE as f64))
                .cos();
        }
    }
    table
}

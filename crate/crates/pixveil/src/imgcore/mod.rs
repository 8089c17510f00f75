//! Image representation, deterministic randomness, raster I/O, and the shared
//! raster primitives the obfuscation operators and metrics are built from.
//!
//! Intensities live on the 0..255 scale as `f64`, regardless of storage
//! bit depth, so that metric values and noise magnitudes stay directly
//! comparable to 8-bit pixel units.

mod io;
mod ops;
mod rng;

pub use io::{load_image, load_image_with, save_image, AlphaPolicy};
pub use ops::{block_map, gaussian_blur, resize_bilinear, sigma_for_ksize, to_grayscale};
pub use rng::Rng;

pub(crate) use ops::box_filter;

use crate::error::{Error, Result};

/// A class label within a fixed label space.
///
/// All label rules in the obfuscation operators reduce to picking one of the
/// source classes, so the label is stored as a plain class index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Label {
    class_id: usize,
    num_classes: usize,
}

impl Label {
    pub fn new(class_id: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidParameter(format!(
                "label space needs at least 2 classes, got {num_classes}"
            )));
        }
        if class_id >= num_classes {
            return Err(Error::InvalidParameter(format!(
                "class id {class_id} out of range for {num_classes} classes"
            )));
        }
        Ok(Label {
            class_id,
            num_classes,
        })
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// A raster of finite `f64` intensities, row-major, interleaved channels.
///
/// Nominal range is `[0, 255]`; intermediate operator stages may exceed it
/// (e.g. before noise clamping), but every stored value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from raw samples, validating shape and finiteness.
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(
                "image dimensions must be nonzero".into(),
            ));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidParameter(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(channels))
            .ok_or_else(|| Error::InvalidParameter("image dimensions overflow".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "data length {} does not match {}x{}x{}",
                data.len(),
                width,
                height,
                channels
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "image contains non-finite intensities".into(),
            ));
        }
        Ok(Image {
            width,
            height,
            channels,
            data,
        })
    }

    /// Internal constructor for data we produced ourselves.
    pub(crate) fn from_parts(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Image {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Image::from_parts(
            width,
            height,
            channels,
            vec![0.0; width * height * channels],
        )
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Self {
        Image::from_parts(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of pixels (width × height).
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Number of stored samples (width × height × channels).
    pub fn sample_count(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// True when `other` has identical width, height, and channel count.
    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Clamps every sample to `[0, 255]` in place.
    pub fn clamp_to_range(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 255.0);
        }
    }

    /// Rounds half-to-even and clamps, i.e. exactly the quantization applied
    /// when the image is written out as 8-bit PNG. An image that has gone
    /// through this round-trips bit-exactly through save/load.
    pub fn quantize(&mut self) {
        for v in &mut self.data {
            *v = v.round_ties_even().clamp(0.0, 255.0);
        }
    }
}

//! 8-bit PNG input and output.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};
use crate::imgcore::Image;

/// What to do with an alpha channel on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaPolicy {
    /// Drop the alpha plane and keep the color samples as-is.
    #[default]
    Strip,
    /// Refuse images that carry alpha.
    Reject,
}

impl std::str::FromStr for AlphaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strip" => Ok(AlphaPolicy::Strip),
            "reject" => Ok(AlphaPolicy::Reject),
            other => Err(Error::InvalidParameter(format!(
                "unknown alpha policy '{other}' (expected strip|reject)"
            ))),
        }
    }
}

/// Loads an 8-bit grayscale or RGB PNG, stripping alpha if present.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    load_image_with(path, AlphaPolicy::Strip)
}

/// Loads an 8-bit grayscale or RGB PNG with an explicit alpha policy.
/// Integer intensities map 1:1 onto floats.
pub fn load_image_with(path: impl AsRef<Path>, alpha: AlphaPolicy) -> Result<Image> {
    let path = path.as_ref();
    let decoded = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;

    let reject_alpha = |kind: &str| -> Error {
        Error::Unsupported(format!(
            "{}: {kind} image has an alpha channel and policy is reject",
            path.display()
        ))
    };

    match decoded {
        DynamicImage::ImageLuma8(gray) => Ok(from_gray(&gray)),
        DynamicImage::ImageRgb8(rgb) => Ok(from_rgb(&rgb)),
        DynamicImage::ImageLumaA8(ga) => match alpha {
            AlphaPolicy::Reject => Err(reject_alpha("grayscale")),
            AlphaPolicy::Strip => {
                let (w, h) = ga.dimensions();
                let data = ga.pixels().map(|p| f64::from(p[0])).collect();
                Ok(Image::from_parts(w as usize, h as usize, 1, data))
            }
        },
        DynamicImage::ImageRgba8(rgba) => match alpha {
            AlphaPolicy::Reject => Err(reject_alpha("rgb")),
            AlphaPolicy::Strip => {
                let (w, h) = rgba.dimensions();
                let mut data = Vec::with_capacity(w as usize * h as usize * 3);
                for p in rgba.pixels() {
                    data.extend([f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]);
                }
                Ok(Image::from_parts(w as usize, h as usize, 3, data))
            }
        },
        other => Err(Error::Unsupported(format!(
            "{}: only 8-bit grayscale or RGB PNG is supported, got {:?}",
            path.display(),
            other.color()
        ))),
    }
}

fn from_gray(gray: &GrayImage) -> Image {
    let (w, h) = gray.dimensions();
    let data = gray.pixels().map(|p| f64::from(p[0])).collect();
    Image::from_parts(w as usize, h as usize, 1, data)
}

fn from_rgb(rgb: &RgbImage) -> Image {
    let (w, h) = rgb.dimensions();
    let mut data = Vec::with_capacity(w as usize * h as usize * 3);
    for p in rgb.pixels() {
        data.extend([f64::from(p[0]), f64::from(p[1]), f64::from(p[2])]);
    }
    Image::from_parts(w as usize, h as usize, 3, data)
}

/// Writes an image as 8-bit PNG. Intensities are rounded half-to-even and
/// clamped to `[0, 255]`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let w = img.width() as u32;
    let h = img.height() as u32;
    let bytes: Vec<u8> = img
        .data()
        .iter()
        .map(|v| v.round_ties_even().clamp(0.0, 255.0) as u8)
        .collect();

    let write_err = |e: image::ImageError| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };

    match img.channels() {
        1 => GrayImage::from_raw(w, h, bytes)
            .expect("buffer sized from image")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(write_err),
        3 => RgbImage::from_raw(w, h, bytes)
            .expect("buffer sized from image")
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(write_err),
        c => Err(Error::Unsupported(format!(
            "cannot encode {c}-channel image"
        ))),
    }
}

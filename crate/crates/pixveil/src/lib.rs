//! pixveil: mixup-based image obfuscation with measurable privacy.
//!
//! The crate has six parts:
//!
//! - [`imgcore`] — raster type, deterministic RNG streams, PNG I/O, and the
//!   shared pixel primitives (grayscale, resize, Gaussian blur, tiling).
//! - [`obfuscate`] — the six obfuscation operators (plain mixing plus
//!   grafting, shuffling, noising, pixelizing, and blurring variants) and
//!   their label rules.
//! - [`metrics`] — full-reference privacy scores: MSE, dSSIM, pHash distance,
//!   dHaar, and the Fréchet distance over externally computed feature sets.
//! - [`thresholds`] — ROC construction, AUC, and privacy-threshold selection
//!   from recognition records.
//! - [`attacks`] — denoising/deblurring attack simulators and privacy-drop
//!   reporting.
//! - [`pipeline`] — dataset-level epoch generation, pairing strategies,
//!   privacy gating, survey-sample generation, and manifest emission.

pub mod attacks;
pub mod cli;
pub mod error;
pub mod imgcore;
pub mod metrics;
pub mod obfuscate;
pub mod pipeline;
pub mod thresholds;

pub use error::{Error, Result};

/// Formats a float with nine significant digits, the precision used in every
/// CSV and CLI surface.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0.000000000".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

//! Transfer functions, luminance and the exposure oracle.
//!
//! The display transfer is a pure power law (`v^2.4` to linearise, its
//! inverse to encode). The piecewise sRGB curve with a linear toe is not
//! used anywhere in the pipeline. Alpha channels are coverage and are never
//! transformed.

use crate::error::{Error, Result};
use crate::image::{LinearImage, Raster, SrgbImage};

/// Exponent of the display transfer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferParams {
    gamma: f64,
}

impl TransferParams {
    pub const DEFAULT_GAMMA: f64 = 2.4;

    pub fn new(gamma: f64) -> Result<Self> {
        if gamma.is_finite() && gamma > 0.0 {
            Ok(Self { gamma })
        } else {
            Err(Error::invalid(format!("transfer gamma must be > 0, got {gamma}")))
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Display value to linear.
    #[inline]
    pub fn decode(&self, v: f64) -> f64 {
        v.clamp(0.0, 1.0).powf(self.gamma)
    }

    /// Linear value to display, clipping over-range input.
    #[inline]
    pub fn encode(&self, v: f64) -> f64 {
        v.clamp(0.0, 1.0).powf(1.0 / self.gamma)
    }
}

impl Default for TransferParams {
    fn default() -> Self {
        Self {
            gamma: Self::DEFAULT_GAMMA,
        }
    }
}

/// RGB-to-luminance weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuminanceWeights {
    w: [f64; 3],
}

impl LuminanceWeights {
    pub const DEFAULT: [f64; 3] = [0.21267, 0.71516, 0.07217];

    pub fn new(w: [f64; 3]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|c| !c.is_finite() || *c < 0.0) || (sum - 1.0).abs() > 1e-4 {
            return Err(Error::invalid(format!(
                "luminance weights must be nonnegative and sum to 1, got {w:?}"
            )));
        }
        Ok(Self { w })
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.w
    }

    #[inline]
    pub fn apply(&self, rgb: [f64; 3]) -> f64 {
        self.w[0] * rgb[0] + self.w[1] * rgb[1] + self.w[2] * rgb[2]
    }
}

impl Default for LuminanceWeights {
    fn default() -> Self {
        Self { w: Self::DEFAULT }
    }
}

#[inline]
fn is_color(channel: usize) -> bool {
    channel < 3
}

pub fn srgb_to_linear(img: &SrgbImage, p: &TransferParams) -> LinearImage {
    img.map_samples(|v, c| {
        if is_color(c) {
            p.decode(v as f64) as f32
        } else {
            v
        }
    })
}

pub fn linear_to_srgb(img: &LinearImage, p: &TransferParams) -> SrgbImage {
    img.map_samples(|v, c| {
        if is_color(c) {
            p.encode(v as f64) as f32
        } else {
            v
        }
    })
}

/// Per-pixel weighted sum of the colour channels.
///
/// Images always carry at least three channels, so the "too few channels"
/// failure is ruled out by construction.
pub fn luminance(img: &LinearImage, w: &LuminanceWeights) -> Raster {
    let data = img
        .pixels()
        .map(|p| w.apply([p[0] as f64, p[1] as f64, p[2] as f64]) as f32)
        .collect();
    Raster::from_vec_unchecked(img.width(), img.height(), data)
}

/// Re-exposes an HDR image by `ev` stops, clips and encodes for display.
///
/// This is the mathematical stand-in for a learned under-exposure predictor:
/// given the true radiance it produces exactly the bracket a camera with a
/// hard clip at 1.0 would record.
pub fn simulate_underexposure(hdr: &LinearImage, ev: f64, p: &TransferParams) -> Result<SrgbImage> {
    if !ev.is_finite() {
        return Err(Error::invalid(format!("exposure must be finite, got {ev}")));
    }
    let scale = ev.exp2();
    Ok(hdr.map_samples(|v, c| {
        if is_color(c) {
            p.encode(v as f64 * scale) as f32
        } else {
            v
        }
    }))
}

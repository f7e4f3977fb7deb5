//! Shadow-ratio compositing over a photographic background.
//!
//! The receiver is rendered twice, without (`R0`) and with (`R1`) the
//! inserted object. Their per-channel ratio is the fraction of light the
//! object removes; it is shaped for softness and strength, applied to the
//! linearised background, and the premultiplied object layer is laid on top.
//! Working from the ratio rather than from `R1` directly keeps the real
//! shadows already in the photograph untouched.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{ensure_same_shape, Image, LinearImage, SrgbImage};
use crate::radiometry::TransferParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingParams {
    gamma_s: f64,
    s_min: f64,
    lambda: f64,
    epsilon: f64,
    validity_bound: f64,
}

impl ShapingParams {
    pub const DEFAULT_GAMMA_S: f64 = 0.8;
    pub const DEFAULT_S_MIN: f64 = 0.05;
    pub const DEFAULT_LAMBDA: f64 = 0.9;
    pub const DEFAULT_EPSILON: f64 = 1e-6;
    pub const DEFAULT_VALIDITY_BOUND: f64 = 1e-4;

    pub fn new(gamma_s: f64, s_min: f64, lambda: f64) -> Result<Self> {
        Self::with_bounds(gamma_s, s_min, lambda, Self::DEFAULT_EPSILON, Self::DEFAULT_VALIDITY_BOUND)
    }

    pub fn with_bounds(gamma_s: f64, s_min: f64, lambda: f64, epsilon: f64, validity_bound: f64) -> Result<Self> {
        if !(gamma_s > 0.0 && gamma_s <= 1.0) {
            return Err(Error::invalid(format!("shadow gamma must lie in (0, 1], got {gamma_s}")));
        }
        if !(0.0..1.0).contains(&s_min) {
            return Err(Error::invalid(format!("shadow minimum must lie in [0, 1), got {s_min}")));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::invalid(format!("shadow strength must lie in [0, 1], got {lambda}")));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) || !(validity_bound >= 0.0 && validity_bound.is_finite()) {
            return Err(Error::invalid("epsilon and validity bound must be finite and nonnegative"));
        }
        Ok(Self {
            gamma_s,
            s_min,
            lambda,
            epsilon,
            validity_bound,
        })
    }

    pub fn gamma_s(&self) -> f64 {
        self.gamma_s
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn validity_bound(&self) -> f64 {
        self.validity_bound
    }

    /// Shaped value of one ratio sample.
    #[inline]
    pub fn shape(&self, s: f64) -> f64 {
        let tilde = s.powf(self.gamma_s).max(self.s_min);
        // 1 - lambda (1 - tilde), arranged so lambda = 1 returns tilde exactly
        (1.0 - self.lambda) + self.lambda * tilde
    }

    /// Smallest value [`ShapingParams::shape`] can return.
    pub fn floor(&self) -> f64 {
        1.0 - self.lambda * (1.0 - self.s_min)
    }
}

impl Default for ShapingParams {
    fn default() -> Self {
        Self {
            gamma_s: Self::DEFAULT_GAMMA_S,
            s_min: Self::DEFAULT_S_MIN,
            lambda: Self::DEFAULT_LAMBDA,
            epsilon: Self::DEFAULT_EPSILON,
            validity_bound: Self::DEFAULT_VALIDITY_BOUND,
        }
    }
}

/// Per-channel ratio in `[0, 1]` with its validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowRatioMap {
    width: usize,
    height: usize,
    /// Interleaved RGB.
    ratio: Vec<f32>,
    valid: Vec<bool>,
}

impl ShadowRatioMap {
    /// Builds a map from interleaved RGB ratios; every sample is valid.
    pub fn from_rgb(width: usize, height: usize, ratio: Vec<f32>) -> Result<Self> {
        if ratio.len() != width * height * 3 {
            return Err(Error::invalid("ratio map size does not match its dimensions"));
        }
        if ratio.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("ratio samples must lie in [0, 1]"));
        }
        let valid = vec![true; ratio.len()];
        Ok(Self {
            width,
            height,
            ratio,
            valid,
        })
    }

    pub fn uniform(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::from_rgb(width, height, vec![value; width * height * 3])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.ratio
    }

    pub fn rgb(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.ratio[i], self.ratio[i + 1], self.ratio[i + 2]]
    }

    /// Whether channel `c` of pixel `(x, y)` had enough energy in `R0`.
    pub fn is_valid(&self, x: usize, y: usize, c: usize) -> bool {
        self.valid[(y * self.width + x) * 3 + c]
    }

    pub fn min_channel(&self, x: usize, y: usize) -> f32 {
        let p = self.rgb(x, y);
        p[0].min(p[1]).min(p[2])
    }

    /// The map as a linear image, for writing to disk.
    pub fn to_image(&self) -> LinearImage {
        Image::from_vec_unchecked(self.width, self.height, 3, self.ratio.clone())
    }
}

pub fn shadow_ratio(r0: &LinearImage, r1: &LinearImage, p: &ShapingParams) -> Result<ShadowRatioMap> {
    ensure_same_shape(r0, r1, "shadow ratio")?;
    let (w, h) = r0.dimensions();
    let mut ratio = Vec::with_capacity(w * h * 3);
    let mut valid = Vec::with_capacity(w * h * 3);
    for (a, b) in r0.pixels().zip(r1.pixels()) {
        for c in 0..3 {
            let (a, b) = (a[c] as f64, b[c] as f64);
            let ok = a >= p.validity_bound;
            valid.push(ok);
            ratio.push(if ok { (b / (a + p.epsilon)).clamp(0.0, 1.0) as f32 } else { 1.0 });
        }
    }
    Ok(ShadowRatioMap {
        width: w,
        height: h,
        ratio,
        valid,
    })
}

pub fn shape_ratio(s: &ShadowRatioMap, p: &ShapingParams) -> ShadowRatioMap {
    ShadowRatioMap {
        width: s.width,
        height: s.height,
        ratio: s.ratio.iter().map(|&v| p.shape(v as f64) as f32).collect(),
        valid: s.valid.clone(),
    }
}

/// Inputs of the final composite. `object` is premultiplied RGBA; its alpha
/// is the object mask.
#[derive(Debug, Clone)]
pub struct CompositeInputs<'a> {
    pub background: &'a SrgbImage,
    pub object: &'a LinearImage,
}

/// `encode(decode(B) * S_hat * (1 - M) + O)`, clamped to `[0, 1]`.
pub fn composite(inputs: &CompositeInputs<'_>, shaped: &ShadowRatioMap, transfer: &TransferParams) -> Result<SrgbImage> {
    let b = inputs.background;
    let o = inputs.object;
    ensure_same_shape(b, o, "composite (background vs object)")?;
    if b.dimensions() != (shaped.width, shaped.height) {
        return Err(Error::invalid(format!(
            "composite (background vs ratio): resolution mismatch {}x{} vs {}x{}",
            b.width(),
            b.height(),
            shaped.width,
            shaped.height
        )));
    }
    let (w, h) = b.dimensions();
    let mut data = vec![0.0f32; w * h * 3];
    data.par_chunks_mut(w * 3).enumerate().for_each(|(y, line)| {
        for x in 0..w {
            let bg = b.pixel(x, y);
            let obj = o.pixel(x, y);
            let m = o.alpha(x, y).clamp(0.0, 1.0) as f64;
            let s = shaped.rgb(x, y);
            for c in 0..3 {
                let lin = transfer.decode(bg[c] as f64) * s[c] as f64 * (1.0 - m) + obj[c] as f64;
                line[x * 3 + c] = transfer.encode(lin) as f32;
            }
        }
    });
    Ok(Image::from_vec_unchecked(w, h, 3, data))
}

/// The three compositing steps in sequence.
pub fn composite_from_renders(
    r0: &LinearImage,
    r1: &LinearImage,
    object: &LinearImage,
    background: &SrgbImage,
    p: &ShapingParams,
    transfer: &TransferParams,
) -> Result<(ShadowRatioMap, SrgbImage)> {
    ensure_same_shape(r0, object, "composite (renders vs object)")?;
    let shaped = shape_ratio(&shadow_ratio(r0, r1, p)?, p);
    let out = composite(&CompositeInputs { background, object }, &shaped, transfer)?;
    Ok((shaped, out))
}

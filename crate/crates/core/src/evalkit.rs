//! Image quality metrics and the preference-score ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_same_shape, SrgbImage};
use crate::radiometry::LuminanceWeights;

pub const PSNR_CAP: f64 = 99.0;

/// PSNR over the colour channels of two display images, peak 1.
pub fn psnr(a: &SrgbImage, b: &SrgbImage) -> Result<f64> {
    ensure_same_shape(a, b, "psnr")?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (pa, pb) in a.pixels().zip(b.pixels()) {
        for c in 0..3 {
            let d = pa[c] as f64 - pb[c] as f64;
            sum += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid("psnr of empty images"));
    }
    let mse = sum / n as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - r;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

fn display_luma(img: &SrgbImage) -> Vec<f64> {
    let w = LuminanceWeights::default();
    img.pixels().map(|p| w.apply([p[0] as f64, p[1] as f64, p[2] as f64])).collect()
}

/// Separable Gaussian filter over fully-contained windows only.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM of the display luminance, 11x11 Gaussian window.
pub fn ssim(a: &SrgbImage, b: &SrgbImage) -> Result<f64> {
    ensure_same_shape(a, b, "ssim")?;
    let (w, h) = a.dimensions();
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "ssim needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let x = display_luma(a);
    let y = display_luma(b);
    let k = gaussian_kernel();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let mx = filter_valid(&x, w, h, &k);
    let my = filter_valid(&y, w, h, &k);
    let sxx = filter_valid(&xx, w, h, &k);
    let syy = filter_valid(&yy, w, h, &k);
    let sxy = filter_valid(&xy, w, h, &k);
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cov = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    Ok(total / mx.len() as f64)
}

/// `pos / (pos + neg)`.
pub fn vqa_ratio(pos: f64, neg: f64) -> Result<f64> {
    if !(pos >= 0.0 && neg >= 0.0) || !pos.is_finite() || !neg.is_finite() {
        return Err(Error::invalid(format!("scores must be finite and nonnegative, got {pos} and {neg}")));
    }
    if pos + neg == 0.0 {
        return Err(Error::invalid("positive and negative scores are both zero"));
    }
    Ok(pos / (pos + neg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub name: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pairs: Vec<PairMetrics>,
    pub mean_psnr: Option<f64>,
    pub mean_ssim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vqa_ratio: Option<f64>,
}

impl MetricReport {
    pub fn from_pairs(pairs: Vec<PairMetrics>, vqa_ratio: Option<f64>) -> Self {
        let n = pairs.len() as f64;
        let mean = |f: fn(&PairMetrics) -> f64| (!pairs.is_empty()).then(|| pairs.iter().map(f).sum::<f64>() / n);
        Self {
            mean_psnr: mean(|p| p.psnr),
            mean_ssim: mean(|p| p.ssim),
            pairs,
            vqa_ratio,
        }
    }
}

/// PSNR and SSIM of one prediction/reference pair.
pub fn evaluate_pair(name: impl Into<String>, pred: &SrgbImage, reference: &SrgbImage) -> Result<PairMetrics> {
    Ok(PairMetrics {
        name: name.into(),
        psnr: psnr(pred, reference)?,
        ssim: ssim(pred, reference)?,
    })
}

//! HDR reconstruction from an exposure bracket by luminance-gated merging.
//!
//! Each bracket is linearised and reduced to luminance, scaled to a common
//! radiometric unit by `2^-ev`, and merged from the darkest bracket upward:
//! wherever a brighter bracket is near saturation the running estimate from
//! the darker brackets is kept. The merged luminance is finally re-attached
//! to the chromaticity of the base (brightest) exposure, so colour always
//! comes from the base image and only the magnitude is recovered from the
//! darker ones.
//!
//! The replacement is blended with a smoothstep in luminance around the
//! saturation threshold, which keeps the output continuous in the inputs.

use crate::error::{Error, Result};
use crate::image::{LinearImage, Raster, SrgbImage};
use crate::panorama::EquirectEnvMap;
use crate::radiometry::{LuminanceWeights, TransferParams};

/// One exposure of the bracket.
#[derive(Debug, Clone)]
pub struct Bracket {
    pub image: SrgbImage,
    pub ev: f64,
}

/// Exposures in strictly ascending EV order; the last one is the base.
#[derive(Debug, Clone)]
pub struct BracketSequence {
    entries: Vec<Bracket>,
}

impl BracketSequence {
    pub fn new(entries: Vec<Bracket>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::invalid("a bracket sequence needs at least one exposure"))?;
        let dims = first.image.dimensions();
        for pair in entries.windows(2) {
            if pair[0].ev.partial_cmp(&pair[1].ev) != Some(std::cmp::Ordering::Less) {
                return Err(Error::invalid(format!(
                    "bracket exposures must be strictly increasing, got {} then {}",
                    pair[0].ev, pair[1].ev
                )));
            }
        }
        for b in &entries {
            if !b.ev.is_finite() {
                return Err(Error::invalid(format!("bracket exposure {} is not finite", b.ev)));
            }
            if b.image.dimensions() != dims {
                return Err(Error::invalid(format!(
                    "bracket at ev {} is {}x{}, expected {}x{}",
                    b.ev,
                    b.image.width(),
                    b.image.height(),
                    dims.0,
                    dims.1
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Sorts by EV before validating.
    pub fn from_unsorted(mut entries: Vec<Bracket>) -> Result<Self> {
        entries.sort_by(|a, b| a.ev.total_cmp(&b.ev));
        Self::new(entries)
    }

    pub fn entries(&self) -> &[Bracket] {
        &self.entries
    }

    pub fn base(&self) -> &Bracket {
        self.entries.last().expect("validated non-empty")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    saturation_threshold: f64,
    blend_halfwidth: f64,
    epsilon: f64,
    pub transfer: TransferParams,
    pub weights: LuminanceWeights,
}

impl FusionParams {
    pub const DEFAULT_THRESHOLD: f64 = 0.9;
    pub const DEFAULT_HALFWIDTH: f64 = 0.05;
    pub const DEFAULT_EPSILON: f64 = 1e-6;

    pub fn new(
        saturation_threshold: f64,
        blend_halfwidth: f64,
        epsilon: f64,
        transfer: TransferParams,
        weights: LuminanceWeights,
    ) -> Result<Self> {
        if !(saturation_threshold > 0.0 && saturation_threshold < 1.0) {
            return Err(Error::invalid(format!(
                "saturation threshold must lie in (0, 1), got {saturation_threshold}"
            )));
        }
        let limit = saturation_threshold.min(1.0 - saturation_threshold);
        if !(blend_halfwidth >= 0.0 && blend_halfwidth < limit) {
            return Err(Error::invalid(format!(
                "blend half-width must lie in [0, {limit}), got {blend_halfwidth}"
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            saturation_threshold,
            blend_halfwidth,
            epsilon,
            transfer,
            weights,
        })
    }

    pub fn saturation_threshold(&self) -> f64 {
        self.saturation_threshold
    }

    pub fn blend_halfwidth(&self) -> f64 {
        self.blend_halfwidth
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Weight given to the darker running estimate for a bracket whose
    /// normalised luminance is `lum`.
    pub fn keep_darker_weight(&self, lum: f64) -> f64 {
        let hw = self.blend_halfwidth;
        let t = self.saturation_threshold;
        if hw == 0.0 {
            return if lum > t { 1.0 } else { 0.0 };
        }
        let x = ((lum - (t - hw)) / (2.0 * hw)).clamp(0.0, 1.0);
        x * x * (3.0 - 2.0 * x)
    }
}

impl Default for FusionParams {
    fn default() -> Self {
        Self {
            saturation_threshold: Self::DEFAULT_THRESHOLD,
            blend_halfwidth: Self::DEFAULT_HALFWIDTH,
            epsilon: Self::DEFAULT_EPSILON,
            transfer: TransferParams::default(),
            weights: LuminanceWeights::default(),
        }
    }
}

/// Reconstructed HDR panorama.
#[derive(Debug, Clone)]
pub struct FusedHdr {
    pub map: EquirectEnvMap<crate::image::Linear>,
    /// Stops above the base exposure's clip level reached by the brightest pixel.
    pub dynamic_range_stops: f64,
}

/// Luminance of the linearised bracket image, in `[0, 1]`.
pub fn normalized_luminance(entry: &Bracket, p: &FusionParams) -> Raster {
    let data = entry
        .image
        .pixels()
        .map(|px| {
            let rgb = [0, 1, 2].map(|c| p.transfer.decode(px[c] as f64));
            p.weights.apply(rgb).clamp(0.0, 1.0) as f32
        })
        .collect();
    Raster::from_vec_unchecked(entry.image.width(), entry.image.height(), data)
}

/// Brings a luminance raster exposed at `ev` to the common scale `lum * 2^-ev`.
pub fn scale_to_irradiance(lum: &Raster, ev: f64) -> Raster {
    let k = (-ev).exp2();
    lum.map(|v| (v as f64 * k) as f32)
}

/// Darkest-first merge of the bracket luminances; returns the fused
/// luminance at the base exposure's position in the sequence.
pub fn iterative_merge(seq: &BracketSequence, p: &FusionParams) -> Raster {
    let entries = seq.entries();
    let first = &entries[0];
    let first_lum = normalized_luminance(first, p);
    let mut merged: Vec<f64> = first_lum
        .data()
        .iter()
        .map(|&l| l as f64 * (-first.ev).exp2())
        .collect();
    for entry in &entries[1..] {
        let lum = normalized_luminance(entry, p);
        let k = (-entry.ev).exp2();
        for (acc, &l) in merged.iter_mut().zip(lum.data()) {
            let l = l as f64;
            let w = p.keep_darker_weight(l);
            *acc = w * *acc + (1.0 - w) * l * k;
        }
    }
    Raster::from_vec_unchecked(
        first_lum.width(),
        first_lum.height(),
        merged.into_iter().map(|v| v.max(0.0) as f32).collect(),
    )
}

/// Transfers fused luminance onto the base exposure's chromaticity.
pub fn reattach_chromaticity(
    merged: &Raster,
    base: &Bracket,
    p: &FusionParams,
) -> Result<FusedHdr> {
    let img = &base.image;
    if merged.width() != img.width() || merged.height() != img.height() {
        return Err(Error::invalid("merged luminance and base image differ in size"));
    }
    let mut data = Vec::with_capacity(img.width() * img.height() * 3);
    let mut peak = 0.0f64;
    for (px, &e) in img.pixels().zip(merged.data()) {
        let lin = [0, 1, 2].map(|c| p.transfer.decode(px[c] as f64));
        let l = p.weights.apply(lin);
        let rgb = if l <= p.epsilon {
            [0.0; 3]
        } else {
            let ratio = e as f64 / l.max(p.epsilon);
            lin.map(|v| v * ratio)
        };
        peak = peak.max(p.weights.apply(rgb));
        data.extend(rgb.map(|v| v as f32));
    }
    let clip = (-base.ev).exp2();
    let dynamic_range_stops = if peak > 0.0 { (peak / clip).log2() } else { 0.0 };
    let image = LinearImage::new(img.width(), img.height(), 3, data)?;
    Ok(FusedHdr {
        map: EquirectEnvMap::new(image)?,
        dynamic_range_stops,
    })
}

/// Full bracket-to-HDR reconstruction.
pub fn fuse_brackets(seq: &BracketSequence, p: &FusionParams) -> Result<FusedHdr> {
    let merged = iterative_merge(seq, p);
    reattach_chromaticity(&merged, seq.base(), p)
}

//! Floating-point raster containers.
//!
//! Two pixel encodings flow through the pipeline: scene-linear radiance
//! ([`LinearImage`]) and display-referred values in `[0, 1]`
//! ([`SrgbImage`]). They share one generic container, tagged by a zero-sized
//! marker, so a display image can never be fed where radiance is expected.
//! Single-channel scalar fields (luminance, irradiance, masks) use [`Raster`].

use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};

/// Marker for an encoding of pixel samples.
pub trait Encoding: Copy + Default + fmt::Debug + Send + Sync + 'static {
    const NAME: &'static str;

    /// Validates or normalises one sample on construction.
    fn admit(v: f32) -> Option<f32>;
}

/// Scene-linear radiometric samples, finite and nonnegative, unbounded above.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Linear;

/// Display-referred samples clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Display;

impl Encoding for Linear {
    const NAME: &'static str = "linear";

    fn admit(v: f32) -> Option<f32> {
        if v.is_finite() && v >= 0.0 {
            Some(v)
        } else {
            None
        }
    }
}

impl Encoding for Display {
    const NAME: &'static str = "display";

    fn admit(v: f32) -> Option<f32> {
        if v.is_nan() {
            None
        } else {
            Some(v.clamp(0.0, 1.0))
        }
    }
}

/// Row-major interleaved image with 3 (RGB) or 4 (RGBA) channels.
#[derive(Clone, PartialEq)]
pub struct Image<E: Encoding> {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    _encoding: PhantomData<E>,
}

pub type LinearImage = Image<Linear>;
pub type SrgbImage = Image<Display>;

impl<E: Encoding> fmt::Debug for Image<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("encoding", &E::NAME)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl<E: Encoding> Image<E> {
    pub fn new(width: usize, height: usize, channels: usize, mut data: Vec<f32>) -> Result<Self> {
        if channels != 3 && channels != 4 {
            return Err(Error::invalid(format!(
                "images carry 3 or 4 channels, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "{width}x{height}x{channels} image needs {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        for (i, v) in data.iter_mut().enumerate() {
            *v = E::admit(*v).ok_or_else(|| {
                Error::invalid(format!("{} sample {i} is out of domain: {v}", E::NAME))
            })?;
        }
        Ok(Self::from_vec_unchecked(width, height, channels, data))
    }

    pub(crate) fn from_vec_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
            _encoding: PhantomData,
        }
    }

    /// Image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image by evaluating `f(x, y, channel)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
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

    pub fn has_alpha(&self) -> bool {
        self.channels == 4
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn rgb(&self, x: usize, y: usize) -> [f32; 3] {
        let p = self.pixel(x, y);
        [p[0], p[1], p[2]]
    }

    /// Alpha of a pixel; opaque for RGB images.
    pub fn alpha(&self, x: usize, y: usize) -> f32 {
        if self.channels == 4 {
            self.pixel(x, y)[3]
        } else {
            1.0
        }
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        self.data.chunks_exact(self.channels)
    }

    /// Drops the alpha channel if present.
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.pixels().flat_map(|p| [p[0], p[1], p[2]]).collect();
        Self::from_vec_unchecked(self.width, self.height, 3, data)
    }

    /// Alpha channel as a scalar raster (all ones for RGB images).
    pub fn alpha_raster(&self) -> Raster {
        let data = if self.channels == 4 {
            self.pixels().map(|p| p[3]).collect()
        } else {
            vec![1.0; self.width * self.height]
        };
        Raster::from_vec_unchecked(self.width, self.height, data)
    }

    /// Re-tags the samples with another encoding without converting them.
    /// Used where a stage deliberately reinterprets values (e.g. tone-mapped
    /// renders fed to display-domain metrics).
    pub fn reinterpret<F: Encoding>(&self) -> Result<Image<F>> {
        Image::new(self.width, self.height, self.channels, self.data.clone())
    }

    pub(crate) fn same_shape<F: Encoding>(&self, other: &Image<F>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Per-sample map keeping the channel layout; the closure also gets the
    /// channel index. Results go back through the encoding's admission rule.
    pub(crate) fn map_samples<F: Encoding>(&self, f: impl Fn(f32, usize) -> f32) -> Image<F> {
        let ch = self.channels;
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let out = f(v, i % ch);
                F::admit(out).unwrap_or(0.0)
            })
            .collect();
        Image::from_vec_unchecked(self.width, self.height, ch, data)
    }
}

pub(crate) fn ensure_same_shape<A: Encoding, B: Encoding>(
    a: &Image<A>,
    b: &Image<B>,
    what: &str,
) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{what}: resolution mismatch {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )))
    }
}

/// Single-channel row-major scalar field.
#[derive(Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl fmt::Debug for Raster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Raster")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "{width}x{height} raster needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("raster sample {i} is not finite")));
        }
        Ok(Self::from_vec_unchecked(width, height, data))
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::from_vec_unchecked(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Raster {
        Raster::from_vec_unchecked(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_channel_counts_and_lengths() {
        assert!(LinearImage::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(LinearImage::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(LinearImage::new(2, 2, 3, vec![0.0; 12]).is_ok());
    }

    #[test]
    fn linear_rejects_nan_and_negative() {
        assert!(LinearImage::new(1, 1, 3, vec![f32::NAN, 0.0, 0.0]).is_err());
        assert!(LinearImage::new(1, 1, 3, vec![f32::INFINITY, 0.0, 0.0]).is_err());
        assert!(LinearImage::new(1, 1, 3, vec![-0.5, 0.0, 0.0]).is_err());
        assert!(LinearImage::new(1, 1, 3, vec![12.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn display_clamps() {
        let img = SrgbImage::new(1, 1, 3, vec![-1.0, 0.5, 7.0]).unwrap();
        assert_eq!(img.data(), &[0.0, 0.5, 1.0]);
        assert!(SrgbImage::new(1, 1, 3, vec![f32::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn alpha_helpers() {
        let img = LinearImage::new(2, 1, 4, vec![1.0, 2.0, 3.0, 0.25, 4.0, 5.0, 6.0, 1.0]).unwrap();
        assert_eq!(img.alpha(0, 0), 0.25);
        assert_eq!(img.to_rgb().data(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(img.alpha_raster().data(), &[0.25, 1.0]);
    }
}

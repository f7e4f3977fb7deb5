//! Environment light with luminance importance sampling.
//!
//! Pixels of the equirectangular map are chosen with probability
//! proportional to luminance times their exact solid angle; inside a pixel
//! the direction is uniform on the sphere patch (uniform azimuth, uniform
//! `cos(polar)`). The resulting density is piecewise constant per pixel,
//! `pdf(dir) = lum(pixel) / sum(lum * solid_angle)`.

use std::f64::consts::PI;

use glam::DVec3;

use crate::image::Linear;
use crate::panorama::{equirect_from_dir, sample_env, EquirectEnvMap};
use crate::radiometry::LuminanceWeights;

#[derive(Debug, Clone)]
pub struct EnvLight {
    map: EquirectEnvMap<Linear>,
    table: Option<Table>,
}

#[derive(Debug, Clone)]
struct Table {
    width: usize,
    height: usize,
    /// Cumulative row probabilities, `height + 1` entries.
    rows: Vec<f64>,
    /// Per-row cumulative column probabilities, `height * (width + 1)`.
    cols: Vec<f64>,
    lum: Vec<f64>,
    /// Luminance-weighted solid angle of the whole map.
    total: f64,
}

const UNIFORM_PDF: f64 = 1.0 / (4.0 * PI);

impl EnvLight {
    pub fn new(map: EquirectEnvMap<Linear>, weights: &LuminanceWeights) -> Self {
        let table = Table::build(&map, weights);
        Self { map, table }
    }

    pub fn map(&self) -> &EquirectEnvMap<Linear> {
        &self.map
    }

    /// Bilinear radiance in direction `d`.
    #[inline]
    pub fn radiance(&self, d: DVec3) -> DVec3 {
        DVec3::from_array(sample_env(&self.map, d))
    }

    /// Direction and solid-angle density for two uniform numbers.
    pub fn sample(&self, u1: f64, u2: f64) -> (DVec3, f64) {
        let Some(t) = &self.table else {
            return (uniform_sphere(u1, u2), UNIFORM_PDF);
        };
        let (row, r1) = pick(&t.rows, u1);
        let cdf = &t.cols[row * (t.width + 1)..(row + 1) * (t.width + 1)];
        let (col, r2) = pick(cdf, u2);
        let (z_top, z_bottom) = row_cos_bounds(row, t.height);
        let cos_polar = z_top + (z_bottom - z_top) * r1;
        let sin_polar = (1.0 - cos_polar * cos_polar).max(0.0).sqrt();
        let theta = 2.0 * PI * ((col as f64 + r2) / t.width as f64 - 0.5);
        let d = DVec3::new(sin_polar * theta.sin(), cos_polar, -sin_polar * theta.cos());
        (d, t.lum[row * t.width + col] / t.total)
    }

    /// Density with which [`EnvLight::sample`] produces `d`.
    pub fn pdf(&self, d: DVec3) -> f64 {
        let Some(t) = &self.table else {
            return UNIFORM_PDF;
        };
        let Ok((u, v)) = equirect_from_dir(d) else { return 0.0 };
        let col = ((u * t.width as f64) as usize).min(t.width - 1);
        let row = ((v * t.height as f64) as usize).min(t.height - 1);
        t.lum[row * t.width + col] / t.total
    }
}

impl Table {
    fn build(map: &EquirectEnvMap<Linear>, weights: &LuminanceWeights) -> Option<Table> {
        let (w, h) = (map.width(), map.height());
        let img = map.image();
        let lum: Vec<f64> = img
            .pixels()
            .map(|p| weights.apply([p[0] as f64, p[1] as f64, p[2] as f64]).max(0.0))
            .collect();
        let dphi = 2.0 * PI / w as f64;
        let mut rows = Vec::with_capacity(h + 1);
        let mut cols = Vec::with_capacity(h * (w + 1));
        rows.push(0.0);
        let mut total = 0.0;
        for row in 0..h {
            let (z0, z1) = row_cos_bounds(row, h);
            let omega = dphi * (z0 - z1);
            let line = &lum[row * w..(row + 1) * w];
            let mut acc = 0.0;
            cols.push(0.0);
            for &l in line {
                acc += l;
                cols.push(acc);
            }
            let base = cols.len() - (w + 1);
            normalise(&mut cols[base..], acc);
            total += acc * omega;
            rows.push(total);
        }
        if total.is_nan() || total <= 0.0 || !total.is_finite() {
            return None;
        }
        normalise(&mut rows, total);
        Some(Table {
            width: w,
            height: h,
            rows,
            cols,
            lum,
            total,
        })
    }
}

/// `cos(polar)` at the top and bottom edges of a panorama row.
#[inline]
fn row_cos_bounds(row: usize, h: usize) -> (f64, f64) {
    let top = (PI * row as f64 / h as f64).cos();
    let bottom = if row + 1 == h { -1.0 } else { (PI * (row + 1) as f64 / h as f64).cos() };
    (if row == 0 { 1.0 } else { top }, bottom)
}

fn normalise(cdf: &mut [f64], total: f64) {
    if total > 0.0 {
        for v in cdf.iter_mut() {
            *v /= total;
        }
    } else {
        let n = (cdf.len() - 1) as f64;
        for (i, v) in cdf.iter_mut().enumerate() {
            *v = i as f64 / n;
        }
    }
    let last = cdf.len() - 1;
    cdf[last] = 1.0;
}

/// Bin of `u` in a cumulative table and the position inside that bin.
fn pick(cdf: &[f64], u: f64) -> (usize, f64) {
    let n = cdf.len() - 1;
    // first entry strictly greater than u, minus one; skips zero-width bins
    let mut i = cdf.partition_point(|&c| c <= u).clamp(1, n) - 1;
    while i + 1 < n && cdf[i + 1] - cdf[i] <= 0.0 {
        i += 1;
    }
    let width = cdf[i + 1] - cdf[i];
    let r = if width > 0.0 { ((u - cdf[i]) / width).clamp(0.0, 1.0 - f64::EPSILON) } else { 0.5 };
    (i, r)
}

pub fn uniform_sphere(u1: f64, u2: f64) -> DVec3 {
    let z = 1.0 - 2.0 * u1;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = 2.0 * PI * u2;
    DVec3::new(r * phi.cos(), z, r * phi.sin())
}

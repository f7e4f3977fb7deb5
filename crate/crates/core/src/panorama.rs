//! Equirectangular panoramas, cubemaps, and conversions between them.
//!
//! Direction convention (right-handed, Y up, -Z forward):
//!
//! ```text
//! azimuth  theta = 2*pi*(u - 0.5)      u in [0, 1)
//! polar    phi   = pi * v              v in [0, 1]
//! d = (sin(phi) sin(theta), cos(phi), -sin(phi) cos(theta))
//! ```
//!
//! so the panorama centre looks down -Z, `v = 0` is straight up and
//! `u = 0.75` looks along +X.
//!
//! Cube faces are 90 degree pinhole views whose pixel centres sit at
//! `(i + 0.5) / N`. Each face has a forward axis, a right axis (increasing
//! column) and a down axis (increasing row); the side faces keep +Y up, the
//! top face has -Z at its bottom edge and the bottom face has -Z at its top
//! edge.

use std::f64::consts::PI;

use glam::DVec3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Encoding, Image};

pub fn dir_from_equirect(u: f64, v: f64) -> DVec3 {
    let theta = 2.0 * PI * (u - 0.5);
    let phi = PI * v;
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    DVec3::new(sp * st, cp, -sp * ct)
}

/// Inverse of [`dir_from_equirect`]. The input is normalised first; `u` is
/// wrapped into `[0, 1)`. At the poles the azimuth is degenerate and `u`
/// comes out as whatever `atan2` gives for a zero horizontal component.
pub fn equirect_from_dir(d: DVec3) -> Result<(f64, f64)> {
    let len = d.length();
    if !len.is_finite() || len == 0.0 {
        return Err(Error::invalid(format!("cannot map direction {d} to the sphere")));
    }
    let d = d / len;
    let v = d.y.clamp(-1.0, 1.0).acos() / PI;
    let theta = d.x.atan2(-d.z);
    let mut u = theta / (2.0 * PI) + 0.5;
    u -= u.floor();
    if u >= 1.0 {
        u = 0.0;
    }
    Ok((u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CubeFace {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::PosX,
        CubeFace::NegX,
        CubeFace::PosY,
        CubeFace::NegY,
        CubeFace::PosZ,
        CubeFace::NegZ,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short name used for file names and CLI flags (`posx`, `negy`, ...).
    pub fn name(self) -> &'static str {
        match self {
            CubeFace::PosX => "posx",
            CubeFace::NegX => "negx",
            CubeFace::PosY => "posy",
            CubeFace::NegY => "negy",
            CubeFace::PosZ => "posz",
            CubeFace::NegZ => "negz",
        }
    }

    /// `(forward, right, down)` axes of the face camera.
    pub fn basis(self) -> (DVec3, DVec3, DVec3) {
        match self {
            CubeFace::PosX => (DVec3::X, DVec3::Z, DVec3::NEG_Y),
            CubeFace::NegX => (DVec3::NEG_X, DVec3::NEG_Z, DVec3::NEG_Y),
            CubeFace::PosY => (DVec3::Y, DVec3::X, DVec3::NEG_Z),
            CubeFace::NegY => (DVec3::NEG_Y, DVec3::X, DVec3::Z),
            CubeFace::PosZ => (DVec3::Z, DVec3::NEG_X, DVec3::NEG_Y),
            CubeFace::NegZ => (DVec3::NEG_Z, DVec3::X, DVec3::NEG_Y),
        }
    }

    /// Unit direction through face-plane coordinates `a` (right) and `b`
    /// (down), both in `[-1, 1]`.
    pub fn direction(self, a: f64, b: f64) -> DVec3 {
        let (f, r, d) = self.basis();
        (f + a * r + b * d).normalize()
    }

    /// Direction through the centre of pixel `(col, row)` of an `n`-pixel face.
    pub fn pixel_direction(self, col: usize, row: usize, n: usize) -> DVec3 {
        let a = 2.0 * (col as f64 + 0.5) / n as f64 - 1.0;
        let b = 2.0 * (row as f64 + 0.5) / n as f64 - 1.0;
        self.direction(a, b)
    }

    /// Face whose axis carries the largest absolute component of `d`, with
    /// the face-plane coordinates of `d` on it. Ties go to X, then Y.
    pub fn project(d: DVec3) -> (CubeFace, f64, f64) {
        let (ax, ay, az) = (d.x.abs(), d.y.abs(), d.z.abs());
        let face = if ax >= ay && ax >= az {
            if d.x >= 0.0 {
                CubeFace::PosX
            } else {
                CubeFace::NegX
            }
        } else if ay >= az {
            if d.y >= 0.0 {
                CubeFace::PosY
            } else {
                CubeFace::NegY
            }
        } else if d.z >= 0.0 {
            CubeFace::PosZ
        } else {
            CubeFace::NegZ
        };
        let (f, r, dn) = face.basis();
        let depth = d.dot(f);
        (face, d.dot(r) / depth, d.dot(dn) / depth)
    }
}

/// Six square faces of equal resolution.
#[derive(Debug, Clone)]
pub struct CubemapFaceSet<E: Encoding> {
    faces: Vec<Image<E>>,
}

impl<E: Encoding> CubemapFaceSet<E> {
    /// Assembles a face set; every face must appear exactly once.
    pub fn from_faces(faces: impl IntoIterator<Item = (CubeFace, Image<E>)>) -> Result<Self> {
        let mut slots: [Option<Image<E>>; 6] = Default::default();
        for (face, img) in faces {
            if slots[face.index()].replace(img).is_some() {
                return Err(Error::invalid(format!("cube face {} given twice", face.name())));
            }
        }
        let mut out = Vec::with_capacity(6);
        for face in CubeFace::ALL {
            let img = slots[face.index()]
                .take()
                .ok_or_else(|| Error::invalid(format!("cube face {} is missing", face.name())))?;
            out.push(img);
        }
        let n = out[0].width();
        for (face, img) in CubeFace::ALL.iter().zip(&out) {
            if img.width() != img.height() || img.width() != n || n == 0 {
                return Err(Error::invalid(format!(
                    "cube face {} is {}x{}, expected {n}x{n}",
                    face.name(),
                    img.width(),
                    img.height()
                )));
            }
        }
        Ok(Self { faces: out })
    }

    pub fn resolution(&self) -> usize {
        self.faces[0].width()
    }

    pub fn face(&self, face: CubeFace) -> &Image<E> {
        &self.faces[face.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (CubeFace, &Image<E>)> {
        CubeFace::ALL.into_iter().zip(self.faces.iter())
    }

    /// Bilinear lookup of the colour channels in direction `d`, clamped to
    /// the selected face.
    pub fn sample(&self, d: DVec3) -> [f64; 3] {
        let (face, a, b) = CubeFace::project(d);
        let img = self.face(face);
        let n = img.width() as f64;
        let x = (a + 1.0) * 0.5 * n - 0.5;
        let y = (b + 1.0) * 0.5 * n - 0.5;
        bilinear(img, x, y, false)
    }
}

/// Equirectangular map with exact 2:1 aspect.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectEnvMap<E: Encoding> {
    image: Image<E>,
}

impl<E: Encoding> EquirectEnvMap<E> {
    pub fn new(image: Image<E>) -> Result<Self> {
        if image.height() == 0 || image.width() != 2 * image.height() {
            return Err(Error::invalid(format!(
                "equirectangular maps are 2:1, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        Ok(Self { image })
    }

    pub fn image(&self) -> &Image<E> {
        &self.image
    }

    pub fn into_image(self) -> Image<E> {
        self.image
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    /// Bilinear sample with horizontal wrap and vertical clamp.
    pub fn sample_uv(&self, u: f64, v: f64) -> [f64; 3] {
        let x = u * self.width() as f64 - 0.5;
        let y = v * self.height() as f64 - 0.5;
        bilinear(&self.image, x, y, true)
    }

    /// Direction of the centre of pixel `(col, row)`.
    pub fn pixel_direction(&self, col: usize, row: usize) -> DVec3 {
        dir_from_equirect(
            (col as f64 + 0.5) / self.width() as f64,
            (row as f64 + 0.5) / self.height() as f64,
        )
    }
}

/// Radiance looked up in direction `d` (normalised internally).
pub fn sample_env<E: Encoding>(map: &EquirectEnvMap<E>, d: DVec3) -> [f64; 3] {
    match equirect_from_dir(d) {
        Ok((u, v)) => map.sample_uv(u, v),
        Err(_) => [0.0; 3],
    }
}

/// Bilinear fetch of the first three channels at continuous pixel
/// coordinates (pixel centres on integers).
fn bilinear<E: Encoding>(img: &Image<E>, x: f64, y: f64, wrap_x: bool) -> [f64; 3] {
    let w = img.width();
    let h = img.height();
    let (x0, x1, fx) = if wrap_x {
        let xf = x.floor();
        let fx = x - xf;
        let x0 = (xf as i64).rem_euclid(w as i64) as usize;
        (x0, (x0 + 1) % w, fx)
    } else {
        axis_clamped(x, w)
    };
    let (y0, y1, fy) = axis_clamped(y, h);
    let p00 = img.pixel(x0, y0);
    let p10 = img.pixel(x1, y0);
    let p01 = img.pixel(x0, y1);
    let p11 = img.pixel(x1, y1);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
        let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
        out[c] = top * (1.0 - fy) + bottom * fy;
    }
    out
}

fn axis_clamped(x: f64, n: usize) -> (usize, usize, f64) {
    let x = x.clamp(0.0, (n - 1) as f64);
    let x0 = x.floor() as usize;
    let x1 = (x0 + 1).min(n - 1);
    (x0, x1, x - x0 as f64)
}

/// Resamples six faces into a `out_width x out_width/2` panorama.
pub fn stitch_cubemap<E: Encoding>(
    faces: &CubemapFaceSet<E>,
    out_width: usize,
) -> Result<EquirectEnvMap<E>> {
    if out_width == 0 || !out_width.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "panorama width must be even and positive, got {out_width}"
        )));
    }
    let height = out_width / 2;
    let mut data = vec![0.0f32; out_width * height * 3];
    data.par_chunks_mut(out_width * 3)
        .enumerate()
        .for_each(|(row, line)| {
            let v = (row as f64 + 0.5) / height as f64;
            for col in 0..out_width {
                let u = (col as f64 + 0.5) / out_width as f64;
                let rgb = faces.sample(dir_from_equirect(u, v));
                for c in 0..3 {
                    line[col * 3 + c] = rgb[c] as f32;
                }
            }
        });
    EquirectEnvMap::new(Image::new(out_width, height, 3, data)?)
}

/// Renders six `n x n` faces out of a panorama by bilinear lookup at each
/// face pixel centre.
pub fn resample_faces<E: Encoding>(
    map: &EquirectEnvMap<E>,
    n: usize,
) -> Result<CubemapFaceSet<E>> {
    if n == 0 {
        return Err(Error::invalid("cube face resolution must be positive"));
    }
    let faces = CubeFace::ALL
        .into_iter()
        .map(|face| {
            let img = Image::from_fn(n, n, 3, |x, y, c| {
                sample_env(map, face.pixel_direction(x, y, n))[c] as f32
            })?;
            Ok((face, img))
        })
        .collect::<Result<Vec<_>>>()?;
    CubemapFaceSet::from_faces(faces)
}

//! Ray classification, receiver visibility and surface scattering.
//!
//! Every ray carries a type. Receivers are opaque to a ray only when its
//! indicator is 1 (shadow probes and diffuse continuations); camera, glossy
//! and transmission rays pass straight through them. Inserted objects are
//! always opaque.

use std::f64::consts::PI;

use glam::DVec3;

use super::scene::SurfacePoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RayType {
    Camera,
    Shadow,
    Diffuse,
    Glossy,
    Transmission,
}

/// 1 if receivers interact with this ray type, 0 if they are invisible to it.
pub fn ray_indicator(t: RayType) -> u8 {
    match t {
        RayType::Shadow | RayType::Diffuse => 1,
        RayType::Camera | RayType::Glossy | RayType::Transmission => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    pub direction: DVec3,
    pub kind: RayType,
    pub depth: u32,
}

impl Ray {
    pub fn new(origin: DVec3, direction: DVec3, kind: RayType, depth: u32) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
            kind,
            depth,
        }
    }
}

/// What a receiver does to a ray that reaches it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScatterDecision {
    /// Continue as if the surface were absent.
    PassThrough,
    /// The ray is blocked; contributes nothing.
    Occluded,
    /// Lambertian scattering with the receiver's vertex-colour albedo.
    Scatter { albedo: DVec3 },
}

/// Receiver behaviour for a ray. Only defined for receiver surfaces.
pub fn effective_bsdf(hit: &SurfacePoint, ray: &Ray) -> Result<ScatterDecision> {
    if !hit.is_receiver() {
        return Err(Error::invalid("effective_bsdf applies to receiver surfaces only"));
    }
    Ok(match (ray_indicator(ray.kind), ray.kind) {
        (0, _) => ScatterDecision::PassThrough,
        (_, RayType::Shadow) => ScatterDecision::Occluded,
        _ => ScatterDecision::Scatter { albedo: hit.albedo },
    })
}

/// Importance-sampled scattering direction.
#[derive(Debug, Clone, Copy)]
pub struct BsdfSample {
    pub wi: DVec3,
    /// BSDF value (without the cosine).
    pub f: DVec3,
    pub pdf: f64,
    pub kind: RayType,
}

/// Reflection model at a shading point: Lambertian diffuse plus an
/// optional GGX specular lobe with Schlick Fresnel.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceBsdf {
    /// Normal on the side of the outgoing direction.
    n: DVec3,
    diffuse: DVec3,
    f0: DVec3,
    alpha: f64,
    /// Probability of sampling the specular lobe.
    spec_weight: f64,
}

const MIN_ROUGHNESS: f64 = 0.02;

impl SurfaceBsdf {
    pub fn lambert(normal: DVec3, wo: DVec3, albedo: DVec3) -> Self {
        Self {
            n: facing(normal, wo),
            diffuse: albedo,
            f0: DVec3::ZERO,
            alpha: 1.0,
            spec_weight: 0.0,
        }
    }

    /// Metallic blend: `(1 - m)` Lambertian with the base colour, `m` GGX
    /// with Fresnel reflectance at normal incidence equal to the base colour.
    pub fn material(normal: DVec3, wo: DVec3, base: DVec3, roughness: f64, metallic: f64) -> Self {
        let r = roughness.max(MIN_ROUGHNESS);
        Self {
            n: facing(normal, wo),
            diffuse: base * (1.0 - metallic),
            f0: base * metallic,
            alpha: r * r,
            spec_weight: metallic,
        }
    }

    pub fn shading_normal(&self) -> DVec3 {
        self.n
    }

    pub fn eval(&self, wo: DVec3, wi: DVec3) -> DVec3 {
        let ci = self.n.dot(wi);
        let co = self.n.dot(wo);
        if ci <= 0.0 || co <= 0.0 {
            return DVec3::ZERO;
        }
        let mut f = self.diffuse / PI;
        if self.spec_weight > 0.0 {
            f += self.specular(wo, wi, co, ci);
        }
        f
    }

    pub fn pdf(&self, wo: DVec3, wi: DVec3) -> f64 {
        let ci = self.n.dot(wi);
        if ci <= 0.0 || self.n.dot(wo) <= 0.0 {
            return 0.0;
        }
        let mut p = (1.0 - self.spec_weight) * ci / PI;
        if self.spec_weight > 0.0 {
            p += self.spec_weight * self.specular_pdf(wo, wi);
        }
        p
    }

    pub fn sample(&self, wo: DVec3, u_lobe: f64, u1: f64, u2: f64) -> Option<BsdfSample> {
        if self.n.dot(wo) <= 0.0 {
            return None;
        }
        let (wi, kind) = if u_lobe < self.spec_weight {
            let h = self.sample_half_vector(u1, u2);
            let wi = reflect(wo, h);
            (wi, RayType::Glossy)
        } else {
            (cosine_hemisphere(self.n, u1, u2), RayType::Diffuse)
        };
        if self.n.dot(wi) <= 0.0 {
            return None;
        }
        let pdf = self.pdf(wo, wi);
        if pdf.is_nan() || pdf <= 0.0 {
            return None;
        }
        Some(BsdfSample {
            wi,
            f: self.eval(wo, wi),
            pdf,
            kind,
        })
    }

    fn d_ggx(&self, cos_h: f64) -> f64 {
        let a2 = self.alpha * self.alpha;
        let t = cos_h * cos_h * (a2 - 1.0) + 1.0;
        a2 / (PI * t * t)
    }

    fn g1(&self, c: f64) -> f64 {
        let a2 = self.alpha * self.alpha;
        2.0 * c / (c + (a2 + (1.0 - a2) * c * c).sqrt())
    }

    fn specular(&self, wo: DVec3, wi: DVec3, co: f64, ci: f64) -> DVec3 {
        let h = (wo + wi).normalize();
        let ch = self.n.dot(h).max(0.0);
        let voh = wo.dot(h).clamp(0.0, 1.0);
        let fresnel = self.f0 + (DVec3::ONE - self.f0) * (1.0 - voh).powi(5);
        fresnel * (self.d_ggx(ch) * self.g1(co) * self.g1(ci) / (4.0 * co * ci))
    }

    fn specular_pdf(&self, wo: DVec3, wi: DVec3) -> f64 {
        let h = (wo + wi).normalize();
        let ch = self.n.dot(h);
        let voh = wo.dot(h);
        if ch <= 0.0 || voh <= 0.0 {
            return 0.0;
        }
        self.d_ggx(ch) * ch / (4.0 * voh)
    }

    fn sample_half_vector(&self, u1: f64, u2: f64) -> DVec3 {
        let a2 = self.alpha * self.alpha;
        let cos2 = (1.0 - u1) / (1.0 + (a2 - 1.0) * u1);
        let cos_t = cos2.sqrt();
        let sin_t = (1.0 - cos2).max(0.0).sqrt();
        let phi = 2.0 * PI * u2;
        let (t, b) = orthonormal_basis(self.n);
        (t * (sin_t * phi.cos()) + b * (sin_t * phi.sin()) + self.n * cos_t).normalize()
    }
}

#[inline]
fn facing(n: DVec3, wo: DVec3) -> DVec3 {
    if n.dot(wo) < 0.0 {
        -n
    } else {
        n
    }
}

#[inline]
fn reflect(wo: DVec3, h: DVec3) -> DVec3 {
    2.0 * wo.dot(h) * h - wo
}

pub fn orthonormal_basis(n: DVec3) -> (DVec3, DVec3) {
    let sign = 1f64.copysign(n.z);
    let a = -1.0 / (sign + n.z);
    let b = n.x * n.y * a;
    (
        DVec3::new(1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x),
        DVec3::new(b, sign + n.y * n.y * a, -n.y),
    )
}

pub fn cosine_hemisphere(n: DVec3, u1: f64, u2: f64) -> DVec3 {
    let r = u1.sqrt();
    let phi = 2.0 * PI * u2;
    let z = (1.0 - u1).max(0.0).sqrt();
    let (t, b) = orthonormal_basis(n);
    (t * (r * phi.cos()) + b * (r * phi.sin()) + n * z).normalize()
}

//! Path integrator and the render passes built on it.
//!
//! Paths gather environment light by next-event estimation and by BSDF
//! sampling, combined with the power heuristic, and stop after a fixed
//! number of bounces.
//!
//! Receivers are opaque to shadow probes and diffuse continuations, and
//! transparent to every other ray type. A receiver enclosure that fully
//! surrounds the scene would therefore black out its own interior if the
//! environment itself were occluded by it. In [`EnclosureMode::Decoupled`]
//! (the default) environment visibility is tested against objects only:
//! the captured panorama already shows the environment as seen from inside
//! the room, so receivers never hide it. Receivers still scatter diffuse
//! continuations, which is what lets an object shadow and tint them.
//! [`EnclosureMode::Strict`] lets receivers block shadow probes too.

use std::sync::atomic::{AtomicU64, Ordering};

use glam::DVec3;
use rayon::prelude::*;

use super::bsdf::{effective_bsdf, Ray, RayType, ScatterDecision, SurfaceBsdf};
use super::camera::Camera;
use super::env::EnvLight;
use super::mesh::MeshRole;
use super::rng::{derive_seed, dims, SampleStream};
use super::scene::{Scene, SurfacePoint, Visible};
use crate::error::{Error, Result};
use crate::image::{Display, Linear, LinearImage};
use crate::panorama::{CubeFace, CubemapFaceSet, EquirectEnvMap};
use crate::radiometry::{linear_to_srgb, LuminanceWeights, TransferParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnclosureMode {
    #[default]
    Decoupled,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingStrategy {
    /// Light and BSDF sampling, power-heuristic weighted.
    #[default]
    Mis,
    /// BSDF sampling only; unbiased reference for the combined estimator.
    BsdfOnly,
}

/// What primary rays see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// Receivers and (optionally) objects are both visible to the camera.
    /// Used for the with/without-object receiver renders.
    Full,
    /// Camera rays pass through receivers; objects and the environment
    /// are visible.
    Beauty,
    /// Like [`Layer::Beauty`] but only object hits contribute; RGBA with
    /// premultiplied colour and alpha equal to object coverage.
    ObjectOnly,
}

#[derive(Debug, Clone)]
pub struct RenderSettings {
    pub samples_per_pixel: u32,
    pub max_depth: u32,
    pub seed: u64,
    pub env: EquirectEnvMap<Linear>,
    pub strategy: SamplingStrategy,
    pub enclosure: EnclosureMode,
    pub weights: LuminanceWeights,
}

impl RenderSettings {
    pub fn new(env: EquirectEnvMap<Linear>) -> Self {
        Self {
            samples_per_pixel: 64,
            max_depth: 4,
            seed: 0,
            env,
            strategy: SamplingStrategy::Mis,
            enclosure: EnclosureMode::Decoupled,
            weights: LuminanceWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_pixel == 0 {
            return Err(Error::invalid("samples per pixel must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::invalid("max depth must be at least 1"));
        }
        Ok(())
    }
}

/// Image plus the number of path samples that produced a non-finite value
/// and were zeroed.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: LinearImage,
    pub nan_samples: u64,
}

/// Receiver render without and with the object, and the object layer.
#[derive(Debug, Clone)]
pub struct InsertionRenderSet {
    pub r0: LinearImage,
    pub r1: LinearImage,
    pub object: LinearImage,
}

/// Prepared scene + environment; reusable across views.
pub struct Renderer<'a> {
    scene: &'a Scene,
    settings: &'a RenderSettings,
    env: EnvLight,
    eps: f64,
}

const MAX_PASSES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Primary {
    /// Receivers shaded by the camera.
    Receivers,
    /// Receivers transparent to the camera.
    PassReceivers,
}

struct PathResult {
    radiance: DVec3,
    primary: Option<MeshRole>,
}

impl<'a> Renderer<'a> {
    pub fn new(scene: &'a Scene, settings: &'a RenderSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            scene,
            settings,
            env: EnvLight::new(settings.env.clone(), &settings.weights),
            eps: scene.ray_epsilon(),
        })
    }

    pub fn env(&self) -> &EnvLight {
        &self.env
    }

    fn visible(&self, include_objects: bool) -> Visible {
        if include_objects {
            Visible::All
        } else {
            Visible::ReceiversOnly
        }
    }

    /// First surface that stops `ray`. Receivers are resolved through
    /// [`effective_bsdf`] unless `primary` says the camera shades them.
    fn first_interaction(
        &self,
        ray: &Ray,
        include_objects: bool,
        primary: Primary,
    ) -> Option<SurfacePoint> {
        let filter = self.visible(include_objects);
        let mut origin = ray.origin;
        for _ in 0..MAX_PASSES {
            let hit = self.scene.intersect(origin, ray.direction, 0.0, f64::INFINITY, filter)?;
            let surf = self.scene.surface(origin, ray.direction, &hit);
            if !surf.is_receiver() || (ray.kind == RayType::Camera && primary == Primary::Receivers) {
                return Some(surf);
            }
            match effective_bsdf(&surf, ray).expect("receiver surface") {
                ScatterDecision::PassThrough => origin = surf.position + ray.direction * self.eps,
                ScatterDecision::Occluded | ScatterDecision::Scatter { .. } => return Some(surf),
            }
        }
        None
    }

    /// Whether the environment is visible from `origin` along `dir`.
    fn env_visible(&self, origin: DVec3, dir: DVec3, include_objects: bool) -> bool {
        let filter = match (self.settings.enclosure, include_objects) {
            (EnclosureMode::Decoupled, true) => Visible::ObjectsOnly,
            (EnclosureMode::Decoupled, false) => return true,
            (EnclosureMode::Strict, _) => self.visible(include_objects),
        };
        !self.scene.occluded(origin, dir, 0.0, f64::INFINITY, filter)
    }

    fn trace(&self, camera_ray: Ray, stream: &SampleStream, include_objects: bool, primary: Primary) -> PathResult {
        let mis = self.settings.strategy == SamplingStrategy::Mis;
        let mut ray = camera_ray;
        let mut beta = DVec3::ONE;
        let mut radiance = DVec3::ZERO;
        let mut prev_pdf: Option<f64> = None;
        let mut first_role = None;
        for depth in 0..=self.settings.max_depth {
            let surf = self.first_interaction(&ray, include_objects, primary);
            if depth == 0 {
                first_role = surf.map(|s| s.role);
            }
            // environment seen along this ray
            let env_term = match &surf {
                None => true,
                Some(s) => {
                    s.is_receiver()
                        && ray.kind == RayType::Diffuse
                        && self.settings.enclosure == EnclosureMode::Decoupled
                        && self.env_visible(ray.origin, ray.direction, include_objects)
                }
            };
            if env_term {
                let w = match prev_pdf {
                    Some(p) if mis => power_heuristic(p, self.env.pdf(ray.direction)),
                    _ => 1.0,
                };
                radiance += beta * self.env.radiance(ray.direction) * w;
            }
            let Some(s) = surf else { break };
            if depth == self.settings.max_depth {
                break;
            }
            let wo = -ray.direction;
            let bsdf = match s.role {
                MeshRole::Receiver => SurfaceBsdf::lambert(s.normal, wo, s.albedo),
                MeshRole::Object => SurfaceBsdf::material(
                    s.normal,
                    wo,
                    DVec3::from_array(s.material.base_color()),
                    s.material.roughness(),
                    s.material.metallic(),
                ),
            };
            let n = bsdf.shading_normal();
            let bounce = depth + 1;
            let p = s.position + n * self.eps;

            if mis {
                let (u1, u2) = stream.get2(bounce, dims::LIGHT);
                let (wi, light_pdf) = self.env.sample(u1, u2);
                let cos = n.dot(wi);
                if light_pdf > 0.0 && cos > 0.0 {
                    let f = bsdf.eval(wo, wi);
                    if f != DVec3::ZERO && self.env_visible(p, wi, include_objects) {
                        let w = power_heuristic(light_pdf, bsdf.pdf(wo, wi));
                        radiance += beta * f * self.env.radiance(wi) * (cos * w / light_pdf);
                    }
                }
            }

            let (u1, u2) = stream.get2(bounce, dims::BSDF);
            let Some(bs) = bsdf.sample(wo, stream.get(bounce, dims::LOBE), u1, u2) else { break };
            beta *= bs.f * (n.dot(bs.wi) / bs.pdf);
            if beta == DVec3::ZERO {
                break;
            }
            prev_pdf = Some(bs.pdf);
            ray = Ray::new(p, bs.wi, bs.kind, bounce);
        }
        PathResult {
            radiance,
            primary: first_role,
        }
    }

    /// Renders one view. Deterministic for a given seed regardless of the
    /// thread count.
    pub fn render(&self, camera: &Camera, include_objects: bool, layer: Layer) -> Result<Rendered> {
        self.render_seeded(camera, include_objects, layer, self.settings.seed)
    }

    fn render_seeded(&self, camera: &Camera, include_objects: bool, layer: Layer, seed: u64) -> Result<Rendered> {
        let (w, h) = (camera.width(), camera.height());
        let channels = if layer == Layer::ObjectOnly { 4 } else { 3 };
        let primary = if layer == Layer::Full {
            Primary::Receivers
        } else {
            Primary::PassReceivers
        };
        let spp = self.settings.samples_per_pixel;
        let nans = AtomicU64::new(0);
        let mut data = vec![0.0f32; w * h * channels];
        data.par_chunks_mut(w * channels).enumerate().for_each(|(y, line)| {
            for x in 0..w {
                let pixel = (y * w + x) as u64;
                let mut sum = DVec3::ZERO;
                let mut coverage = 0u32;
                for s in 0..spp {
                    let stream = SampleStream::new(seed, pixel, s as u64);
                    let (jx, jy) = stream.get2(0, dims::PIXEL_JITTER);
                    let dir = camera.direction(x as f64 + jx, y as f64 + jy);
                    let ray = Ray::new(camera.position(), dir, RayType::Camera, 0);
                    let r = self.trace(ray, &stream, include_objects, primary);
                    let mut l = r.radiance;
                    if !l.is_finite() {
                        nans.fetch_add(1, Ordering::Relaxed);
                        l = DVec3::ZERO;
                    }
                    if layer == Layer::ObjectOnly {
                        if r.primary == Some(MeshRole::Object) {
                            coverage += 1;
                            sum += l;
                        }
                    } else {
                        sum += l;
                    }
                }
                let avg = (sum / spp as f64).max(DVec3::ZERO);
                let px = &mut line[x * channels..(x + 1) * channels];
                px[0] = avg.x as f32;
                px[1] = avg.y as f32;
                px[2] = avg.z as f32;
                if channels == 4 {
                    px[3] = (coverage as f64 / spp as f64) as f32;
                }
            }
        });
        Ok(Rendered {
            image: LinearImage::new(w, h, channels, data)?,
            nan_samples: nans.into_inner(),
        })
    }
}

#[inline]
pub fn power_heuristic(a: f64, b: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    if a2 + b2 > 0.0 {
        a2 / (a2 + b2)
    } else {
        0.0
    }
}

pub fn render_view(
    scene: &Scene,
    camera: &Camera,
    settings: &RenderSettings,
    include_objects: bool,
    layer: Layer,
) -> Result<LinearImage> {
    Ok(Renderer::new(scene, settings)?.render(camera, include_objects, layer)?.image)
}

/// Receiver render without the object (`r0`), with it (`r1`), and the
/// object layer, all from the same sample streams.
pub fn render_insertion_set(scene: &Scene, camera: &Camera, settings: &RenderSettings) -> Result<InsertionRenderSet> {
    if !scene.has_role(MeshRole::Receiver) {
        return Err(Error::invalid("insertion renders need at least one receiver mesh"));
    }
    if !scene.has_role(MeshRole::Object) {
        return Err(Error::invalid("insertion renders need at least one object mesh"));
    }
    let r = Renderer::new(scene, settings)?;
    Ok(InsertionRenderSet {
        r0: r.render(camera, false, Layer::Full)?.image,
        r1: r.render(camera, true, Layer::Full)?.image,
        object: r.render(camera, true, Layer::ObjectOnly)?.image,
    })
}

fn check_capture_point(scene: &Scene, point: DVec3) -> Result<()> {
    if !point.is_finite() {
        return Err(Error::invalid("capture point must be finite"));
    }
    let b = scene.bounds();
    if b.is_empty() {
        return Ok(());
    }
    let margin = 0.5 * b.diagonal();
    if point.cmplt(b.lo - margin).any() || point.cmpgt(b.hi + margin).any() {
        return Err(Error::invalid(format!("capture point {point} lies outside the scene")));
    }
    Ok(())
}

/// Six linear faces seen from `point`, with receivers transparent to the
/// camera and objects excluded.
pub fn render_cubemap_hdr(
    scene: &Scene,
    point: DVec3,
    face_resolution: usize,
    settings: &RenderSettings,
) -> Result<CubemapFaceSet<Linear>> {
    check_capture_point(scene, point)?;
    let r = Renderer::new(scene, settings)?;
    let faces = CubeFace::ALL
        .into_iter()
        .map(|face| {
            let cam = Camera::cube_face(point, face, face_resolution)?;
            let seed = derive_seed(settings.seed, face.index() as u64 + 1);
            Ok((face, r.render_seeded(&cam, false, Layer::Beauty, seed)?.image))
        })
        .collect::<Result<Vec<_>>>()?;
    CubemapFaceSet::from_faces(faces)
}

/// Display-encoded cube faces for the panorama stage.
pub fn render_cubemap_at(
    scene: &Scene,
    point: DVec3,
    face_resolution: usize,
    settings: &RenderSettings,
    transfer: &TransferParams,
) -> Result<CubemapFaceSet<Display>> {
    let hdr = render_cubemap_hdr(scene, point, face_resolution, settings)?;
    CubemapFaceSet::from_faces(hdr.iter().map(|(f, img)| (f, linear_to_srgb(img, transfer))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracer::mesh::{shapes, Material};

    fn uniform_env(v: f32) -> EquirectEnvMap<Linear> {
        EquirectEnvMap::new(LinearImage::filled(32, 16, 3, v).unwrap()).unwrap()
    }

    fn sphere_scene(material: Material) -> Scene {
        let s = shapes::uv_sphere(DVec3::ZERO, 1.0, 24, 48).into_object(material).unwrap();
        Scene::new(vec![s]).unwrap()
    }

    #[test]
    fn white_furnace() {
        let scene = sphere_scene(Material::diffuse([1.0; 3]).unwrap());
        let mut settings = RenderSettings::new(uniform_env(1.0));
        settings.samples_per_pixel = 64;
        let cam = Camera::new(DVec3::new(0.0, 0.0, 4.0), DVec3::ZERO, DVec3::Y, 40.0, 24, 24).unwrap();
        let out = Renderer::new(&scene, &settings).unwrap().render(&cam, true, Layer::Beauty).unwrap();
        assert_eq!(out.nan_samples, 0);
        let mean: f64 = out.image.data().iter().map(|&v| v as f64).sum::<f64>() / out.image.data().len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn object_layer_alpha_is_coverage() {
        let scene = sphere_scene(Material::diffuse([0.5; 3]).unwrap());
        let mut settings = RenderSettings::new(uniform_env(1.0));
        settings.samples_per_pixel = 16;
        let cam = Camera::new(DVec3::new(0.0, 0.0, 4.0), DVec3::ZERO, DVec3::Y, 60.0, 16, 16).unwrap();
        let img = render_view(&scene, &cam, &settings, true, Layer::ObjectOnly).unwrap();
        assert_eq!(img.channels(), 4);
        assert_eq!(img.alpha(0, 0), 0.0);
        assert_eq!(img.alpha(8, 8), 1.0);
        let none = render_view(&scene, &cam, &settings, false, Layer::ObjectOnly).unwrap();
        assert!(none.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn receivers_are_invisible_in_beauty_and_visible_in_full() {
        let floor = shapes::painted(shapes::floor_quad(10.0), DVec3::splat(0.5)).into_receiver().unwrap();
        let scene = Scene::new(vec![floor]).unwrap();
        let mut settings = RenderSettings::new(uniform_env(2.0));
        settings.samples_per_pixel = 4;
        let cam = Camera::new(DVec3::new(0.0, 1.0, 0.0), DVec3::new(0.0, 0.0, -0.01), DVec3::Z, 30.0, 8, 8).unwrap();
        let beauty = render_view(&scene, &cam, &settings, true, Layer::Beauty).unwrap();
        assert!(beauty.data().iter().all(|&v| (v - 2.0).abs() < 1e-5));
        let full = render_view(&scene, &cam, &settings, true, Layer::Full).unwrap();
        // Lambertian floor under a uniform sky of 2 with a transparent-to-env
        // lower hemisphere: radiance = albedo * 2
        let mean = full.data().iter().map(|&v| v as f64).sum::<f64>() / full.data().len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn insertion_set_requires_both_roles() {
        let scene = sphere_scene(Material::default());
        let settings = RenderSettings::new(uniform_env(1.0));
        let cam = Camera::new(DVec3::new(0.0, 0.0, 4.0), DVec3::ZERO, DVec3::Y, 40.0, 4, 4).unwrap();
        assert!(render_insertion_set(&scene, &cam, &settings).is_err());
    }

    #[test]
    fn capture_point_must_be_near_the_scene() {
        let scene = sphere_scene(Material::default());
        let mut settings = RenderSettings::new(uniform_env(1.0));
        settings.samples_per_pixel = 1;
        assert!(render_cubemap_hdr(&scene, DVec3::splat(100.0), 4, &settings).is_err());
        assert!(render_cubemap_hdr(&scene, DVec3::new(f64::NAN, 0.0, 0.0), 4, &settings).is_err());
    }

    #[test]
    fn power_heuristic_values() {
        assert_eq!(power_heuristic(1.0, 0.0), 1.0);
        assert_eq!(power_heuristic(0.0, 0.0), 0.0);
        assert!((power_heuristic(1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((power_heuristic(3.0, 1.0) - 0.9).abs() < 1e-15);
    }
}

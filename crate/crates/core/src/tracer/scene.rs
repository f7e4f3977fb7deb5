//! Flattened triangle soup with a BVH, built from receiver and object meshes.

use glam::DVec3;

use super::bvh::{Aabb, Bvh};
use super::mesh::{Material, MeshRole, TriangleMesh};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Triangle {
    v0: DVec3,
    e1: DVec3,
    e2: DVec3,
    normal: DVec3,
    mesh: u32,
    /// Index of the first of three vertex colours (receivers only).
    color: u32,
}

#[derive(Debug, Clone, Copy)]
struct MeshInfo {
    role: MeshRole,
    material: Material,
}

/// Closest intersection along a ray.
#[derive(Debug, Clone, Copy)]
pub struct Hit {
    pub t: f64,
    pub triangle: u32,
    pub b1: f64,
    pub b2: f64,
}

/// Shading information at a hit.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub position: DVec3,
    /// Geometric unit normal as wound; not flipped towards the viewer.
    pub normal: DVec3,
    pub role: MeshRole,
    /// Interpolated vertex colour for receivers, the base colour otherwise.
    pub albedo: DVec3,
    pub material: Material,
}

impl SurfacePoint {
    pub fn is_receiver(&self) -> bool {
        self.role == MeshRole::Receiver
    }
}

/// Which meshes a query may hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visible {
    All,
    ReceiversOnly,
    ObjectsOnly,
}

impl Visible {
    #[inline]
    fn admits(self, role: MeshRole) -> bool {
        match self {
            Visible::All => true,
            Visible::ReceiversOnly => role == MeshRole::Receiver,
            Visible::ObjectsOnly => role == MeshRole::Object,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    triangles: Vec<Triangle>,
    colors: Vec<DVec3>,
    meshes: Vec<MeshInfo>,
    bvh: Bvh,
    bounds: Aabb,
}

impl Scene {
    pub fn new(meshes: Vec<TriangleMesh>) -> Result<Scene> {
        let mut triangles = Vec::new();
        let mut colors = Vec::new();
        let mut infos = Vec::new();
        for (mi, mesh) in meshes.iter().enumerate() {
            if mesh.role() == MeshRole::Receiver && mesh.colors().is_none() {
                return Err(Error::invalid(format!("receiver mesh {mi} has no vertex colours")));
            }
            infos.push(MeshInfo {
                role: mesh.role(),
                material: *mesh.material(),
            });
            let p = mesh.positions();
            for idx in mesh.indices() {
                let [a, b, c] = idx.map(|i| p[i as usize]);
                let e1 = b - a;
                let e2 = c - a;
                let n = e1.cross(e2);
                let len = n.length();
                // degenerate triangles cannot be hit and have no normal
                if len.is_nan() || len <= 1e-18 {
                    continue;
                }
                let color = colors.len() as u32;
                if let Some(cs) = mesh.colors() {
                    colors.extend(idx.map(|i| cs[i as usize]));
                }
                triangles.push(Triangle {
                    v0: a,
                    e1,
                    e2,
                    normal: n / len,
                    mesh: mi as u32,
                    color,
                });
            }
        }
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|t| Aabb::EMPTY.grow(t.v0).grow(t.v0 + t.e1).grow(t.v0 + t.e2))
            .collect();
        let bvh = Bvh::build(&boxes);
        let bounds = bvh.bounds();
        Ok(Scene {
            triangles,
            colors,
            meshes: infos,
            bvh,
            bounds,
        })
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn has_role(&self, role: MeshRole) -> bool {
        self.meshes.iter().any(|m| m.role == role)
    }

    /// Distance used to push secondary ray origins off a surface.
    pub fn ray_epsilon(&self) -> f64 {
        1e-4 * self.bounds.diagonal().max(1.0)
    }

    #[inline]
    fn role_of(&self, tri: &Triangle) -> MeshRole {
        self.meshes[tri.mesh as usize].role
    }

    /// Closest hit with `t` in `(tmin, tmax)` on meshes admitted by `filter`.
    pub fn intersect(&self, origin: DVec3, dir: DVec3, tmin: f64, tmax: f64, filter: Visible) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        self.bvh.traverse(origin, dir, tmin, tmax, |prim, tmax| {
            let tri = &self.triangles[prim as usize];
            if !filter.admits(self.role_of(tri)) {
                return Some(tmax);
            }
            if let Some((t, b1, b2)) = moller_trumbore(tri, origin, dir) {
                if t > tmin && t < tmax {
                    best = Some(Hit {
                        t,
                        triangle: prim,
                        b1,
                        b2,
                    });
                    return Some(t);
                }
            }
            Some(tmax)
        });
        best
    }

    /// True if anything admitted by `filter` lies within `(tmin, tmax)`.
    pub fn occluded(&self, origin: DVec3, dir: DVec3, tmin: f64, tmax: f64, filter: Visible) -> bool {
        let mut hit = false;
        self.bvh.traverse(origin, dir, tmin, tmax, |prim, tmax| {
            let tri = &self.triangles[prim as usize];
            if filter.admits(self.role_of(tri)) {
                if let Some((t, _, _)) = moller_trumbore(tri, origin, dir) {
                    if t > tmin && t < tmax {
                        hit = true;
                        return None;
                    }
                }
            }
            Some(tmax)
        });
        hit
    }

    pub fn surface(&self, origin: DVec3, dir: DVec3, hit: &Hit) -> SurfacePoint {
        let tri = &self.triangles[hit.triangle as usize];
        let info = &self.meshes[tri.mesh as usize];
        let albedo = match info.role {
            MeshRole::Receiver => {
                let c = &self.colors[tri.color as usize..tri.color as usize + 3];
                c[0] * (1.0 - hit.b1 - hit.b2) + c[1] * hit.b1 + c[2] * hit.b2
            }
            MeshRole::Object => DVec3::from_array(info.material.base_color()),
        };
        SurfacePoint {
            position: origin + dir * hit.t,
            normal: tri.normal,
            role: info.role,
            albedo: albedo.clamp(DVec3::ZERO, DVec3::ONE),
            material: info.material,
        }
    }
}

#[inline]
fn moller_trumbore(tri: &Triangle, origin: DVec3, dir: DVec3) -> Option<(f64, f64, f64)> {
    let p = dir.cross(tri.e2);
    let det = tri.e1.dot(p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri.v0;
    let b1 = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&b1) {
        return None;
    }
    let q = s.cross(tri.e1);
    let b2 = dir.dot(q) * inv;
    if b2 < 0.0 || b1 + b2 > 1.0 {
        return None;
    }
    Some((tri.e2.dot(q) * inv, b1, b2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracer::mesh::shapes;

    fn scene() -> Scene {
        let floor = shapes::painted(shapes::floor_quad(4.0), DVec3::new(0.2, 0.4, 0.6))
            .into_receiver()
            .unwrap();
        let cube = shapes::axis_box(DVec3::new(-0.25, 0.0, -0.25), DVec3::new(0.25, 0.5, 0.25))
            .into_object(Material::diffuse([0.8, 0.1, 0.1]).unwrap())
            .unwrap();
        Scene::new(vec![floor, cube]).unwrap()
    }

    #[test]
    fn hits_respect_filters() {
        let s = scene();
        let o = DVec3::new(0.0, 2.0, 0.0);
        let h = s.intersect(o, DVec3::NEG_Y, 0.0, f64::INFINITY, Visible::All).unwrap();
        assert!((h.t - 1.5).abs() < 1e-12);
        assert_eq!(s.surface(o, DVec3::NEG_Y, &h).role, MeshRole::Object);
        let h = s.intersect(o, DVec3::NEG_Y, 0.0, f64::INFINITY, Visible::ReceiversOnly).unwrap();
        assert!((h.t - 2.0).abs() < 1e-12);
        let sp = s.surface(o, DVec3::NEG_Y, &h);
        assert!(sp.is_receiver());
        assert!((sp.albedo - DVec3::new(0.2, 0.4, 0.6)).length() < 1e-12);
        assert!(s.occluded(o, DVec3::NEG_Y, 0.0, f64::INFINITY, Visible::ObjectsOnly));
        assert!(!s.occluded(o, DVec3::Y, 0.0, f64::INFINITY, Visible::All));
        assert!(!s.occluded(o, DVec3::NEG_Y, 0.0, 1.0, Visible::All));
    }

    #[test]
    fn brute_force_agreement() {
        let s = scene();
        let mut rng = 12345u64;
        let mut next = || {
            rng = crate::tracer::rng::splitmix64(rng);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2000 {
            let o = DVec3::new(next() * 6.0 - 3.0, next() * 3.0, next() * 6.0 - 3.0);
            let d = DVec3::new(next() - 0.5, next() - 0.5, next() - 0.5).normalize();
            let got = s.intersect(o, d, 0.0, f64::INFINITY, Visible::All).map(|h| h.t);
            let brute = s
                .triangles
                .iter()
                .filter_map(|t| moller_trumbore(t, o, d).map(|x| x.0))
                .filter(|&t| t > 0.0)
                .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))));
            match (got, brute) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9),
                (None, None) => {}
                other => panic!("mismatch {other:?}"),
            }
        }
    }
}

//! Triangle meshes, surface materials and a small OBJ reader.

use std::f64::consts::PI;
use std::path::Path;

use glam::{DMat4, DVec3};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshRole {
    /// Reconstructed real-world geometry. Receives shadows, is never
    /// rendered as itself in the beauty pass.
    Receiver,
    /// Inserted virtual geometry.
    Object,
}

/// Diffuse + GGX material of inserted objects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    base_color: [f64; 3],
    roughness: f64,
    metallic: f64,
}

impl Material {
    pub fn new(base_color: [f64; 3], roughness: f64, metallic: f64) -> Result<Self> {
        if base_color.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::invalid(format!(
                "base colour components must lie in [0, 1], got {base_color:?}"
            )));
        }
        if !(0.0..=1.0).contains(&roughness) || !(0.0..=1.0).contains(&metallic) {
            return Err(Error::invalid(format!(
                "roughness and metallic must lie in [0, 1], got {roughness} and {metallic}"
            )));
        }
        Ok(Self {
            base_color,
            roughness,
            metallic,
        })
    }

    pub fn diffuse(base_color: [f64; 3]) -> Result<Self> {
        Self::new(base_color, 1.0, 0.0)
    }

    pub fn base_color(&self) -> [f64; 3] {
        self.base_color
    }

    pub fn roughness(&self) -> f64 {
        self.roughness
    }

    pub fn metallic(&self) -> f64 {
        self.metallic
    }
}

impl Default for Material {
    fn default() -> Self {
        Self {
            base_color: [0.8; 3],
            roughness: 0.5,
            metallic: 0.0,
        }
    }
}

/// Indexed triangle mesh with an optional per-vertex colour.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    positions: Vec<DVec3>,
    indices: Vec<[u32; 3]>,
    colors: Option<Vec<DVec3>>,
    role: MeshRole,
    material: Material,
}

impl TriangleMesh {
    /// Receiver mesh; its vertex colours are the diffuse albedo.
    pub fn receiver(positions: Vec<DVec3>, indices: Vec<[u32; 3]>, colors: Vec<DVec3>) -> Result<Self> {
        Self::build(positions, indices, Some(colors), MeshRole::Receiver, Material::default())
    }

    pub fn object(positions: Vec<DVec3>, indices: Vec<[u32; 3]>, material: Material) -> Result<Self> {
        Self::build(positions, indices, None, MeshRole::Object, material)
    }

    fn build(
        positions: Vec<DVec3>,
        indices: Vec<[u32; 3]>,
        colors: Option<Vec<DVec3>>,
        role: MeshRole,
        material: Material,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("mesh has no triangles"));
        }
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("mesh vertex {p} is not finite")));
        }
        if let Some(c) = &colors {
            if c.len() != positions.len() {
                return Err(Error::invalid(format!(
                    "mesh has {} vertices but {} vertex colours",
                    positions.len(),
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite() || v.min_element() < 0.0 || v.max_element() > 1.0) {
                return Err(Error::invalid("vertex colours must lie in [0, 1]"));
            }
        }
        let n = positions.len() as u32;
        for (i, tri) in indices.iter().enumerate() {
            if tri.iter().any(|&k| k >= n) {
                return Err(Error::invalid(format!("triangle {i} indexes past {n} vertices")));
            }
        }
        Ok(Self {
            positions,
            indices,
            colors,
            role,
            material,
        })
    }

    pub fn positions(&self) -> &[DVec3] {
        &self.positions
    }

    pub fn indices(&self) -> &[[u32; 3]] {
        &self.indices
    }

    pub fn colors(&self) -> Option<&[DVec3]> {
        self.colors.as_deref()
    }

    pub fn role(&self) -> MeshRole {
        self.role
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn with_material(mut self, material: Material) -> Self {
        self.material = material;
        self
    }

    /// Applies an affine transform to every vertex.
    pub fn transformed(mut self, m: &DMat4) -> Result<Self> {
        if !m.is_finite() || m.determinant().abs() < 1e-12 {
            return Err(Error::invalid("mesh transform is singular"));
        }
        for p in &mut self.positions {
            *p = m.transform_point3(*p);
        }
        Ok(self)
    }

    pub fn bounds(&self) -> (DVec3, DVec3) {
        self.positions.iter().fold(
            (DVec3::splat(f64::INFINITY), DVec3::splat(f64::NEG_INFINITY)),
            |(lo, hi), &p| (lo.min(p), hi.max(p)),
        )
    }
}

/// Raw geometry read from an OBJ file.
#[derive(Debug, Clone, Default)]
pub struct ObjData {
    pub positions: Vec<DVec3>,
    pub colors: Option<Vec<DVec3>>,
    pub indices: Vec<[u32; 3]>,
}

/// Reads `v x y z [r g b]` and `f` records; polygons are fan-triangulated,
/// texture and normal indices are ignored. Vertex colours are kept only if
/// every vertex has one.
pub fn load_obj(path: &Path) -> Result<ObjData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text).map_err(|msg| Error::format(path, msg))
}

pub fn parse_obj(text: &str) -> std::result::Result<ObjData, String> {
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    let mut all_colored = true;
    let mut indices = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut parts = line.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        let at = |msg: &str| format!("line {}: {msg}", lineno + 1);
        match tag {
            "v" => {
                let nums: Vec<f64> = parts
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| at(&format!("bad number: {e}")))?;
                match nums.len() {
                    3 | 4 => all_colored = false,
                    6 | 7 => colors.push(DVec3::new(nums[3], nums[4], nums[5])),
                    k => return Err(at(&format!("vertex has {k} components"))),
                }
                positions.push(DVec3::new(nums[0], nums[1], nums[2]));
            }
            "f" => {
                let count = positions.len() as i64;
                let corners: Vec<u32> = parts
                    .map(|s| {
                        let first = s.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| at(&format!("bad face index {s:?}")))?;
                        let resolved = if i < 0 { count + i } else { i - 1 };
                        if i == 0 || resolved < 0 || resolved >= count {
                            return Err(at(&format!("face index {i} out of range")));
                        }
                        Ok(resolved as u32)
                    })
                    .collect::<std::result::Result<_, _>>()?;
                if corners.len() < 3 {
                    return Err(at("face has fewer than 3 vertices"));
                }
                for k in 1..corners.len() - 1 {
                    indices.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if indices.is_empty() {
        return Err("no faces".into());
    }
    let colors = (all_colored && !positions.is_empty()).then_some(colors);
    Ok(ObjData {
        positions,
        colors,
        indices,
    })
}

/// Writes positions, optional vertex colours and faces as OBJ text.
pub fn write_obj(data: &ObjData) -> String {
    let mut out = String::new();
    for (i, p) in data.positions.iter().enumerate() {
        match &data.colors {
            Some(c) => out.push_str(&format!(
                "v {} {} {} {} {} {}\n",
                p.x, p.y, p.z, c[i].x, c[i].y, c[i].z
            )),
            None => out.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z)),
        }
    }
    for t in &data.indices {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    out
}

/// Primitive builders returning raw geometry.
pub mod shapes {
    use super::*;

    /// Horizontal square of side `size` centred at the origin at height 0,
    /// facing +Y.
    pub fn floor_quad(size: f64) -> ObjData {
        let h = size * 0.5;
        ObjData {
            positions: vec![
                DVec3::new(-h, 0.0, -h),
                DVec3::new(-h, 0.0, h),
                DVec3::new(h, 0.0, h),
                DVec3::new(h, 0.0, -h),
            ],
            colors: None,
            indices: vec![[0, 1, 2], [0, 2, 3]],
        }
    }

    /// Closed axis-aligned box with outward winding.
    pub fn axis_box(lo: DVec3, hi: DVec3) -> ObjData {
        let p = |x: bool, y: bool, z: bool| {
            DVec3::new(
                if x { hi.x } else { lo.x },
                if y { hi.y } else { lo.y },
                if z { hi.z } else { lo.z },
            )
        };
        let mut positions = Vec::new();
        let mut indices = Vec::new();
        // each face: four corners in counter-clockwise order seen from outside
        let faces = [
            [p(true, false, false), p(true, true, false), p(true, true, true), p(true, false, true)],
            [p(false, false, false), p(false, false, true), p(false, true, true), p(false, true, false)],
            [p(false, true, false), p(false, true, true), p(true, true, true), p(true, true, false)],
            [p(false, false, false), p(true, false, false), p(true, false, true), p(false, false, true)],
            [p(false, false, true), p(true, false, true), p(true, true, true), p(false, true, true)],
            [p(false, false, false), p(false, true, false), p(true, true, false), p(true, false, false)],
        ];
        for quad in faces {
            let base = positions.len() as u32;
            positions.extend(quad);
            indices.push([base, base + 1, base + 2]);
            indices.push([base, base + 2, base + 3]);
        }
        ObjData {
            positions,
            colors: None,
            indices,
        }
    }

    /// Latitude-longitude sphere.
    pub fn uv_sphere(center: DVec3, radius: f64, rings: u32, segments: u32) -> ObjData {
        let rings = rings.max(2);
        let segments = segments.max(3);
        let mut positions = vec![center + DVec3::Y * radius];
        for r in 1..rings {
            let phi = PI * r as f64 / rings as f64;
            for s in 0..segments {
                let theta = 2.0 * PI * s as f64 / segments as f64;
                let d = DVec3::new(phi.sin() * theta.cos(), phi.cos(), phi.sin() * theta.sin());
                positions.push(center + d * radius);
            }
        }
        positions.push(center - DVec3::Y * radius);
        let bottom = positions.len() as u32 - 1;
        let ring = |r: u32, s: u32| 1 + (r - 1) * segments + s % segments;
        let mut indices = Vec::new();
        for s in 0..segments {
            indices.push([0, ring(1, s + 1), ring(1, s)]);
            indices.push([bottom, ring(rings - 1, s), ring(rings - 1, s + 1)]);
        }
        for r in 1..rings - 1 {
            for s in 0..segments {
                let (a, b, c, d) = (ring(r, s), ring(r, s + 1), ring(r + 1, s), ring(r + 1, s + 1));
                indices.push([a, b, d]);
                indices.push([a, d, c]);
            }
        }
        ObjData {
            positions,
            colors: None,
            indices,
        }
    }

    /// Attaches a constant vertex colour.
    pub fn painted(mut data: ObjData, color: DVec3) -> ObjData {
        data.colors = Some(vec![color; data.positions.len()]);
        data
    }
}

impl ObjData {
    pub fn into_receiver(self) -> Result<TriangleMesh> {
        let colors = self
            .colors
            .ok_or_else(|| Error::invalid("receiver meshes need per-vertex colours"))?;
        TriangleMesh::receiver(self.positions, self.indices, colors)
    }

    pub fn into_object(self, material: Material) -> Result<TriangleMesh> {
        TriangleMesh::object(self.positions, self.indices, material)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_parsing() {
        let text = "# quad\nv 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 1 1 0 0 0 1\nv 0 1 0 1 1 1\nf 1/1/1 2/2/2 3 4\n";
        let d = parse_obj(text).unwrap();
        assert_eq!(d.positions.len(), 4);
        assert_eq!(d.indices, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(d.colors.as_ref().unwrap()[1], DVec3::Y);

        let d = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert!(d.colors.is_none());
        assert_eq!(d.indices, vec![[0, 1, 2]]);

        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\n").is_err());
    }

    #[test]
    fn obj_round_trip() {
        let d = shapes::painted(shapes::axis_box(DVec3::ZERO, DVec3::ONE), DVec3::splat(0.5));
        let back = parse_obj(&write_obj(&d)).unwrap();
        assert_eq!(back.positions, d.positions);
        assert_eq!(back.indices, d.indices);
        assert_eq!(back.colors, d.colors);
    }

    #[test]
    fn box_winding_is_outward() {
        let d = shapes::axis_box(DVec3::splat(-1.0), DVec3::ONE);
        for t in &d.indices {
            let [a, b, c] = t.map(|i| d.positions[i as usize]);
            let n = (b - a).cross(c - a);
            let centroid = (a + b + c) / 3.0;
            assert!(n.dot(centroid) > 0.0);
        }
    }

    #[test]
    fn sphere_is_closed_and_outward() {
        let d = shapes::uv_sphere(DVec3::ZERO, 1.0, 8, 12);
        let mut edges = std::collections::HashMap::new();
        for t in &d.indices {
            let [a, b, c] = t.map(|i| d.positions[i as usize]);
            assert!((b - a).cross(c - a).dot(a + b + c) > 0.0);
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *edges.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        assert!(edges.values().all(|&k| k == 2));
    }

    #[test]
    fn mesh_validation() {
        let quad = shapes::floor_quad(1.0);
        assert!(quad.clone().into_receiver().is_err());
        assert!(shapes::painted(quad.clone(), DVec3::splat(0.5)).into_receiver().is_ok());
        assert!(shapes::painted(quad.clone(), DVec3::splat(1.5)).into_receiver().is_err());
        assert!(TriangleMesh::object(quad.positions.clone(), vec![[0, 1, 9]], Material::default()).is_err());
        assert!(Material::new([0.5; 3], 1.5, 0.0).is_err());
        let mesh = quad.into_object(Material::default()).unwrap();
        assert!(mesh.clone().transformed(&DMat4::ZERO).is_err());
        let moved = mesh.transformed(&DMat4::from_translation(DVec3::Y)).unwrap();
        assert_eq!(moved.bounds().0.y, 1.0);
    }
}

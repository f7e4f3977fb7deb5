//! Desk-scale demo scene: a grey floor, a small red cube and an outdoor
//! environment with a bright sun cap over a dim sky.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use glam::DVec3;

use crate::error::{Error, Result};
use crate::image::LinearImage;
use crate::io::write_exr;
use crate::panorama::{dir_from_equirect, EquirectEnvMap};
use crate::scene_desc::{CameraEntry, MaterialEntry, ObjectEntry, ReceiverEntry, RenderEntry, SceneFile};
use crate::tracer::mesh::{shapes, write_obj};

/// Parameters of the analytic sun-and-sky environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SunSky {
    /// Unit direction towards the sun.
    pub sun_dir: DVec3,
    /// Angular radius of the sun cap in radians.
    pub sun_radius: f64,
    pub sun_radiance: [f64; 3],
    pub zenith: [f64; 3],
    pub horizon: [f64; 3],
    pub ground: [f64; 3],
}

impl Default for SunSky {
    fn default() -> Self {
        // 55 degrees above the horizon, from the front left
        let elev = 55f64.to_radians();
        let horiz = DVec3::new(-0.8, 0.0, 0.6).normalize();
        Self {
            sun_dir: (horiz * elev.cos() + DVec3::Y * elev.sin()).normalize(),
            sun_radius: 8f64.to_radians(),
            sun_radiance: [42.0, 40.0, 36.0],
            zenith: [0.035, 0.05, 0.09],
            horizon: [0.07, 0.08, 0.1],
            ground: [0.03, 0.03, 0.03],
        }
    }
}

impl SunSky {
    pub fn radiance(&self, d: DVec3) -> [f64; 3] {
        if d.dot(self.sun_dir) >= self.sun_radius.cos() {
            return self.sun_radiance;
        }
        if d.y < 0.0 {
            return self.ground;
        }
        let t = d.y;
        [0, 1, 2].map(|c| self.horizon[c] * (1.0 - t) + self.zenith[c] * t)
    }

    /// Equirectangular rendering with `ss x ss` supersampling per pixel.
    pub fn render(&self, width: usize, ss: usize) -> Result<EquirectEnvMap<crate::image::Linear>> {
        let height = width / 2;
        let ss = ss.max(1);
        let img = LinearImage::from_fn(width, height, 3, |x, y, c| {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for j in 0..ss {
                for i in 0..ss {
                    let u = (x as f64 + (i as f64 + 0.5) / ss as f64) / width as f64;
                    let v = (y as f64 + (j as f64 + 0.5) / ss as f64) / height as f64;
                    // solid-angle weighting within the pixel
                    let w = (PI * v).sin();
                    acc += w * self.radiance(dir_from_equirect(u, v))[c];
                    wsum += w;
                }
            }
            (acc / wsum.max(1e-300)) as f32
        })?;
        EquirectEnvMap::new(img)
    }
}

pub const FLOOR_SIZE: f64 = 4.0;
pub const CUBE_SIZE: f64 = 0.5;

/// Writes the meshes, environment and `scene.json` into `dir`; returns the
/// scene file path.
pub fn write_demo_scene(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let floor = shapes::painted(shapes::floor_quad(FLOOR_SIZE), DVec3::splat(0.5));
    let h = CUBE_SIZE / 2.0;
    let cube = shapes::axis_box(DVec3::new(-h, 0.0, -h), DVec3::new(h, CUBE_SIZE, h));
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("floor.obj", write_obj(&floor))?;
    write("cube.obj", write_obj(&cube))?;
    write_exr(&dir.join("environment.exr"), SunSky::default().render(256, 4)?.image())?;
    let scene = demo_scene_file();
    let path = dir.join("scene.json");
    let json = serde_json::to_string_pretty(&scene).map_err(|e| Error::format(&path, e))?;
    write("scene.json", json + "\n")?;
    Ok(path)
}

pub fn demo_scene_file() -> SceneFile {
    let identity = [
        1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
    ];
    SceneFile {
        receiver_meshes: vec![ReceiverEntry {
            path: "floor.obj".into(),
            transform: identity,
        }],
        object_meshes: vec![ObjectEntry {
            path: "cube.obj".into(),
            transform: identity,
            material: MaterialEntry {
                base_color: [0.75, 0.18, 0.12],
                roughness: 0.6,
                metallic: 0.0,
            },
        }],
        environment: "environment.exr".into(),
        insertion_point: [0.0, 0.25, 0.0],
        cameras: vec![CameraEntry {
            position: [0.4, 2.0, 2.4],
            look_at: [0.3, 0.0, -0.3],
            up: [0.0, 1.0, 0.0],
            vertical_fov: 45.0,
            resolution: [96, 72],
        }],
        render: RenderEntry {
            samples_per_pixel: 32,
            max_depth: 4,
            seed: 7,
            face_resolution: 32,
            panorama_width: 128,
            ..RenderEntry::default()
        },
        shaping: Default::default(),
        fusion: Default::default(),
        oracle_evs: vec![-6.0, -3.0],
        backgrounds: vec![],
        references: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sun_sky_shape() {
        let s = SunSky::default();
        assert_eq!(s.radiance(s.sun_dir), s.sun_radiance);
        assert_eq!(s.radiance(DVec3::NEG_Y), s.ground);
        assert!((s.sun_dir.length() - 1.0).abs() < 1e-12);
        let map = s.render(64, 2).unwrap();
        assert_eq!(map.height(), 32);
        let peak = map.image().data().iter().fold(0.0f32, |a, &b| a.max(b));
        assert!(peak > 10.0);
    }

    #[test]
    fn demo_scene_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_demo_scene(dir.path()).unwrap();
        let desc = crate::scene_desc::parse_scene(&path).unwrap();
        assert_eq!(desc.cameras.len(), 1);
        let scene = desc.build_scene().unwrap();
        assert_eq!(scene.triangle_count(), 2 + 12);
    }
}

//! Renders R0, R1 and the object layer, then composites the shaped shadow
//! over a background at a few strengths.

use glam::DVec3;
use relume::compositor::{composite_from_renders, ShapingParams};
use relume::demo::SunSky;
use relume::io::write_png;
use relume::radiometry::{linear_to_srgb, TransferParams};
use relume::tracer::mesh::{shapes, Material};
use relume::tracer::{render_insertion_set, Camera, RenderSettings, Scene};

fn main() -> relume::Result<()> {
    let floor = shapes::painted(shapes::floor_quad(4.0), DVec3::splat(0.5)).into_receiver()?;
    let ball = shapes::uv_sphere(DVec3::new(0.0, 0.3, 0.0), 0.3, 24, 48).into_object(Material::new([0.2, 0.4, 0.8], 0.3, 0.0)?)?;
    let scene = Scene::new(vec![floor, ball])?;
    let cam = Camera::new(DVec3::new(0.3, 1.6, 2.2), DVec3::new(0.2, 0.0, -0.3), DVec3::Y, 45.0, 96, 72)?;
    let mut settings = RenderSettings::new(SunSky::default().render(256, 2)?);
    settings.samples_per_pixel = 32;
    let set = render_insertion_set(&scene, &cam, &settings)?;

    let t = TransferParams::default();
    let background = linear_to_srgb(&set.r0, &t);
    let dir = std::env::temp_dir().join("relume_shadow_composite");
    for strength in [0.0, 0.5, 0.9, 1.0] {
        let p = ShapingParams::new(ShapingParams::DEFAULT_GAMMA_S, ShapingParams::DEFAULT_S_MIN, strength)?;
        let (shaped, out) = composite_from_renders(&set.r0, &set.r1, &set.object, &background, &p, &t)?;
        let darkest = shaped.data().iter().fold(1.0f32, |m, &v| m.min(v));
        let path = dir.join(format!("composite_strength{strength}.png"));
        write_png(&path, &out)?;
        println!("strength {strength:.1}: darkest shaped ratio {darkest:.3} -> {}", path.display());
    }
    Ok(())
}

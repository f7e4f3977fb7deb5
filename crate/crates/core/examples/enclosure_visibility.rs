//! A receiver box around the whole scene. With decoupled environment
//! visibility the interior renders as if the box were absent; with strict
//! visibility the box blocks the sky and the interior goes dark.

use glam::DVec3;
use relume::demo::SunSky;
use relume::image::LinearImage;
use relume::tracer::mesh::{shapes, Material};
use relume::tracer::{render_view, Camera, EnclosureMode, Layer, RenderSettings, Scene};

fn mean(img: &LinearImage) -> f64 {
    img.pixels().map(|p| (p[0] + p[1] + p[2]) as f64 / 3.0).sum::<f64>() / (img.width() * img.height()) as f64
}

fn main() -> relume::Result<()> {
    let floor = shapes::painted(shapes::floor_quad(4.0), DVec3::splat(0.5)).into_receiver()?;
    let cube = shapes::axis_box(DVec3::new(-0.25, 0.0, -0.25), DVec3::new(0.25, 0.5, 0.25))
        .into_object(Material::diffuse([0.7, 0.2, 0.1])?)?;
    let room = shapes::painted(shapes::axis_box(DVec3::splat(-3.0), DVec3::splat(3.0)), DVec3::splat(0.1)).into_receiver()?;

    let cam = Camera::new(DVec3::new(0.0, 2.0, 1.2), DVec3::new(0.0, 0.0, -0.3), DVec3::Y, 40.0, 64, 48)?;
    let mut settings = RenderSettings::new(SunSky::default().render(256, 2)?);
    settings.samples_per_pixel = 32;

    let open = Scene::new(vec![floor.clone(), cube.clone()])?;
    let closed = Scene::new(vec![floor, cube, room])?;
    let base = mean(&render_view(&open, &cam, &settings, true, Layer::Full)?);
    let decoupled = mean(&render_view(&closed, &cam, &settings, true, Layer::Full)?);
    settings.enclosure = EnclosureMode::Strict;
    let strict = mean(&render_view(&closed, &cam, &settings, true, Layer::Full)?);

    println!("no enclosure        {base:.4}");
    println!("enclosed, decoupled {decoupled:.4} ({:+.1}%)", 100.0 * (decoupled / base - 1.0));
    println!("enclosed, strict    {strict:.4} ({:+.1}%)", 100.0 * (strict / base - 1.0));
    Ok(())
}

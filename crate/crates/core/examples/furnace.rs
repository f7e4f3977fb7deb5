//! White furnace: a unit-albedo sphere under a uniform unit sky must render
//! as radiance 1 wherever it covers the image.

use glam::DVec3;
use relume::image::LinearImage;
use relume::panorama::EquirectEnvMap;
use relume::tracer::mesh::shapes;
use relume::tracer::{render_view, Camera, Layer, RenderSettings, Scene};

fn main() -> relume::Result<()> {
    let sphere = shapes::painted(shapes::uv_sphere(DVec3::ZERO, 1.0, 48, 96), DVec3::ONE).into_receiver()?;
    let scene = Scene::new(vec![sphere])?;
    let env = EquirectEnvMap::new(LinearImage::filled(64, 32, 3, 1.0)?)?;
    let mut settings = RenderSettings::new(env);
    settings.samples_per_pixel = 256;
    settings.max_depth = 64;
    let cam = Camera::new(DVec3::new(0.0, 0.0, 3.0), DVec3::ZERO, DVec3::Y, 30.0, 64, 64)?;

    let img = render_view(&scene, &cam, &settings, false, Layer::Full)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for y in 24..40 {
        for x in 24..40 {
            sum += img.rgb(x, y).iter().map(|&v| v as f64).sum::<f64>() / 3.0;
            n += 1;
        }
    }
    println!("mean radiance over the sphere centre: {:.4}", sum / n as f64);
    Ok(())
}

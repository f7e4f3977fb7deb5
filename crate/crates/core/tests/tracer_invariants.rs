use glam::DVec3;

use relume::demo::SunSky;
use relume::image::{Linear, LinearImage};
use relume::panorama::EquirectEnvMap;
use relume::tracer::mesh::{shapes, Material};
use relume::tracer::{
    render_insertion_set, render_view, Camera, EnclosureMode, Layer, RenderSettings, SamplingStrategy, Scene,
};

fn sky(width: usize) -> EquirectEnvMap<Linear> {
    SunSky::default().render(width, 2).unwrap()
}

fn floor(size: f64, albedo: f64) -> relume::tracer::TriangleMesh {
    shapes::painted(shapes::floor_quad(size), DVec3::splat(albedo)).into_receiver().unwrap()
}

fn cube(material: Material) -> relume::tracer::TriangleMesh {
    shapes::axis_box(DVec3::new(-0.25, 0.0, -0.25), DVec3::new(0.25, 0.5, 0.25))
        .into_object(material)
        .unwrap()
}

fn mean(img: &LinearImage) -> f64 {
    img.pixels().map(|p| (p[0] + p[1] + p[2]) as f64).sum::<f64>() / (3 * img.width() * img.height()) as f64
}

/// Image means over `k` seeds: (mean, standard error).
fn seeded_mean(scene: &Scene, cam: &Camera, settings: &RenderSettings, k: u64) -> (f64, f64) {
    let vals: Vec<f64> = (0..k)
        .map(|seed| {
            let s = RenderSettings { seed: 100 + seed, ..settings.clone() };
            mean(&render_view(scene, cam, &s, true, Layer::Full).unwrap())
        })
        .collect();
    let m = vals.iter().sum::<f64>() / k as f64;
    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1) as f64;
    (m, (var / k as f64).sqrt())
}

#[test]
fn mis_matches_bsdf_sampling() {
    let cam = Camera::new(DVec3::new(0.4, 1.6, 2.2), DVec3::new(0.0, 0.2, 0.0), DVec3::Y, 40.0, 24, 18).unwrap();
    let scenes = [
        ("diffuse cube on floor", Scene::new(vec![floor(4.0, 0.5), cube(Material::diffuse([0.7, 0.2, 0.1]).unwrap())]).unwrap()),
        ("glossy cube on floor", Scene::new(vec![floor(4.0, 0.5), cube(Material::new([0.9, 0.8, 0.6], 0.3, 1.0).unwrap())]).unwrap()),
        (
            "sphere alone",
            Scene::new(vec![shapes::uv_sphere(DVec3::new(0.0, 0.3, 0.0), 0.5, 16, 32)
                .into_object(Material::new([0.5, 0.6, 0.7], 0.5, 0.3).unwrap())
                .unwrap()])
            .unwrap(),
        ),
    ];
    let mut settings = RenderSettings::new(sky(128));
    settings.samples_per_pixel = 16;
    for (name, scene) in &scenes {
        let (m_mis, e_mis) = seeded_mean(scene, &cam, &settings, 12);
        let bsdf = RenderSettings { strategy: SamplingStrategy::BsdfOnly, ..settings.clone() };
        let (m_bsdf, e_bsdf) = seeded_mean(scene, &cam, &bsdf, 12);
        let sigma = (e_mis * e_mis + e_bsdf * e_bsdf).sqrt();
        assert!(
            (m_mis - m_bsdf).abs() <= 2.0 * sigma,
            "{name}: mis {m_mis:.5} +- {e_mis:.5}, bsdf {m_bsdf:.5} +- {e_bsdf:.5}"
        );
        // MIS is the lower-variance estimator under a small bright sun
        assert!(e_mis < e_bsdf, "{name}: {e_mis} vs {e_bsdf}");
    }
}

#[test]
fn renders_do_not_depend_on_thread_count() {
    let scene = Scene::new(vec![floor(4.0, 0.5), cube(Material::new([0.7, 0.2, 0.1], 0.4, 0.2).unwrap())]).unwrap();
    let cam = Camera::new(DVec3::new(0.4, 2.0, 2.4), DVec3::new(0.3, 0.0, -0.3), DVec3::Y, 45.0, 40, 30).unwrap();
    let mut settings = RenderSettings::new(sky(128));
    settings.samples_per_pixel = 8;
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| render_insertion_set(&scene, &cam, &settings).unwrap())
    };
    let one = render(1);
    for threads in [3, 8] {
        let other = render(threads);
        assert_eq!(one.r0.data(), other.r0.data());
        assert_eq!(one.r1.data(), other.r1.data());
        assert_eq!(one.object.data(), other.object.data());
    }
}

#[test]
fn radiance_is_linear_in_the_environment() {
    let scene = Scene::new(vec![floor(4.0, 0.5), cube(Material::new([0.7, 0.2, 0.1], 0.4, 0.0).unwrap())]).unwrap();
    let cam = Camera::new(DVec3::new(0.4, 2.0, 2.4), DVec3::new(0.3, 0.0, -0.3), DVec3::Y, 45.0, 32, 24).unwrap();
    let env = sky(128);
    let k = 3.5f32;
    let scaled = EquirectEnvMap::new(LinearImage::new(env.width(), env.height(), 3, env.image().data().iter().map(|v| v * k).collect()).unwrap()).unwrap();
    let mut a = RenderSettings::new(env);
    a.samples_per_pixel = 8;
    let b = RenderSettings { env: scaled, ..a.clone() };
    let x = render_view(&scene, &cam, &a, true, Layer::Full).unwrap();
    let y = render_view(&scene, &cam, &b, true, Layer::Full).unwrap();
    for (p, q) in x.data().iter().zip(y.data()) {
        let expect = *p as f64 * k as f64;
        assert!((*q as f64 - expect).abs() <= 1e-5 * expect.abs() + 1e-12, "{q} vs {expect}");
    }
}

#[test]
fn strict_enclosure_blacks_out_the_interior() {
    let room = shapes::painted(shapes::axis_box(DVec3::splat(-3.0), DVec3::splat(3.0)), DVec3::splat(0.1))
        .into_receiver()
        .unwrap();
    let scene = Scene::new(vec![floor(4.0, 0.5), cube(Material::diffuse([0.7, 0.2, 0.1]).unwrap()), room]).unwrap();
    let open = Scene::new(vec![floor(4.0, 0.5), cube(Material::diffuse([0.7, 0.2, 0.1]).unwrap())]).unwrap();
    let cam = Camera::new(DVec3::new(0.0, 2.0, 1.2), DVec3::new(0.0, 0.0, -0.3), DVec3::Y, 40.0, 32, 24).unwrap();
    let mut settings = RenderSettings::new(sky(128));
    settings.samples_per_pixel = 16;
    let base = mean(&render_view(&open, &cam, &settings, true, Layer::Full).unwrap());
    let decoupled = mean(&render_view(&scene, &cam, &settings, true, Layer::Full).unwrap());
    let strict = RenderSettings { enclosure: EnclosureMode::Strict, ..settings.clone() };
    let dark = mean(&render_view(&scene, &cam, &strict, true, Layer::Full).unwrap());
    assert!((decoupled / base - 1.0).abs() < 0.05, "{decoupled} vs {base}");
    assert!(dark < 0.01 * base, "{dark} vs {base}");
}

#[test]
fn out_of_reach_object_leaves_receiver_untouched() {
    // everything the camera sees is floor, and the object hangs below it
    let scene = Scene::new(vec![
        floor(40.0, 0.5),
        shapes::axis_box(DVec3::new(-1.0, -6.0, -1.0), DVec3::new(1.0, -4.0, 1.0))
            .into_object(Material::diffuse([0.8; 3]).unwrap())
            .unwrap(),
    ])
    .unwrap();
    let cam = Camera::new(DVec3::new(0.0, 2.0, 0.5), DVec3::new(0.0, 0.0, -0.5), DVec3::Y, 40.0, 24, 18).unwrap();
    let mut settings = RenderSettings::new(sky(128));
    settings.samples_per_pixel = 8;
    let set = render_insertion_set(&scene, &cam, &settings).unwrap();
    assert_eq!(set.r0.data(), set.r1.data());
    // receivers are transparent to camera rays, so the object layer still
    // sees the box through the floor
    assert!(set.object.alpha_raster().max() > 0.0);
}

#[test]
fn object_shadows_its_footprint() {
    let scene = Scene::new(vec![floor(4.0, 0.5), cube(Material::diffuse([0.7, 0.2, 0.1]).unwrap())]).unwrap();
    let sun = SunSky::default().sun_dir;
    // look straight down at the floor point behind the cube, away from the sun
    let target = DVec3::new(-sun.x, 0.0, -sun.z).normalize() * 0.45;
    let cam = Camera::new(target + DVec3::new(0.0, 1.5, 0.0), target, DVec3::Z, 5.0, 8, 8).unwrap();
    let mut settings = RenderSettings::new(sky(256));
    settings.samples_per_pixel = 32;
    let set = render_insertion_set(&scene, &cam, &settings).unwrap();
    assert!(mean(&set.r1) < 0.5 * mean(&set.r0), "{} vs {}", mean(&set.r1), mean(&set.r0));
}

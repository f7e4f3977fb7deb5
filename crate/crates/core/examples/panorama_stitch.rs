//! Cube faces to equirectangular and back, with the round-trip PSNR per face.

use relume::demo::SunSky;
use relume::evalkit::psnr;
use relume::panorama::{resample_faces, stitch_cubemap, CubeFace};
use relume::radiometry::{linear_to_srgb, TransferParams};

fn main() -> relume::Result<()> {
    let t = TransferParams::default();
    let sky = SunSky::default().render(1024, 2)?;
    let display = relume::panorama::EquirectEnvMap::new(linear_to_srgb(sky.image(), &t))?;

    let faces = resample_faces(&display, 256)?;
    let pano = stitch_cubemap(&faces, 1024)?;
    let again = resample_faces(&pano, 256)?;
    for face in CubeFace::ALL {
        println!("{:5} {:6.2} dB", face.name(), psnr(faces.face(face), again.face(face))?);
    }
    let out = std::env::temp_dir().join("relume_stitched.png");
    relume::io::write_png(&out, pano.image())?;
    println!("panorama written to {}", out.display());
    Ok(())
}

//! PSNR and SSIM for a few degradations of one image, plus a preference
//! ratio.

use relume::evalkit::{psnr, ssim, vqa_ratio};
use relume::SrgbImage;

fn main() -> relume::Result<()> {
    let (w, h) = (96, 64);
    let reference = SrgbImage::from_fn(w, h, 3, |x, y, c| {
        let v = ((x as f32 * 0.21).sin() * (y as f32 * 0.13).cos() + 1.0) * 0.4 + 0.05 * c as f32;
        v.clamp(0.0, 1.0)
    })?;
    let darker = SrgbImage::from_fn(w, h, 3, |x, y, c| reference.pixel(x, y)[c] * 0.9)?;
    let shifted = SrgbImage::from_fn(w, h, 3, |x, y, c| reference.pixel((x + 1) % w, y)[c])?;
    let flat = SrgbImage::filled(w, h, 3, 0.5)?;

    for (name, img) in [("identical", &reference), ("10% darker", &darker), ("shifted 1px", &shifted), ("flat grey", &flat)] {
        println!("{name:12} PSNR {:6.2} dB  SSIM {:.4}", psnr(&reference, img)?, ssim(&reference, img)?);
    }
    println!("preference ratio for 0.71 vs 0.29: {:.3}", vqa_ratio(0.71, 0.29)?);
    Ok(())
}

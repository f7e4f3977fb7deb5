//! Re-exposes a synthetic HDR sky at three EVs, quantises each bracket to
//! 8-bit PNG and fuses them back into linear radiance.

use relume::demo::SunSky;
use relume::fusion::{fuse_brackets, Bracket, BracketSequence, FusionParams};
use relume::io::{read_png, write_png};
use relume::radiometry::{luminance, simulate_underexposure, LuminanceWeights, TransferParams};

fn main() -> relume::Result<()> {
    let dir = std::env::temp_dir().join("relume_exposure_fusion");
    let truth = SunSky::default().render(256, 2)?;
    let t = TransferParams::default();

    let mut brackets = Vec::new();
    for ev in [0.0, -3.0, -6.0] {
        let path = dir.join(format!("ev{ev}.png"));
        write_png(&path, &simulate_underexposure(truth.image(), ev, &t)?)?;
        brackets.push(Bracket { image: read_png(&path)?, ev });
    }
    let fused = fuse_brackets(&BracketSequence::from_unsorted(brackets)?, &FusionParams::default())?;

    let w = LuminanceWeights::default();
    let a = luminance(truth.image(), &w);
    let b = luminance(fused.map.image(), &w);
    let peak = a.data().iter().fold(0.0f32, |m, &v| m.max(v));
    let mut worst = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        if x > 0.05 {
            worst = worst.max(((y - x) / x).abs() as f64);
        }
    }
    println!("true peak luminance   {peak:.2}");
    println!("dynamic range         {:.2} stops", fused.dynamic_range_stops);
    println!("worst relative error  {:.2}% (8-bit brackets)", worst * 100.0);
    println!("brackets written to   {}", dir.display());
    Ok(())
}

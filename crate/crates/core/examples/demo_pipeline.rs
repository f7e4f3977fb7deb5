//! Writes the demo scene and runs every stage on it.
//!
//! ```text
//! cargo run --release --example demo_pipeline -- [out_dir]
//! ```

use std::path::PathBuf;

use relume::demo::write_demo_scene;
use relume::pipeline::{run_pipeline, BracketMode, RunOptions};
use relume::scene_desc::parse_scene;

fn main() -> relume::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "demo_out".into()).into();
    let scene_path = write_demo_scene(&out.join("scene"))?;
    let desc = parse_scene(&scene_path)?;
    let manifest = run_pipeline(&desc, &BracketMode::Oracle, &out.join("run"), &RunOptions::default())?;

    println!("scene        {}", scene_path.display());
    println!("fused HDR    {} ({:.2} stops)", manifest.fused_hdr, manifest.dynamic_range_stops);
    for (i, cam) in manifest.cameras.iter().enumerate() {
        println!("camera {i}     {}", cam.composite);
    }
    println!("manifest     {}", out.join("run").join(relume::pipeline::MANIFEST_NAME).display());
    Ok(())
}

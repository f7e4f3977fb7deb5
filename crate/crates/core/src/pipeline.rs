//! End-to-end run: capture, stitch, bracket, fuse, render, composite,
//! evaluate. Every stage reads and writes files under the output directory
//! and the run is summarised in `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compositor::composite_from_renders;
use crate::error::{Error, Result};
use crate::evalkit::{evaluate_pair, MetricReport};
use crate::fusion::{fuse_brackets, Bracket, BracketSequence};
use crate::io::{read_linear, read_png, write_exr, write_png};
use crate::panorama::stitch_cubemap;
use crate::radiometry::{linear_to_srgb, simulate_underexposure};
use crate::scene_desc::{FusionEntry, RenderEntry, SceneDescription, ShapingEntry};
use crate::tracer::{render_cubemap_hdr, render_insertion_set, RenderSettings};

/// Where the darker exposures come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BracketMode {
    /// Synthesised from the rendered HDR capture by exact re-exposure.
    Oracle,
    /// Supplied as `(path, ev)` pairs. The rendered EV 0 panorama is used as
    /// the base unless an EV 0 entry is given.
    External(Vec<(PathBuf, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketRecord {
    pub ev: f64,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraOutputs {
    pub r0: String,
    pub r1: String,
    pub object: String,
    pub background: String,
    pub shadow_ratio: String,
    pub composite: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub render: RenderEntry,
    pub shaping: ShapingEntry,
    pub fusion: FusionEntry,
    pub oracle_evs: Vec<f64>,
    pub insertion_point: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub seed: u64,
    pub bracket_mode: String,
    pub parameters: Parameters,
    pub cubemap_faces: Vec<String>,
    pub panorama_ev0: String,
    pub brackets: Vec<BracketRecord>,
    pub fused_hdr: String,
    pub dynamic_range_stops: f64,
    pub cameras: Vec<CameraOutputs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Run-time overrides of the scene file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Background images per camera, replacing the scene's and the default
    /// tone-mapped receiver render.
    pub backgrounds: Option<Vec<PathBuf>>,
}

fn rel(out_dir: &Path, p: &Path) -> String {
    p.strip_prefix(out_dir)
        .unwrap_or(p)
        .to_string_lossy()
        .replace('\\', "/")
}

fn ev_label(ev: f64) -> String {
    let s = format!("{ev}");
    s.replace('.', "p")
}

pub fn run_pipeline(
    scene: &SceneDescription,
    mode: &BracketMode,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<PipelineManifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let seed = opts.seed.unwrap_or(scene.file.render.seed);
    let transfer = scene.fusion.transfer;
    let r = &scene.file.render;

    let geometry = scene.build_scene().map_err(Error::in_stage("load"))?;
    let env = crate::panorama::EquirectEnvMap::new(read_linear(&scene.environment)?)
        .map_err(Error::in_stage("load"))?;
    let mut settings = RenderSettings::new(env);
    settings.samples_per_pixel = r.samples_per_pixel;
    settings.max_depth = r.max_depth;
    settings.seed = seed;
    settings.enclosure = scene.enclosure;

    // capture
    let hdr_faces = render_cubemap_hdr(&geometry, scene.insertion_point, r.face_resolution, &settings)
        .map_err(Error::in_stage("cubemap"))?;
    let mut cubemap_faces = Vec::new();
    for (face, img) in hdr_faces.iter() {
        let p = out_dir.join("cubemap").join(format!("{}.png", face.name()));
        write_png(&p, &linear_to_srgb(img, &transfer)).map_err(Error::in_stage("cubemap"))?;
        cubemap_faces.push(rel(out_dir, &p));
    }

    // stitch: the base panorama is display-referred and clips at 1
    let stitched_hdr = stitch_cubemap(&hdr_faces, r.panorama_width).map_err(Error::in_stage("stitch"))?;
    let ev0 = linear_to_srgb(stitched_hdr.image(), &transfer);
    let ev0_path = out_dir.join("panorama_ev0.png");
    write_png(&ev0_path, &ev0).map_err(Error::in_stage("stitch"))?;

    // brackets
    let mut brackets: Vec<(PathBuf, f64)> = Vec::new();
    let mode_name = match mode {
        BracketMode::Oracle => {
            for &ev in &scene.file.oracle_evs {
                let img = simulate_underexposure(stitched_hdr.image(), ev, &transfer)
                    .map_err(Error::in_stage("brackets"))?;
                let p = out_dir.join("brackets").join(format!("ev{}.png", ev_label(ev)));
                write_png(&p, &img).map_err(Error::in_stage("brackets"))?;
                brackets.push((p, ev));
            }
            "oracle"
        }
        BracketMode::External(list) => {
            brackets.extend(list.iter().cloned());
            "external"
        }
    };
    if !brackets.iter().any(|(_, ev)| *ev == 0.0) {
        brackets.push((ev0_path.clone(), 0.0));
    }

    // fuse
    let entries = brackets
        .iter()
        .map(|(p, ev)| Ok(Bracket { image: read_png(p)?, ev: *ev }))
        .collect::<Result<Vec<_>>>()
        .map_err(Error::in_stage("fuse"))?;
    let seq = BracketSequence::from_unsorted(entries).map_err(Error::in_stage("fuse"))?;
    let fused = fuse_brackets(&seq, &scene.fusion).map_err(Error::in_stage("fuse"))?;
    let fused_path = out_dir.join("fused_hdr.exr");
    write_exr(&fused_path, fused.map.image()).map_err(Error::in_stage("fuse"))?;

    // render under the reconstructed lighting
    settings.env = fused.map.clone();
    let backgrounds = opts.backgrounds.clone().unwrap_or_else(|| scene.backgrounds.clone());
    if !backgrounds.is_empty() && backgrounds.len() != scene.cameras.len() {
        return Err(Error::in_stage("composite")(Error::invalid("one background per camera is required")));
    }
    let mut cameras = Vec::new();
    let mut pairs = Vec::new();
    for (i, cam) in scene.cameras.iter().enumerate() {
        let dir = out_dir.join("cameras");
        let name = |s: &str, ext: &str| dir.join(format!("cam{i}_{s}.{ext}"));
        let set = render_insertion_set(&geometry, cam, &settings).map_err(Error::in_stage("render"))?;
        let (p_r0, p_r1, p_o) = (name("R0", "exr"), name("R1", "exr"), name("O", "exr"));
        write_exr(&p_r0, &set.r0).map_err(Error::in_stage("render"))?;
        write_exr(&p_r1, &set.r1).map_err(Error::in_stage("render"))?;
        write_exr(&p_o, &set.object).map_err(Error::in_stage("render"))?;

        let p_bg = match backgrounds.get(i) {
            Some(p) => p.clone(),
            None => {
                let p = name("background", "png");
                write_png(&p, &linear_to_srgb(&set.r0, &transfer)).map_err(Error::in_stage("composite"))?;
                p
            }
        };
        let stage = Error::in_stage("composite");
        let result = (|| {
            let background = read_png(&p_bg)?;
            composite_from_renders(&set.r0, &set.r1, &set.object, &background, &scene.shaping, &transfer)
        })();
        let (shaped, comp) = result.map_err(stage)?;
        let (p_s, p_c) = (name("shadow_ratio", "exr"), name("composite", "png"));
        write_exr(&p_s, &shaped.to_image()).map_err(Error::in_stage("composite"))?;
        write_png(&p_c, &comp).map_err(Error::in_stage("composite"))?;

        if let Some(reference) = scene.references.get(i) {
            let written = read_png(&p_c).map_err(Error::in_stage("eval"))?;
            let refimg = read_png(reference).map_err(Error::in_stage("eval"))?;
            pairs.push(evaluate_pair(format!("cam{i}"), &written, &refimg).map_err(Error::in_stage("eval"))?);
        }
        cameras.push(CameraOutputs {
            r0: rel(out_dir, &p_r0),
            r1: rel(out_dir, &p_r1),
            object: rel(out_dir, &p_o),
            background: rel(out_dir, &p_bg),
            shadow_ratio: rel(out_dir, &p_s),
            composite: rel(out_dir, &p_c),
        });
    }

    let metrics = if pairs.is_empty() {
        None
    } else {
        let p = out_dir.join("metrics.json");
        let report = MetricReport::from_pairs(pairs, None);
        write_json(&p, &report).map_err(Error::in_stage("eval"))?;
        Some(rel(out_dir, &p))
    };

    let manifest = PipelineManifest {
        seed,
        bracket_mode: mode_name.into(),
        parameters: Parameters {
            render: RenderEntry { seed, ..r.clone() },
            shaping: scene.file.shaping.clone(),
            fusion: scene.file.fusion.clone(),
            oracle_evs: scene.file.oracle_evs.clone(),
            insertion_point: scene.file.insertion_point,
        },
        cubemap_faces,
        panorama_ev0: rel(out_dir, &ev0_path),
        brackets: brackets
            .iter()
            .map(|(p, ev)| BracketRecord { ev: *ev, path: rel(out_dir, p) })
            .collect(),
        fused_hdr: rel(out_dir, &fused_path),
        dynamic_range_stops: fused.dynamic_range_stops,
        cameras,
        metrics,
    };
    write_json(&out_dir.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo::write_demo_scene;
    use crate::scene_desc::parse_scene;

    fn demo() -> (tempfile::TempDir, SceneDescription) {
        let dir = tempfile::tempdir().unwrap();
        let path = write_demo_scene(&dir.path().join("scene")).unwrap();
        let desc = parse_scene(&path).unwrap();
        (dir, desc)
    }

    #[test]
    fn oracle_run_records_existing_outputs() {
        let (dir, desc) = demo();
        let out = dir.path().join("run");
        let m = run_pipeline(&desc, &BracketMode::Oracle, &out, &RunOptions::default()).unwrap();
        assert_eq!(m.cubemap_faces.len(), 6);
        assert_eq!(m.brackets.len(), 3);
        assert_eq!(m.cameras.len(), 1);
        assert!(m.metrics.is_none());
        let c = &m.cameras[0];
        let mut paths = vec![&m.panorama_ev0, &m.fused_hdr, &c.r0, &c.r1, &c.object, &c.background, &c.composite];
        paths.extend(m.cubemap_faces.iter());
        paths.extend(m.brackets.iter().map(|b| &b.path));
        for p in paths {
            assert!(out.join(p).is_file(), "{p}");
        }
        let text = fs::read_to_string(out.join(MANIFEST_NAME)).unwrap();
        let back: PipelineManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert!(m.dynamic_range_stops > 3.0, "{}", m.dynamic_range_stops);
    }

    #[test]
    fn same_seed_same_bytes() {
        let (dir, desc) = demo();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let ma = run_pipeline(&desc, &BracketMode::Oracle, &a, &RunOptions::default()).unwrap();
        run_pipeline(&desc, &BracketMode::Oracle, &b, &RunOptions::default()).unwrap();
        for f in [&ma.fused_hdr, &ma.cameras[0].r0, &ma.cameras[0].r1, &ma.cameras[0].object, &ma.cameras[0].composite] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
        assert_eq!(fs::read(a.join(MANIFEST_NAME)).unwrap(), fs::read(b.join(MANIFEST_NAME)).unwrap());
    }

    #[test]
    fn missing_external_bracket_fails_in_fuse() {
        let (dir, desc) = demo();
        let ghost = dir.path().join("ghost_ev-3.png");
        let mode = BracketMode::External(vec![(ghost.clone(), -3.0)]);
        let err = run_pipeline(&desc, &mode, &dir.path().join("run"), &RunOptions::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("fuse"), "{msg}");
        assert!(msg.contains("ghost_ev-3.png"), "{msg}");
        assert_eq!(err.exit_code(), 4);
    }
}

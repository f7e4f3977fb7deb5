use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relume::compositor::{composite_from_renders, ShapingParams};
use relume::evalkit::{evaluate_pair, vqa_ratio, MetricReport};
use relume::fusion::{fuse_brackets, Bracket, BracketSequence, FusionParams};
use relume::io::{read_linear, read_png, write_exr, write_image, ImageFormat};
use relume::panorama::{stitch_cubemap, CubeFace, CubemapFaceSet, EquirectEnvMap};
use relume::pipeline::{run_pipeline, write_json, BracketMode, RunOptions};
use relume::radiometry::{linear_to_srgb, simulate_underexposure, TransferParams};
use relume::scene_desc::parse_scene;
use relume::tracer::{render_insertion_set, RenderSettings};
use relume::{Error, Result, SrgbImage};

#[derive(Parser, Debug)]
#[command(name = "relume", version, about = "HDR environment reconstruction and shadow compositing for object insertion")]
struct Cli {
    /// Overrides the render seed of the scene file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for outputs; relative `--out` paths are resolved against it.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stitch six cube faces into an equirectangular panorama.
    Stitch(StitchArgs),
    /// Fuse an exposure bracket into a linear HDR panorama.
    Fuse(FuseArgs),
    /// Synthesise darker exposures from a known HDR panorama.
    OracleBrackets(OracleArgs),
    /// Render R0, R1 and the object layer for every camera of a scene.
    Render(RenderArgs),
    /// Apply the shadow ratio of two renders to a background.
    Composite(CompositeArgs),
    /// PSNR and SSIM of predictions against references.
    Eval(EvalArgs),
    /// Run every stage on a scene description.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct StitchArgs {
    #[arg(long)]
    posx: PathBuf,
    #[arg(long)]
    negx: PathBuf,
    #[arg(long)]
    posy: PathBuf,
    #[arg(long)]
    negy: PathBuf,
    #[arg(long)]
    posz: PathBuf,
    #[arg(long)]
    negz: PathBuf,
    /// Panorama width; the height is half of it.
    #[arg(long, default_value_t = 512)]
    width: usize,
    /// Output file; PNG, EXR or PFM by extension.
    #[arg(long, default_value = "panorama.exr")]
    out: PathBuf,
    /// Display gamma used when converting between PNG and float formats.
    #[arg(long, default_value_t = TransferParams::DEFAULT_GAMMA)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct FuseArgs {
    /// `<path>:<ev>`, repeated; the highest EV is the base exposure.
    #[arg(long = "bracket", required = true, value_parser = parse_bracket)]
    brackets: Vec<(PathBuf, f64)>,
    #[arg(long, default_value = "fused_hdr.exr")]
    out: PathBuf,
    #[arg(long, default_value_t = FusionParams::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value_t = FusionParams::DEFAULT_HALFWIDTH)]
    halfwidth: f64,
    #[arg(long, default_value_t = TransferParams::DEFAULT_GAMMA)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Linear HDR panorama (EXR or PFM).
    #[arg(long)]
    hdr: PathBuf,
    /// Exposure in stops, repeated.
    #[arg(long = "ev", required = true, allow_negative_numbers = true)]
    evs: Vec<f64>,
    /// File name prefix inside the output directory.
    #[arg(long, default_value = "ev")]
    prefix: String,
    #[arg(long, default_value_t = TransferParams::DEFAULT_GAMMA)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Scene description (JSON).
    scene: PathBuf,
    /// Environment map replacing the scene's, e.g. a fused panorama.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long)]
    spp: Option<u32>,
}

#[derive(Args, Debug)]
struct CompositeArgs {
    #[arg(long)]
    r0: PathBuf,
    #[arg(long)]
    r1: PathBuf,
    /// Premultiplied RGBA object layer.
    #[arg(long)]
    object: PathBuf,
    #[arg(long)]
    background: PathBuf,
    #[arg(long, default_value = "composite.png")]
    out: PathBuf,
    /// Also write the shaped ratio to this file.
    #[arg(long)]
    ratio_out: Option<PathBuf>,
    #[arg(long, default_value_t = ShapingParams::DEFAULT_GAMMA_S)]
    shadow_gamma: f64,
    #[arg(long, default_value_t = ShapingParams::DEFAULT_S_MIN)]
    shadow_min: f64,
    #[arg(long, default_value_t = ShapingParams::DEFAULT_LAMBDA)]
    shadow_strength: f64,
    #[arg(long, default_value_t = TransferParams::DEFAULT_GAMMA)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Prediction image or directory.
    #[arg(long)]
    pred: PathBuf,
    /// Reference image or directory; directories are paired by file name.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long, requires = "neg_score")]
    pos_score: Option<f64>,
    #[arg(long, requires = "pos_score")]
    neg_score: Option<f64>,
    /// Report file; the report is always printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Oracle,
    External,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    scene: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Oracle)]
    mode: ModeArg,
    /// `<path>:<ev>`, repeated; external mode only.
    #[arg(long = "bracket", value_parser = parse_bracket)]
    brackets: Vec<(PathBuf, f64)>,
    /// Background PNG per camera, repeated in camera order.
    #[arg(long = "background")]
    backgrounds: Vec<PathBuf>,
}

fn parse_bracket(s: &str) -> std::result::Result<(PathBuf, f64), String> {
    let (path, ev) = s
        .rsplit_once(':')
        .ok_or_else(|| format!("expected <path>:<ev>, got `{s}`"))?;
    let ev: f64 = ev.parse().map_err(|_| format!("bad exposure value `{ev}`"))?;
    if path.is_empty() || !ev.is_finite() {
        return Err(format!("expected <path>:<ev>, got `{s}`"));
    }
    Ok((PathBuf::from(path), ev))
}

fn resolve(out_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        out_dir.join(p)
    }
}

/// Reads display values from PNG, or encodes a float image.
fn read_display(path: &Path, t: &TransferParams) -> Result<SrgbImage> {
    if ImageFormat::from_path(path)?.is_float() {
        Ok(linear_to_srgb(&read_linear(path)?, t))
    } else {
        read_png(path)
    }
}

fn stitch(a: StitchArgs, out_dir: &Path) -> Result<()> {
    let t = TransferParams::new(a.gamma)?;
    let out = resolve(out_dir, &a.out);
    let inputs = [
        (CubeFace::PosX, &a.posx),
        (CubeFace::NegX, &a.negx),
        (CubeFace::PosY, &a.posy),
        (CubeFace::NegY, &a.negy),
        (CubeFace::PosZ, &a.posz),
        (CubeFace::NegZ, &a.negz),
    ];
    let all_float = inputs
        .iter()
        .map(|(_, p)| ImageFormat::from_path(p).map(ImageFormat::is_float))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|f| f);
    if all_float {
        let faces = inputs
            .iter()
            .map(|(f, p)| Ok((*f, read_linear(p)?)))
            .collect::<Result<Vec<_>>>()?;
        let pano = stitch_cubemap(&CubemapFaceSet::from_faces(faces)?, a.width)?;
        if ImageFormat::from_path(&out)?.is_float() {
            write_image(&out, pano.image())
        } else {
            write_image(&out, &linear_to_srgb(pano.image(), &t))
        }
    } else {
        let faces = inputs
            .iter()
            .map(|(f, p)| Ok((*f, read_display(p, &t)?)))
            .collect::<Result<Vec<_>>>()?;
        let pano = stitch_cubemap(&CubemapFaceSet::from_faces(faces)?, a.width)?;
        if ImageFormat::from_path(&out)?.is_float() {
            write_image(&out, &relume::radiometry::srgb_to_linear(pano.image(), &t))
        } else {
            write_image(&out, pano.image())
        }
    }?;
    println!("{}", out.display());
    Ok(())
}

fn fuse(a: FuseArgs, out_dir: &Path) -> Result<()> {
    let t = TransferParams::new(a.gamma)?;
    let params = FusionParams::new(
        a.threshold,
        a.halfwidth,
        FusionParams::DEFAULT_EPSILON,
        t,
        Default::default(),
    )?;
    let entries = a
        .brackets
        .iter()
        .map(|(p, ev)| Ok(Bracket { image: read_png(p)?, ev: *ev }))
        .collect::<Result<Vec<_>>>()?;
    let fused = fuse_brackets(&BracketSequence::from_unsorted(entries)?, &params)?;
    let out = resolve(out_dir, &a.out);
    write_exr(&out, fused.map.image())?;
    println!("{}\tdynamic range {:.3} stops", out.display(), fused.dynamic_range_stops);
    Ok(())
}

fn oracle_brackets(a: OracleArgs, out_dir: &Path) -> Result<()> {
    let t = TransferParams::new(a.gamma)?;
    let hdr = read_linear(&a.hdr)?;
    for ev in a.evs {
        let img = simulate_underexposure(&hdr, ev, &t)?;
        let out = out_dir.join(format!("{}{}.png", a.prefix, ev));
        write_image(&out, &img)?;
        println!("{}:{}", out.display(), ev);
    }
    Ok(())
}

fn render(a: RenderArgs, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let desc = parse_scene(&a.scene)?;
    let scene = desc.build_scene()?;
    let env_path = a.env.unwrap_or_else(|| desc.environment.clone());
    let mut settings = RenderSettings::new(EquirectEnvMap::new(read_linear(&env_path)?)?);
    let r = &desc.file.render;
    settings.samples_per_pixel = a.spp.unwrap_or(r.samples_per_pixel);
    settings.max_depth = r.max_depth;
    settings.seed = seed.unwrap_or(r.seed);
    settings.enclosure = desc.enclosure;
    for (i, cam) in desc.cameras.iter().enumerate() {
        let set = render_insertion_set(&scene, cam, &settings)?;
        for (name, img) in [("R0", &set.r0), ("R1", &set.r1), ("O", &set.object)] {
            let out = out_dir.join(format!("cam{i}_{name}.exr"));
            write_exr(&out, img)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn composite(a: CompositeArgs, out_dir: &Path) -> Result<()> {
    let t = TransferParams::new(a.gamma)?;
    let p = ShapingParams::new(a.shadow_gamma, a.shadow_min, a.shadow_strength)?;
    let r0 = read_linear(&a.r0)?;
    let r1 = read_linear(&a.r1)?;
    let object = read_linear(&a.object)?;
    if !object.has_alpha() {
        return Err(Error::invalid(format!("{}: object layer needs an alpha channel", a.object.display())));
    }
    let background = read_display(&a.background, &t)?;
    let (shaped, out_img) = composite_from_renders(&r0, &r1, &object, &background, &p, &t)?;
    let out = resolve(out_dir, &a.out);
    write_image(&out, &out_img)?;
    if let Some(rp) = a.ratio_out {
        write_image(&resolve(out_dir, &rp), &shaped.to_image())?;
    }
    println!("{}", out.display());
    Ok(())
}

fn image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.is_file() && ImageFormat::from_path(&p).is_ok() {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn eval(a: EvalArgs, out_dir: &Path) -> Result<()> {
    let t = TransferParams::default();
    let pairs: Vec<(String, PathBuf, PathBuf)> = if a.pred.is_dir() {
        if !a.reference.is_dir() {
            return Err(Error::invalid("--pred is a directory but --ref is not"));
        }
        let preds = image_files(&a.pred)?;
        let mut pairs = Vec::new();
        for p in preds {
            let name = p.file_name().unwrap_or_default().to_owned();
            let r = a.reference.join(&name);
            if r.is_file() {
                pairs.push((name.to_string_lossy().into_owned(), p, r));
            }
        }
        if pairs.is_empty() {
            return Err(Error::invalid("no file names shared by the prediction and reference directories"));
        }
        pairs
    } else {
        let name = a.pred.file_name().unwrap_or_default().to_string_lossy().into_owned();
        vec![(name, a.pred.clone(), a.reference.clone())]
    };
    let metrics = pairs
        .iter()
        .map(|(n, p, r)| evaluate_pair(n.clone(), &read_display(p, &t)?, &read_display(r, &t)?))
        .collect::<Result<Vec<_>>>()?;
    let ratio = match (a.pos_score, a.neg_score) {
        (Some(p), Some(n)) => Some(vqa_ratio(p, n)?),
        _ => None,
    };
    let report = MetricReport::from_pairs(metrics, ratio);
    if let Some(out) = a.out {
        write_json(&resolve(out_dir, &out), &report)?;
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::invalid(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn pipeline(a: PipelineArgs, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let desc = parse_scene(&a.scene)?;
    let mode = match a.mode {
        ModeArg::Oracle if !a.brackets.is_empty() => {
            return Err(Error::invalid("--bracket is only accepted with --mode external"));
        }
        ModeArg::Oracle => BracketMode::Oracle,
        ModeArg::External if a.brackets.is_empty() => {
            return Err(Error::invalid("--mode external needs at least one --bracket"));
        }
        ModeArg::External => BracketMode::External(a.brackets),
    };
    let opts = RunOptions {
        seed,
        backgrounds: (!a.backgrounds.is_empty()).then_some(a.backgrounds),
    };
    let manifest = run_pipeline(&desc, &mode, out_dir, &opts)?;
    println!(
        "{}\tdynamic range {:.3} stops",
        out_dir.join(relume::pipeline::MANIFEST_NAME).display(),
        manifest.dynamic_range_stops
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    let out_dir = cli.out_dir.as_path();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match cli.command {
        Command::Stitch(a) => stitch(a, out_dir),
        Command::Fuse(a) => fuse(a, out_dir),
        Command::OracleBrackets(a) => oracle_brackets(a, out_dir),
        Command::Render(a) => render(a, out_dir, cli.seed),
        Command::Composite(a) => composite(a, out_dir),
        Command::Eval(a) => eval(a, out_dir),
        Command::Pipeline(a) => pipeline(a, out_dir, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

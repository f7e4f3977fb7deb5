//! JSON scene descriptions.
//!
//! The schema is strict: unknown keys are rejected so that a misspelt
//! parameter fails loudly instead of silently falling back to a default.
//! Relative paths are resolved against the scene file's directory.

use std::path::{Path, PathBuf};

use glam::{DMat4, DVec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compositor::ShapingParams;
use crate::error::Result;
use crate::fusion::FusionParams;
use crate::radiometry::{LuminanceWeights, TransferParams};
use crate::tracer::mesh::{load_obj, Material, TriangleMesh};
use crate::tracer::{Camera, EnclosureMode, Scene};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene file {} not found", path.display())]
    NotFound { path: PathBuf },

    #[error("scene file {}: {message}", path.display())]
    Malformed { path: PathBuf, message: String },

    #[error("{field} references missing file {}", path.display())]
    MissingFile { field: String, path: PathBuf },

    #[error("{field}: transform is singular (|det| = {det:e})")]
    SingularTransform { field: String, det: f64 },

    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl SceneError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SceneError::NotFound { .. } => 10,
            SceneError::Malformed { .. } => 11,
            SceneError::MissingFile { .. } => 12,
            SceneError::SingularTransform { .. } => 13,
            SceneError::Invalid { .. } => 14,
        }
    }

    fn invalid(field: impl Into<String>, message: impl ToString) -> Self {
        SceneError::Invalid {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

const IDENTITY: [f64; 16] = [
    1.0, 0.0, 0.0, 0.0, //
    0.0, 1.0, 0.0, 0.0, //
    0.0, 0.0, 1.0, 0.0, //
    0.0, 0.0, 0.0, 1.0,
];

fn identity() -> [f64; 16] {
    IDENTITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverEntry {
    pub path: PathBuf,
    /// Row-major 4x4.
    #[serde(default = "identity")]
    pub transform: [f64; 16],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub base_color: [f64; 3],
    #[serde(default = "default_roughness")]
    pub roughness: f64,
    #[serde(default)]
    pub metallic: f64,
}

fn default_roughness() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectEntry {
    pub path: PathBuf,
    #[serde(default = "identity")]
    pub transform: [f64; 16],
    pub material: MaterialEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    #[serde(default = "default_up")]
    pub up: [f64; 3],
    /// Degrees.
    #[serde(default = "default_fov")]
    pub vertical_fov: f64,
    /// `[width, height]`.
    pub resolution: [usize; 2],
}

fn default_up() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

fn default_fov() -> f64 {
    45.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EnclosureEntry {
    #[default]
    Decoupled,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderEntry {
    pub samples_per_pixel: u32,
    pub max_depth: u32,
    pub seed: u64,
    /// Cube face resolution of the panorama capture.
    pub face_resolution: usize,
    pub panorama_width: usize,
    pub enclosure: EnclosureEntry,
}

impl Default for RenderEntry {
    fn default() -> Self {
        Self {
            samples_per_pixel: 64,
            max_depth: 4,
            seed: 0,
            face_resolution: 64,
            panorama_width: 256,
            enclosure: EnclosureEntry::Decoupled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapingEntry {
    pub gamma_s: f64,
    pub s_min: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub validity_bound: f64,
}

impl Default for ShapingEntry {
    fn default() -> Self {
        Self {
            gamma_s: ShapingParams::DEFAULT_GAMMA_S,
            s_min: ShapingParams::DEFAULT_S_MIN,
            lambda: ShapingParams::DEFAULT_LAMBDA,
            epsilon: ShapingParams::DEFAULT_EPSILON,
            validity_bound: ShapingParams::DEFAULT_VALIDITY_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionEntry {
    pub threshold: f64,
    pub halfwidth: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for FusionEntry {
    fn default() -> Self {
        Self {
            threshold: FusionParams::DEFAULT_THRESHOLD,
            halfwidth: FusionParams::DEFAULT_HALFWIDTH,
            epsilon: FusionParams::DEFAULT_EPSILON,
            gamma: TransferParams::DEFAULT_GAMMA,
        }
    }
}

fn default_evs() -> Vec<f64> {
    vec![-6.0, -3.0]
}

/// The file as written, with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub receiver_meshes: Vec<ReceiverEntry>,
    pub object_meshes: Vec<ObjectEntry>,
    /// Linear environment map (EXR or PFM) lighting the scene.
    pub environment: PathBuf,
    pub insertion_point: [f64; 3],
    pub cameras: Vec<CameraEntry>,
    #[serde(default)]
    pub render: RenderEntry,
    #[serde(default)]
    pub shaping: ShapingEntry,
    #[serde(default)]
    pub fusion: FusionEntry,
    /// Darker exposures synthesised in oracle mode; EV 0 is always the
    /// rendered panorama.
    #[serde(default = "default_evs")]
    pub oracle_evs: Vec<f64>,
    /// Optional photographic background per camera (PNG).
    #[serde(default)]
    pub backgrounds: Vec<PathBuf>,
    /// Optional reference composites per camera (PNG) for evaluation.
    #[serde(default)]
    pub references: Vec<PathBuf>,
}

/// Validated scene with absolute paths and typed parameters.
#[derive(Debug, Clone)]
pub struct SceneDescription {
    pub file: SceneFile,
    pub base_dir: PathBuf,
    pub receivers: Vec<(PathBuf, DMat4)>,
    pub objects: Vec<(PathBuf, DMat4, Material)>,
    pub environment: PathBuf,
    pub insertion_point: DVec3,
    pub cameras: Vec<Camera>,
    pub shaping: ShapingParams,
    pub fusion: FusionParams,
    pub enclosure: EnclosureMode,
    pub backgrounds: Vec<PathBuf>,
    pub references: Vec<PathBuf>,
}

pub fn parse_scene(path: &Path) -> Result<SceneDescription> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            SceneError::NotFound { path: path.into() }
        } else {
            SceneError::Malformed {
                path: path.into(),
                message: e.to_string(),
            }
        }
    })?;
    let file: SceneFile = serde_json::from_str(&text).map_err(|e| SceneError::Malformed {
        path: path.into(),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(validate(file, &base)?)
}

fn resolve(base: &Path, p: &Path, field: &str) -> std::result::Result<PathBuf, SceneError> {
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    if full.is_file() {
        Ok(full)
    } else {
        Err(SceneError::MissingFile {
            field: field.into(),
            path: full,
        })
    }
}

fn matrix(m: &[f64; 16], field: &str) -> std::result::Result<DMat4, SceneError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SceneError::invalid(field, "transform has non-finite entries"));
    }
    let mat = DMat4::from_cols_array(m).transpose();
    let det = mat.determinant();
    if det.abs() <= 1e-9 {
        return Err(SceneError::SingularTransform { field: field.into(), det });
    }
    Ok(mat)
}

fn vec3(v: [f64; 3], field: &str) -> std::result::Result<DVec3, SceneError> {
    let d = DVec3::from_array(v);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(SceneError::invalid(field, "vector has non-finite entries"))
    }
}

/// Checks a parsed file and resolves its paths against `base`.
pub fn validate(file: SceneFile, base: &Path) -> std::result::Result<SceneDescription, SceneError> {
    if file.receiver_meshes.is_empty() {
        return Err(SceneError::invalid("receiver_meshes", "at least one receiver mesh is required"));
    }
    if file.object_meshes.is_empty() {
        return Err(SceneError::invalid("object_meshes", "at least one object mesh is required"));
    }
    if file.cameras.is_empty() {
        return Err(SceneError::invalid("cameras", "at least one camera is required"));
    }
    let mut receivers = Vec::new();
    for (i, r) in file.receiver_meshes.iter().enumerate() {
        let f = format!("receiver_meshes[{i}]");
        receivers.push((resolve(base, &r.path, &f)?, matrix(&r.transform, &f)?));
    }
    let mut objects = Vec::new();
    for (i, o) in file.object_meshes.iter().enumerate() {
        let f = format!("object_meshes[{i}]");
        let m = &o.material;
        let material = Material::new(m.base_color, m.roughness, m.metallic)
            .map_err(|e| SceneError::invalid(format!("{f}.material"), e))?;
        objects.push((resolve(base, &o.path, &f)?, matrix(&o.transform, &f)?, material));
    }
    let environment = resolve(base, &file.environment, "environment")?;
    let insertion_point = vec3(file.insertion_point, "insertion_point")?;
    let mut cameras = Vec::new();
    for (i, c) in file.cameras.iter().enumerate() {
        let f = format!("cameras[{i}]");
        let cam = Camera::new(
            vec3(c.position, &f)?,
            vec3(c.look_at, &f)?,
            vec3(c.up, &f)?,
            c.vertical_fov,
            c.resolution[0],
            c.resolution[1],
        )
        .map_err(|e| SceneError::invalid(&f, e))?;
        cameras.push(cam);
    }
    let r = &file.render;
    if r.samples_per_pixel == 0 {
        return Err(SceneError::invalid("render.samples_per_pixel", "must be at least 1"));
    }
    if r.max_depth == 0 {
        return Err(SceneError::invalid("render.max_depth", "must be at least 1"));
    }
    if r.face_resolution == 0 {
        return Err(SceneError::invalid("render.face_resolution", "must be positive"));
    }
    if r.panorama_width == 0 || !r.panorama_width.is_multiple_of(2) {
        return Err(SceneError::invalid("render.panorama_width", "must be even and positive"));
    }
    let s = &file.shaping;
    let shaping = ShapingParams::with_bounds(s.gamma_s, s.s_min, s.lambda, s.epsilon, s.validity_bound)
        .map_err(|e| SceneError::invalid("shaping", e))?;
    let fu = &file.fusion;
    let transfer = TransferParams::new(fu.gamma).map_err(|e| SceneError::invalid("fusion.gamma", e))?;
    let fusion = FusionParams::new(fu.threshold, fu.halfwidth, fu.epsilon, transfer, LuminanceWeights::default())
        .map_err(|e| SceneError::invalid("fusion", e))?;
    if file.oracle_evs.iter().any(|ev| !(ev.is_finite() && *ev < 0.0)) {
        return Err(SceneError::invalid("oracle_evs", "exposures must be finite and negative"));
    }
    let mut backgrounds = Vec::new();
    for (i, b) in file.backgrounds.iter().enumerate() {
        backgrounds.push(resolve(base, b, &format!("backgrounds[{i}]"))?);
    }
    if !backgrounds.is_empty() && backgrounds.len() != cameras.len() {
        return Err(SceneError::invalid("backgrounds", "one background per camera is required"));
    }
    let mut references = Vec::new();
    for (i, b) in file.references.iter().enumerate() {
        references.push(resolve(base, b, &format!("references[{i}]"))?);
    }
    if !references.is_empty() && references.len() != cameras.len() {
        return Err(SceneError::invalid("references", "one reference per camera is required"));
    }
    let enclosure = match r.enclosure {
        EnclosureEntry::Decoupled => EnclosureMode::Decoupled,
        EnclosureEntry::Strict => EnclosureMode::Strict,
    };
    Ok(SceneDescription {
        base_dir: base.to_path_buf(),
        receivers,
        objects,
        environment,
        insertion_point,
        cameras,
        shaping,
        fusion,
        enclosure,
        backgrounds,
        references,
        file,
    })
}

impl SceneDescription {
    /// Loads and transforms every mesh.
    pub fn load_meshes(&self) -> Result<Vec<TriangleMesh>> {
        let mut meshes = Vec::new();
        for (i, (path, m)) in self.receivers.iter().enumerate() {
            let field = format!("receiver_meshes[{i}]");
            let mesh = load_obj(path)?
                .into_receiver()
                .map_err(|e| SceneError::invalid(&field, e))?
                .transformed(m)?;
            meshes.push(mesh);
        }
        for (path, m, material) in &self.objects {
            meshes.push(load_obj(path)?.into_object(*material)?.transformed(m)?);
        }
        Ok(meshes)
    }

    pub fn build_scene(&self) -> Result<Scene> {
        Scene::new(self.load_meshes()?)
    }
}

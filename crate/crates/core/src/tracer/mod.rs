//! Monte Carlo path tracer for receiver and object renders.

pub mod bsdf;
pub mod bvh;
pub mod camera;
pub mod env;
pub mod mesh;
pub mod render;
pub mod rng;
pub mod scene;

pub use bsdf::{effective_bsdf, ray_indicator, Ray, RayType, ScatterDecision};
pub use camera::Camera;
pub use env::EnvLight;
pub use mesh::{load_obj, Material, MeshRole, ObjData, TriangleMesh};
pub use render::{
    render_cubemap_at, render_cubemap_hdr, render_insertion_set, render_view, EnclosureMode,
    InsertionRenderSet, Layer, RenderSettings, Rendered, Renderer, SamplingStrategy,
};
pub use scene::{Scene, SurfacePoint};

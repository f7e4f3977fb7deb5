//! Relume: HDR environment reconstruction, ray-decoupled rendering and
//! shadow-ratio compositing for inserting virtual objects into captured
//! scenes.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`panorama`]: render or load six cube faces and stitch them into an
//!    equirectangular panorama.
//! 2. [`radiometry`] and [`fusion`]: turn a bracket of display-referred
//!    exposures into linear HDR radiance.
//! 3. [`tracer`]: path trace reconstructed receiver geometry with and
//!    without the inserted object under that lighting.
//! 4. [`compositor`]: convert the two renders into a per-channel shadow
//!    ratio and apply it to the background photograph.
//! 5. [`evalkit`]: PSNR, SSIM and preference-score ratios.
//!
//! [`pipeline`] chains the stages and records every output in a manifest.
//! The runnable programs under `examples/` walk through each capability.

pub mod compositor;
pub mod demo;
pub mod error;
pub mod evalkit;
pub mod fusion;
pub mod image;
pub mod io;
pub mod panorama;
pub mod pipeline;
pub mod radiometry;
pub mod scene_desc;
pub mod tracer;

pub use error::{Error, Result};
pub use image::{Image, LinearImage, Raster, SrgbImage};

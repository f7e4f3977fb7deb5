//! Pinhole camera.

use glam::DVec3;

use crate::error::{Error, Result};
use crate::panorama::CubeFace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    position: DVec3,
    forward: DVec3,
    right: DVec3,
    up: DVec3,
    tan_half_fov: f64,
    width: usize,
    height: usize,
}

impl Camera {
    /// `vertical_fov` in degrees; `up` only needs to be non-parallel to the
    /// viewing direction.
    pub fn new(
        position: DVec3,
        look_at: DVec3,
        up: DVec3,
        vertical_fov: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("camera resolution must be positive"));
        }
        if !(vertical_fov > 0.0 && vertical_fov < 180.0) {
            return Err(Error::invalid(format!(
                "vertical field of view must lie in (0, 180) degrees, got {vertical_fov}"
            )));
        }
        if !position.is_finite() || !look_at.is_finite() || !up.is_finite() {
            return Err(Error::invalid("camera vectors must be finite"));
        }
        let forward = (look_at - position).try_normalize().ok_or_else(|| {
            Error::invalid("camera position and look-at point coincide")
        })?;
        let right = forward
            .cross(up)
            .try_normalize()
            .ok_or_else(|| Error::invalid("camera up vector is parallel to the view direction"))?;
        Ok(Self {
            position,
            forward,
            right,
            up: right.cross(forward),
            tan_half_fov: (vertical_fov.to_radians() * 0.5).tan(),
            width,
            height,
        })
    }

    /// 90 degree square view matching the cube-face pixel layout.
    pub fn cube_face(position: DVec3, face: CubeFace, n: usize) -> Result<Self> {
        let (f, _, down) = face.basis();
        Self::new(position, position + f, -down, 90.0, n, n)
    }

    pub fn position(&self) -> DVec3 {
        self.position
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Unit direction through image-plane point `(x, y)` in pixel units,
    /// `(0, 0)` being the top-left corner.
    pub fn direction(&self, x: f64, y: f64) -> DVec3 {
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * x / self.width as f64 - 1.0) * self.tan_half_fov * aspect;
        let sy = (1.0 - 2.0 * y / self.height as f64) * self.tan_half_fov;
        (self.forward + sx * self.right + sy * self.up).normalize()
    }
}

//! Auto-fitted perspective camera looking along a fixed isometric direction.

use seekcad_core::kernel::V3;

/// Normalized coordinates are snapped to this grid so that uniformly scaled
/// copies of a model project to identical pixels.
const SNAP: f64 = (1u64 << 24) as f64;
const FOV_DEGREES: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    center: V3,
    radius: f64,
    eye: V3,
    right: V3,
    up: V3,
    forward: V3,
    focal: f64,
    half_w: f64,
    half_h: f64,
}

/// A vertex in screen space; `inv_depth` grows towards the viewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub x: f64,
    pub y: f64,
    pub inv_depth: f64,
}

impl Camera {
    /// Frames the bounding sphere of `lo..hi`, viewed from the (1, -1, 1) side.
    pub fn fit(lo: V3, hi: V3, width: u32, height: u32) -> Option<Camera> {
        let radius = (hi - lo).norm() / 2.0;
        if !(radius > 0.0) || !radius.is_finite() {
            return None;
        }
        let toward_eye = V3::new(1.0, -1.0, 1.0).normalize();
        let half_fov = (FOV_DEGREES / 2.0).to_radians();
        let forward = -toward_eye;
        let right = forward.cross(&V3::z()).normalize();
        let up = right.cross(&forward);
        let (half_w, half_h) = (width as f64 / 2.0, height as f64 / 2.0);
        Some(Camera {
            center: (lo + hi) / 2.0,
            radius,
            eye: toward_eye * (1.05 / half_fov.sin()),
            right,
            up,
            forward,
            focal: half_w.min(half_h) / half_fov.tan(),
            half_w,
            half_h,
        })
    }

    /// Model point in the camera's unit-sphere frame.
    pub fn normalize(&self, p: V3) -> V3 {
        ((p - self.center) / self.radius).map(|c| (c * SNAP).round() / SNAP)
    }

    pub fn project(&self, p: V3) -> Projected {
        let v = self.normalize(p) - self.eye;
        let depth = v.dot(&self.forward);
        Projected {
            x: self.half_w + self.focal * v.dot(&self.right) / depth,
            y: self.half_h - self.focal * v.dot(&self.up) / depth,
            inv_depth: 1.0 / depth,
        }
    }

    /// Depth of a model point along the view direction.
    pub fn depth(&self, p: V3) -> f64 {
        (self.normalize(p) - self.eye).dot(&self.forward)
    }
}

//! Pinhole camera model, per-pixel rays, and the 6-channel Plücker embedding.
//!
//! Conventions: zero-skew intrinsics, world-to-camera extrinsics `x_c = R X + t`,
//! pixel centers at `(u + 0.5, v + 0.5)`, and world-frame Plücker coordinates
//! `(d, o x d)` with unit direction `d` and camera center `o = -R^T t`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ChannelMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

/// On-disk camera format: {fx, fy, cx, cy, width, height, R (row-major 9), t (3)}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "R")]
    pub rotation: [f64; 9],
    #[serde(rename = "t")]
    pub translation: [f64; 3],
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::Config(format!("focal lengths must be positive: {fx}, {fy}")));
        }
        let should_be_identity = rotation.transpose() * rotation;
        let dev = (should_be_identity - Matrix3::identity()).abs().max();
        if dev > 1e-9 {
            return Err(Error::Config(format!("rotation not orthonormal (deviation {dev:.3e})")));
        }
        if (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("rotation determinant != +1".into()));
        }
        Ok(Self { fx, fy, cx, cy, width, height, rotation, translation })
    }

    pub fn from_json(j: &CameraJson) -> Result<Self> {
        let r = Matrix3::from_row_slice(&j.rotation);
        Self::new(j.fx, j.fy, j.cx, j.cy, j.width, j.height, r, Vector3::from_row_slice(&j.translation))
    }

    pub fn to_json(&self) -> CameraJson {
        let mut r = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                r[i * 3 + j] = self.rotation[(i, j)];
            }
        }
        CameraJson {
            fx: self.fx,
            fy: self.fy,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            rotation: r,
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
    }

    /// Camera center in world coordinates, `-R^T t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// World-space ray through a (possibly fractional, possibly off-image)
    /// pixel coordinate. Returns `(origin, unit direction)`.
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let cam_dir = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        let world_dir = (self.rotation.transpose() * cam_dir).normalize();
        (self.center(), world_dir)
    }

    /// Projects a world point. Returns `(u, v, depth)`; `depth <= 0` means
    /// the point is at or behind the camera plane and the caller decides
    /// visibility.
    pub fn project(&self, point: &Vector3<f64>) -> Result<(f64, f64, f64)> {
        let pc = self.rotation * point + self.translation;
        if pc.norm() < 1e-12 {
            return Err(Error::Numerical("point at camera center".into()));
        }
        let depth = pc.z;
        if depth.abs() < 1e-15 {
            return Err(Error::Numerical("point on camera plane, projection undefined".into()));
        }
        let u = self.fx * pc.x / depth + self.cx;
        let v = self.fy * pc.y / depth + self.cy;
        Ok((u, v, depth))
    }

    /// 3x4 projection matrix `K [R | t]`.
    pub fn projection_matrix(&self) -> nalgebra::Matrix3x4<f64> {
        let k = Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0);
        let mut rt = nalgebra::Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        rt.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        k * rt
    }
}

/// H x W x 6 Plücker map, channel-last: `(d, m)` with `m = o x d`.
pub fn plucker_embed(cam: &Camera) -> ChannelMap {
    let mut map = ChannelMap::new(cam.height, cam.width, 6);
    let o = cam.center();
    for y in 0..cam.height {
        for x in 0..cam.width {
            let (_, d) = cam.pixel_ray(x as f64 + 0.5, y as f64 + 0.5);
            let m = o.cross(&d);
            for c in 0..3 {
                *map.at_mut(y, x, c) = d[c] as f32;
                *map.at_mut(y, x, c + 3) = m[c] as f32;
            }
        }
    }
    map
}

/// f64 Plücker coordinates at one pixel center, for tests and tight-tolerance
/// consumers.
pub fn plucker_at(cam: &Camera, x: usize, y: usize) -> ([f64; 3], [f64; 3]) {
    let o = cam.center();
    let (_, d) = cam.pixel_ray(x as f64 + 0.5, y as f64 + 0.5);
    let m = o.cross(&d);
    ([d.x, d.y, d.z], [m.x, m.y, m.z])
}

/// Evenly spaced cameras on a circle of given radius in the z = `height`
/// plane, all looking at the origin. A convenient synthetic rig.
pub fn circle_rig(count: usize, radius: f64, height: f64, width: usize, img_height: usize) -> Result<Vec<Camera>> {
    let mut cams = Vec::with_capacity(count);
    for i in 0..count {
        let angle = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
        let center = Vector3::new(radius * angle.cos(), radius * angle.sin(), height);
        cams.push(look_at(center, Vector3::zeros(), width, img_height)?);
    }
    Ok(cams)
}

/// Camera at `eye` looking at `target`, world +z as the up hint.
pub fn look_at(eye: Vector3<f64>, target: Vector3<f64>, width: usize, height: usize) -> Result<Camera> {
    let forward = (target - eye).normalize();
    let up_hint = if forward.z.abs() > 0.99 {
        Vector3::new(0.0, 1.0, 0.0)
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let right = forward.cross(&up_hint).normalize();
    let down = forward.cross(&right).normalize();
    // Rows of R are the camera axes expressed in world coordinates.
    let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    let translation = -(rotation * eye);
    let f = width as f64;
    Camera::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height, rotation, translation)
}

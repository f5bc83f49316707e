//! 2D/3D skeletons: weighted DLT triangulation, reprojection, and rasterized
//! colored conditioning maps with confidence-driven transparency.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::Camera;
use crate::error::{Error, Result};

pub const DEFAULT_CONF_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Joint2D {
    pub u: f64,
    pub v: f64,
    /// Confidence in [0, 1]; 0 means the joint is unusable/invisible.
    pub conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton2D {
    pub joints: Vec<Joint2D>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bone {
    pub a: usize,
    pub b: usize,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonTopology {
    pub joints: Vec<String>,
    pub bones: Vec<Bone>,
}

impl SkeletonTopology {
    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<()> {
        for bone in &self.bones {
            if bone.a >= self.joints.len() || bone.b >= self.joints.len() {
                return Err(Error::Config(format!(
                    "bone ({}, {}) out of range for {} joints",
                    bone.a,
                    bone.b,
                    self.joints.len()
                )));
            }
        }
        Ok(())
    }

    /// 17-joint COCO-style topology with a fixed per-body-part palette:
    /// head bones yellow-green, torso orange, left limbs green/blue hues,
    /// right limbs red/magenta hues.
    pub fn coco17() -> Self {
        let joints = [
            "nose", "left_eye", "right_eye", "left_ear", "right_ear",
            "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
            "left_wrist", "right_wrist", "left_hip", "right_hip",
            "left_knee", "right_knee", "left_ankle", "right_ankle",
        ];
        let bones = vec![
            Bone { a: 0, b: 1, color: [153, 204, 0] },
            Bone { a: 0, b: 2, color: [204, 204, 0] },
            Bone { a: 1, b: 3, color: [102, 204, 0] },
            Bone { a: 2, b: 4, color: [204, 153, 0] },
            Bone { a: 5, b: 6, color: [255, 128, 0] },
            Bone { a: 5, b: 11, color: [255, 102, 51] },
            Bone { a: 6, b: 12, color: [255, 153, 51] },
            Bone { a: 11, b: 12, color: [255, 178, 102] },
            Bone { a: 5, b: 7, color: [0, 204, 102] },
            Bone { a: 7, b: 9, color: [0, 255, 128] },
            Bone { a: 6, b: 8, color: [204, 0, 102] },
            Bone { a: 8, b: 10, color: [255, 0, 128] },
            Bone { a: 11, b: 13, color: [0, 102, 204] },
            Bone { a: 13, b: 15, color: [0, 128, 255] },
            Bone { a: 12, b: 14, color: [204, 0, 204] },
            Bone { a: 14, b: 16, color: [255, 0, 255] },
        ];
        Self { joints: joints.iter().map(|s| s.to_string()).collect(), bones }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    TooFewObservations,
    DegenerateGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JointEstimate {
    Valid { point: [f64; 3], conf3d: f64 },
    Invalid { reason: InvalidReason },
}

impl JointEstimate {
    pub fn point(&self) -> Option<Vector3<f64>> {
        match self {
            JointEstimate::Valid { point, .. } => Some(Vector3::from_row_slice(point)),
            JointEstimate::Invalid { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton3D {
    pub joints: Vec<JointEstimate>,
}

/// One 2D observation of a joint from a calibrated camera.
pub struct JointObservation<'a> {
    pub camera: &'a Camera,
    pub u: f64,
    pub v: f64,
    pub conf: f64,
}

/// Weighted DLT triangulation of a single joint. Observations below
/// `conf_threshold` are discarded; fewer than two surviving observations or
/// near-parallel rays yield an invalid estimate (distinct reasons).
pub fn triangulate_joint(obs: &[JointObservation<'_>], conf_threshold: f64) -> JointEstimate {
    let used: Vec<&JointObservation<'_>> =
        obs.iter().filter(|o| o.conf >= conf_threshold && o.conf > 0.0).collect();
    if used.len() < 2 {
        return JointEstimate::Invalid { reason: InvalidReason::TooFewObservations };
    }
    // Degeneracy check: all observation rays mutually parallel.
    let dirs: Vec<Vector3<f64>> =
        used.iter().map(|o| o.camera.pixel_ray(o.u, o.v).1).collect();
    let all_parallel = dirs
        .iter()
        .skip(1)
        .all(|d| dirs[0].cross(d).norm() < 1e-9);
    if all_parallel {
        return JointEstimate::Invalid { reason: InvalidReason::DegenerateGeometry };
    }

    let mut a = DMatrix::<f64>::zeros(2 * used.len(), 4);
    for (i, o) in used.iter().enumerate() {
        let p = o.camera.projection_matrix();
        let w = o.conf;
        for c in 0..4 {
            a[(2 * i, c)] = w * (o.u * p[(2, c)] - p[(0, c)]);
            a[(2 * i + 1, c)] = w * (o.v * p[(2, c)] - p[(1, c)]);
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let x = v_t.row(v_t.nrows() - 1);
    if x[3].abs() < 1e-12 {
        return JointEstimate::Invalid { reason: InvalidReason::DegenerateGeometry };
    }
    let point = [x[0] / x[3], x[1] / x[3], x[2] / x[3]];
    let conf3d = used.iter().map(|o| o.conf).sum::<f64>() / used.len() as f64;
    JointEstimate::Valid { point, conf3d }
}

/// Per-joint triangulation of whole skeletons observed from several views.
pub fn triangulate_skeleton(
    views: &[Skeleton2D],
    cameras: &[Camera],
    conf_threshold: f64,
) -> Result<Skeleton3D> {
    if views.len() != cameras.len() {
        return Err(Error::Config(format!(
            "{} skeleton views but {} cameras",
            views.len(),
            cameras.len()
        )));
    }
    let joint_count = views.first().map(|s| s.joints.len()).unwrap_or(0);
    if views.iter().any(|s| s.joints.len() != joint_count) {
        return Err(Error::Config("skeleton views disagree on joint count".into()));
    }
    let mut joints = Vec::with_capacity(joint_count);
    for j in 0..joint_count {
        let obs: Vec<JointObservation<'_>> = views
            .iter()
            .zip(cameras)
            .map(|(skel, cam)| JointObservation {
                camera: cam,
                u: skel.joints[j].u,
                v: skel.joints[j].v,
                conf: skel.joints[j].conf,
            })
            .collect();
        joints.push(triangulate_joint(&obs, conf_threshold));
    }
    Ok(Skeleton3D { joints })
}

/// Projects a 3D skeleton into a view. Invalid and behind-camera joints come
/// back with conf 0; otherwise the 3D confidence is carried over.
pub fn project_skeleton(cam: &Camera, skel: &Skeleton3D) -> Skeleton2D {
    let joints = skel
        .joints
        .iter()
        .map(|estimate| match estimate {
            JointEstimate::Valid { point, conf3d } => {
                let p = Vector3::from_row_slice(point);
                match cam.project(&p) {
                    Ok((u, v, depth)) if depth > 0.0 => Joint2D { u, v, conf: *conf3d },
                    _ => Joint2D { u: 0.0, v: 0.0, conf: 0.0 },
                }
            }
            JointEstimate::Invalid { .. } => Joint2D { u: 0.0, v: 0.0, conf: 0.0 },
        })
        .collect();
    Skeleton2D { joints }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterStyle {
    pub thickness: f64,
    pub joint_radius: f64,
}

impl Default for RasterStyle {
    fn default() -> Self {
        Self { thickness: 2.0, joint_radius: 3.0 }
    }
}

/// RGBA image, 8-bit, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbaImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbaImage {
    pub fn transparent(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height * 4] }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let i = (y * self.width + x) * 4;
        [self.data[i], self.data[i + 1], self.data[i + 2], self.data[i + 3]]
    }

    /// Source-over composite of a premul-free RGBA sample onto the pixel.
    fn blend(&mut self, x: usize, y: usize, color: [u8; 3], alpha: f64) {
        if alpha <= 0.0 {
            return;
        }
        let i = (y * self.width + x) * 4;
        let sa = alpha.clamp(0.0, 1.0);
        let da = self.data[i + 3] as f64 / 255.0;
        let out_a = sa + da * (1.0 - sa);
        if out_a <= 0.0 {
            return;
        }
        for c in 0..3 {
            let sc = color[c] as f64 / 255.0;
            let dc = self.data[i + c] as f64 / 255.0;
            let oc = (sc * sa + dc * da * (1.0 - sa)) / out_a;
            self.data[i + c] = (oc * 255.0).round() as u8;
        }
        self.data[i + 3] = (out_a * 255.0).round() as u8;
    }
}

pub fn point_segment_distance(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let abx = bx - ax;
    let aby = by - ay;
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((px - ax) * abx + (py - ay) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let qx = ax + t * abx;
    let qy = ay + t * aby;
    ((px - qx).powi(2) + (py - qy).powi(2)).sqrt()
}

/// Anti-aliased coverage of a capsule of half-width `radius` at distance `d`.
fn capsule_coverage(d: f64, radius: f64) -> f64 {
    (radius + 0.5 - d).clamp(0.0, 1.0)
}

fn draw_capsule(
    img: &mut RgbaImage,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    radius: f64,
    color: [u8; 3],
    alpha: f64,
) {
    if alpha <= 0.0 {
        return;
    }
    let pad = radius + 1.5;
    let x0 = (ax.min(bx) - pad).floor().max(0.0) as usize;
    let x1 = ((ax.max(bx) + pad).ceil() as isize).min(img.width as isize - 1);
    let y0 = (ay.min(by) - pad).floor().max(0.0) as usize;
    let y1 = ((ay.max(by) + pad).ceil() as isize).min(img.height as isize - 1);
    if x1 < 0 || y1 < 0 {
        return;
    }
    for y in y0..=(y1 as usize) {
        for x in x0..=(x1 as usize) {
            let d = point_segment_distance(x as f64 + 0.5, y as f64 + 0.5, ax, ay, bx, by);
            let cov = capsule_coverage(d, radius);
            if cov > 0.0 {
                img.blend(x, y, color, alpha * cov);
            }
        }
    }
}

/// Rasterizes a 2D skeleton. Bones draw first, then joints; later draws
/// composite over earlier ones. Bone alpha is `min(conf_a, conf_b)` and joint
/// alpha is the joint confidence; the background stays fully transparent.
pub fn rasterize_skeleton(
    skel: &Skeleton2D,
    topology: &SkeletonTopology,
    height: usize,
    width: usize,
    style: &RasterStyle,
) -> Result<RgbaImage> {
    topology.validate()?;
    if skel.joints.len() != topology.joint_count() {
        return Err(Error::Config(format!(
            "skeleton has {} joints, topology expects {}",
            skel.joints.len(),
            topology.joint_count()
        )));
    }
    let mut img = RgbaImage::transparent(width, height);
    for bone in &topology.bones {
        let (ja, jb) = (&skel.joints[bone.a], &skel.joints[bone.b]);
        let alpha = ja.conf.min(jb.conf);
        draw_capsule(&mut img, ja.u, ja.v, jb.u, jb.v, style.thickness / 2.0, bone.color, alpha);
    }
    for (j, joint) in skel.joints.iter().enumerate() {
        if joint.conf <= 0.0 || style.joint_radius <= 0.0 {
            continue;
        }
        // joint color: average of incident bone colors, white if isolated
        let incident: Vec<[u8; 3]> = topology
            .bones
            .iter()
            .filter(|b| b.a == j || b.b == j)
            .map(|b| b.color)
            .collect();
        let color = if incident.is_empty() {
            [255, 255, 255]
        } else {
            let n = incident.len() as u32;
            let sum = incident.iter().fold([0u32; 3], |mut acc, c| {
                for i in 0..3 {
                    acc[i] += c[i] as u32;
                }
                acc
            });
            [(sum[0] / n) as u8, (sum[1] / n) as u8, (sum[2] / n) as u8]
        };
        draw_capsule(&mut img, joint.u, joint.v, joint.u, joint.v, style.joint_radius, color, joint.conf);
    }
    Ok(img)
}

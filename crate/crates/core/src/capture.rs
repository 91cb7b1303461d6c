//! Gaze and pointing input, reduced to frame pixel coordinates.
//!
//! World-space samples go through an ideal pinhole camera without lens
//! distortion. Pixel-space samples (the desk-scale path used by fixtures and
//! replay files) pass through unchanged apart from clamping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{FrameMeta, PixelPoint};

/// Distance of the gaze marker from the eye, in metres.
pub const GAZE_DEPTH_M: f64 = 2.0;

const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum CaptureError {
    #[error("point is behind the camera (depth {0})")]
    BehindCamera(f64),
    #[error("focal length must be positive, got ({0}, {1})")]
    FocalLength(f64, f64),
    #[error("principal point ({0}, {1}) outside the frame")]
    PrincipalPoint(f64, f64),
    #[error("pointing direction must have unit norm, got {0}")]
    NotUnit(f64),
    #[error("pointing hit point does not lie on the ray")]
    HitOffRay,
    #[error("gaze direction must be non-zero")]
    ZeroDirection,
}

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Rigid world-to-camera transform: `x_cam = R * x_world + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        translation: [0.0; 3],
    };

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = &self.rotation;
        [
            dot(r[0], p) + self.translation[0],
            dot(r[1], p) + self.translation[1],
            dot(r[2], p) + self.translation[2],
        ]
    }

    /// Camera-to-world, assuming `rotation` is orthonormal.
    pub fn apply_inverse(&self, p: Vec3) -> Vec3 {
        let q = sub(p, self.translation);
        let r = &self.rotation;
        [
            r[0][0] * q[0] + r[1][0] * q[1] + r[2][0] * q[2],
            r[0][1] * q[0] + r[1][1] * q[1] + r[2][1] * q[2],
            r[0][2] * q[0] + r[1][2] * q[1] + r[2][2] * q[2],
        ]
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Pinhole intrinsics plus the camera pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub pose: Pose,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, frame: &FrameMeta) -> Result<Self, CaptureError> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            pose: Pose::IDENTITY,
        };
        cam.validate(frame)?;
        Ok(cam)
    }

    pub fn with_pose(mut self, pose: Pose) -> Self {
        self.pose = pose;
        self
    }

    pub fn validate(&self, frame: &FrameMeta) -> Result<(), CaptureError> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CaptureError::FocalLength(self.fx, self.fy));
        }
        if !frame.bounds().contains(&PixelPoint::new(self.cx, self.cy)) {
            return Err(CaptureError::PrincipalPoint(self.cx, self.cy));
        }
        Ok(())
    }
}

/// Project a world point (metres) to frame pixels.
pub fn project(point: Vec3, cam: &CameraModel, frame: &FrameMeta) -> Result<PixelPoint, CaptureError> {
    let [x, y, z] = cam.pose.apply(point);
    if z <= 0.0 {
        return Err(CaptureError::BehindCamera(z));
    }
    let p = PixelPoint::new(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy);
    Ok(frame.clamp(p))
}

/// World point at camera depth `depth` that projects onto `pixel`.
pub fn backproject(pixel: PixelPoint, depth: f64, cam: &CameraModel) -> Vec3 {
    let x = (pixel.x - cam.cx) * depth / cam.fx;
    let y = (pixel.y - cam.cy) * depth / cam.fy;
    cam.pose.apply_inverse([x, y, depth])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GazeSample {
    /// Gaze marker position in metres, 2 m out along the gaze ray.
    World3d { point: Vec3 },
    Pixel { p: PixelPoint },
}

impl GazeSample {
    /// Place the gaze marker [`GAZE_DEPTH_M`] along `direction` from `eye`.
    pub fn from_ray(eye: Vec3, direction: Vec3) -> Result<Self, CaptureError> {
        let n = norm(direction);
        if n == 0.0 || !n.is_finite() {
            return Err(CaptureError::ZeroDirection);
        }
        let s = GAZE_DEPTH_M / n;
        Ok(GazeSample::World3d {
            point: [
                eye[0] + direction[0] * s,
                eye[1] + direction[1] * s,
                eye[2] + direction[2] * s,
            ],
        })
    }

    pub fn pixel(x: f64, y: f64) -> Self {
        GazeSample::Pixel {
            p: PixelPoint::new(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PointingSample {
    /// Hand ray and the point where it met the environment.
    Ray { origin: Vec3, direction: Vec3, hit: Vec3 },
    Pixel { p: PixelPoint },
}

impl PointingSample {
    pub fn ray(origin: Vec3, direction: Vec3, hit: Vec3) -> Result<Self, CaptureError> {
        let sample = PointingSample::Ray {
            origin,
            direction,
            hit,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<(), CaptureError> {
        let PointingSample::Ray {
            origin,
            direction,
            hit,
        } = *self
        else {
            return Ok(());
        };
        let n = norm(direction);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(CaptureError::NotUnit(n));
        }
        let offset = sub(hit, origin);
        let t = dot(offset, direction);
        let along = [direction[0] * t, direction[1] * t, direction[2] * t];
        let off_axis = norm(sub(offset, along));
        if t < 0.0 || off_axis > UNIT_TOLERANCE * norm(offset).max(1.0) {
            return Err(CaptureError::HitOffRay);
        }
        Ok(())
    }
}

/// Gaze and pointing positions at query time, in frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSnapshot {
    pub gaze_px: PixelPoint,
    pub point_px: Option<PixelPoint>,
    #[serde(default)]
    pub captured_at_ms: u64,
}

impl InputSnapshot {
    /// Pixel-space snapshot, clamped to the frame.
    pub fn at(gaze: PixelPoint, point: Option<PixelPoint>, frame: &FrameMeta) -> Self {
        Self {
            gaze_px: frame.clamp(gaze),
            point_px: point.map(|p| frame.clamp(p)),
            captured_at_ms: 0,
        }
    }
}

/// Reduce both input channels to pixel coordinates.
pub fn snapshot(
    gaze: &GazeSample,
    point: Option<&PointingSample>,
    cam: &CameraModel,
    frame: &FrameMeta,
) -> Result<InputSnapshot, CaptureError> {
    let gaze_px = match gaze {
        GazeSample::World3d { point } => project(*point, cam, frame)?,
        GazeSample::Pixel { p } => frame.clamp(*p),
    };
    let point_px = match point {
        None => None,
        Some(sample) => {
            sample.validate()?;
            Some(match sample {
                PointingSample::Ray { hit, .. } => project(*hit, cam, frame)?,
                PointingSample::Pixel { p } => frame.clamp(*p),
            })
        }
    };
    Ok(InputSnapshot {
        gaze_px,
        point_px,
        captured_at_ms: frame.captured_at_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame() -> FrameMeta {
        FrameMeta::new(1920, 1080).unwrap()
    }

    fn cam() -> CameraModel {
        CameraModel::new(1000.0, 1000.0, 960.0, 540.0, &frame()).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let p = project([0.0, 0.0, 3.0], &cam(), &frame()).unwrap();
        assert_eq!(p, PixelPoint::new(960.0, 540.0));
    }

    #[test]
    fn hand_evaluated_projection() {
        // u = 1000 * 0.2 / 2.0 + 960
        let p = project([0.2, 0.0, 2.0], &cam(), &frame()).unwrap();
        assert_eq!(p, PixelPoint::new(1060.0, 540.0));
    }

    #[test]
    fn behind_camera() {
        assert_eq!(
            project([0.0, 0.0, -1.0], &cam(), &frame()),
            Err(CaptureError::BehindCamera(-1.0))
        );
    }

    #[test]
    fn projection_clamps_to_frame() {
        let p = project([10.0, -10.0, 1.0], &cam(), &frame()).unwrap();
        assert_eq!(p, PixelPoint::new(1920.0, 0.0));
    }

    #[test]
    fn pose_is_applied() {
        // camera shifted 0.5 m right: world origin appears to the left
        let pose = Pose {
            translation: [-0.5, 0.0, 0.0],
            ..Pose::IDENTITY
        };
        let p = project([0.0, 0.0, 2.0], &cam().with_pose(pose), &frame()).unwrap();
        assert_eq!(p, PixelPoint::new(710.0, 540.0));
    }

    #[test]
    fn camera_validation() {
        assert!(matches!(
            CameraModel::new(0.0, 1.0, 1.0, 1.0, &frame()),
            Err(CaptureError::FocalLength(..))
        ));
        assert!(matches!(
            CameraModel::new(1.0, 1.0, 5000.0, 1.0, &frame()),
            Err(CaptureError::PrincipalPoint(..))
        ));
    }

    #[test]
    fn gaze_marker_at_two_metres() {
        let GazeSample::World3d { point } = GazeSample::from_ray([0.0; 3], [0.0, 0.0, 5.0]).unwrap()
        else {
            unreachable!()
        };
        assert_eq!(point, [0.0, 0.0, GAZE_DEPTH_M]);
    }

    #[test]
    fn pixel_passthrough_without_pointing() {
        let s = snapshot(&GazeSample::pixel(500.0, 300.0), None, &cam(), &frame()).unwrap();
        assert_eq!(s.gaze_px, PixelPoint::new(500.0, 300.0));
        assert_eq!(s.point_px, None);
    }

    #[test]
    fn world_gaze_on_axis() {
        let gaze = GazeSample::from_ray([0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        let s = snapshot(&gaze, None, &cam(), &frame()).unwrap();
        assert_eq!(s.gaze_px, PixelPoint::new(960.0, 540.0));
    }

    #[test]
    fn shared_target_projects_identically() {
        let gaze = GazeSample::from_ray([0.0; 3], [0.1, -0.05, 1.0]).unwrap();
        let GazeSample::World3d { point } = gaze else {
            unreachable!()
        };
        let hand = [0.2, 0.3, 0.0];
        let d = sub(point, hand);
        let n = norm(d);
        let dir = [d[0] / n, d[1] / n, d[2] / n];
        let pointing = PointingSample::ray(hand, dir, point).unwrap();
        let s = snapshot(&gaze, Some(&pointing), &cam(), &frame()).unwrap();
        assert_eq!(Some(s.gaze_px), s.point_px);
    }

    #[test]
    fn pointing_validation() {
        assert!(matches!(
            PointingSample::ray([0.0; 3], [0.0, 0.0, 2.0], [0.0, 0.0, 4.0]),
            Err(CaptureError::NotUnit(_))
        ));
        assert_eq!(
            PointingSample::ray([0.0; 3], [0.0, 0.0, 1.0], [1.0, 0.0, 4.0]),
            Err(CaptureError::HitOffRay)
        );
        assert_eq!(
            PointingSample::ray([0.0; 3], [0.0, 0.0, 1.0], [0.0, 0.0, -4.0]),
            Err(CaptureError::HitOffRay)
        );
    }

    proptest! {
        #[test]
        fn projection_round_trip(u in 0.0f64..1920.0, v in 0.0f64..1080.0, z in 0.05f64..50.0,
                                 yaw in -0.5f64..0.5, tx in -1.0f64..1.0) {
            let (s, c) = yaw.sin_cos();
            let pose = Pose {
                rotation: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
                translation: [tx, 0.1, 0.0],
            };
            let cam = cam().with_pose(pose);
            let world = backproject(PixelPoint::new(u, v), z, &cam);
            let back = project(world, &cam, &frame()).unwrap();
            prop_assert!((back.x - u).abs() <= 0.5 && (back.y - v).abs() <= 0.5);
        }
    }
}

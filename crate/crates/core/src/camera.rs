//! Virtual camera for 3D fractals: roll/pitch/yaw rotation followed by an
//! orthographic projection onto the image plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{Dimension, PointCloud};

pub type Matrix3 = [[f64; 3]; 3];

pub const DEFAULT_VIEWPOINT_STEP: u32 = 30;

/// Angles in degrees, each normalized into `[0, 360)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl CameraPose {
    pub fn new(roll: f64, pitch: f64, yaw: f64) -> Result<Self> {
        if ![roll, pitch, yaw].iter().all(|a| a.is_finite()) {
            return Err(Error::InvalidArgument(
                "camera angles must be finite".into(),
            ));
        }
        Ok(Self {
            roll: wrap_degrees(roll),
            pitch: wrap_degrees(pitch),
            yaw: wrap_degrees(yaw),
        })
    }

    pub fn identity() -> Self {
        Self::default()
    }
}

fn wrap_degrees(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roll" => Ok(Axis::Roll),
            "pitch" => Ok(Axis::Pitch),
            "yaw" => Ok(Axis::Yaw),
            other => Err(Error::InvalidArgument(format!(
                "unknown camera axis `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewpointSet {
    pub axes: Vec<Axis>,
    pub step: u32,
    pub poses: Vec<CameraPose>,
}

impl ViewpointSet {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// `R = R_z(yaw) * R_y(pitch) * R_x(roll)`, right-handed.
pub fn rotation_matrix(pose: &CameraPose) -> Matrix3 {
    let (sr, cr) = pose.roll.to_radians().sin_cos();
    let (sp, cp) = pose.pitch.to_radians().sin_cos();
    let (sy, cy) = pose.yaw.to_radians().sin_cos();
    let rx = [[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]];
    let ry = [[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]];
    let rz = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
    matmul(&rz, &matmul(&ry, &rx))
}

pub fn matmul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

/// Rotates every point by the pose and keeps `(x, y)`; the camera looks
/// along `-z`. Point order is preserved.
pub fn project(points: &PointCloud, pose: &CameraPose) -> Result<PointCloud> {
    if points.dimension() != Dimension::Three {
        return Err(Error::InvalidArgument("project takes a 3D cloud".into()));
    }
    let r = rotation_matrix(pose);
    let mut coords = Vec::with_capacity(points.len() * 2);
    for p in points.iter() {
        coords.push(r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2]);
        coords.push(r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2]);
    }
    let mut out = PointCloud::from_flat(Dimension::Two, coords)?;
    out.source_seed = points.source_seed;
    out.burn_in = points.burn_in;
    Ok(out)
}

/// Cartesian product of `{0, step, 2 step, ...} < 360` over `axes`; the
/// remaining axes stay at 0. Poses are ordered with roll varying slowest.
pub fn enumerate_viewpoints(axes: &[Axis], step: u32) -> Result<ViewpointSet> {
    if axes.is_empty() {
        return Err(Error::InvalidArgument(
            "viewpoint axes must be non-empty".into(),
        ));
    }
    if step == 0 || 360 % step != 0 {
        return Err(Error::InvalidArgument(format!(
            "viewpoint step {step} does not divide 360"
        )));
    }
    let mut axes = axes.to_vec();
    axes.sort();
    axes.dedup();
    let angles: Vec<f64> = (0..360 / step).map(|k| (k * step) as f64).collect();
    let span = |axis| {
        if axes.contains(&axis) {
            angles.clone()
        } else {
            vec![0.0]
        }
    };
    let mut poses = Vec::new();
    for &roll in &span(Axis::Roll) {
        for &pitch in &span(Axis::Pitch) {
            for &yaw in &span(Axis::Yaw) {
                poses.push(CameraPose { roll, pitch, yaw });
            }
        }
    }
    Ok(ViewpointSet { axes, step, poses })
}

/// Yaw-only poses every 30 degrees.
pub fn default_viewpoints() -> ViewpointSet {
    enumerate_viewpoints(&[Axis::Yaw], DEFAULT_VIEWPOINT_STEP).expect("30 divides 360")
}

//! COLMAP `images.txt` reading and writing.
//!
//! Each image takes two lines:
//!
//! ```text
//! IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME
//! POINTS2D[] as (X, Y, POINT3D_ID)
//! ```
//!
//! The quaternion and translation map world to camera coordinates, so the
//! camera centre is `-Rᵀ t` and the viewing direction (camera `+z`) is
//! `Rᵀ ẑ`.

use std::collections::HashSet;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, PoseSet};

const CTX: &str = "images.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct ColmapImage {
    pub image_id: u32,
    pub camera_id: u32,
    pub name: String,
    /// World-to-camera rotation.
    pub rotation: UnitQuaternion<f64>,
    /// World-to-camera translation.
    pub translation: Vector3<f64>,
}

impl ColmapImage {
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.inverse() * self.translation)
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.rotation.inverse() * Vector3::z()
    }
}

/// Parses all image records, in file order.
pub fn parse_images(text: &str) -> Result<Vec<ColmapImage>> {
    let mut images = Vec::new();
    let mut seen = HashSet::new();
    let mut expect_points = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.starts_with('#') {
            continue;
        }
        if expect_points {
            expect_points = false;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 10 {
            return Err(Error::parse(
                CTX,
                lineno,
                format!("expected 10 fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(CTX, lineno, format!("bad number {:?}", fields[i])))
        };
        let int = |i: usize| -> Result<u32> {
            fields[i]
                .parse::<u32>()
                .map_err(|_| Error::parse(CTX, lineno, format!("bad integer {:?}", fields[i])))
        };
        let image_id = int(0)?;
        if !seen.insert(image_id) {
            return Err(Error::parse(
                CTX,
                lineno,
                format!("duplicate IMAGE_ID {image_id}"),
            ));
        }
        let q = Quaternion::new(num(1)?, num(2)?, num(3)?, num(4)?);
        if q.norm() < 1e-12 {
            return Err(Error::parse(CTX, lineno, "zero quaternion"));
        }
        images.push(ColmapImage {
            image_id,
            rotation: UnitQuaternion::from_quaternion(q),
            translation: Vector3::new(num(5)?, num(6)?, num(7)?),
            camera_id: int(8)?,
            // Names may contain spaces.
            name: fields[9..].join(" "),
        });
        expect_points = true;
    }
    Ok(images)
}

/// Parses `images.txt` into poses ordered by `IMAGE_ID` and numbered `1..=N`.
pub fn parse_colmap_images(text: &str) -> Result<PoseSet> {
    let mut images = parse_images(text)?;
    images.sort_by_key(|im| im.image_id);
    let poses = images
        .into_iter()
        .map(|im| CameraPose::new(0, im.name.clone(), im.center(), im.direction()))
        .collect::<Result<Vec<_>>>()?;
    Ok(PoseSet::from_unnumbered(poses))
}

/// World-to-camera rotation whose camera `+z` axis maps to `direction`,
/// with the smallest rotation from world `+z`.
pub fn rotation_for_direction(direction: &Vector3<f64>) -> UnitQuaternion<f64> {
    let cam_to_world = Rotation3::rotation_between(&Vector3::z(), direction)
        .unwrap_or_else(|| Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
    UnitQuaternion::from_rotation_matrix(&cam_to_world.inverse())
}

/// Writes poses as `images.txt` with empty point lines and `CAMERA_ID` 1.
pub fn write_colmap_images(poses: &PoseSet) -> String {
    let mut out = String::from(
        "# Image list with two lines of data per image:\n\
         #   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n\
         #   POINTS2D[] as (X, Y, POINT3D_ID)\n",
    );
    out.push_str(&format!("# Number of images: {}\n", poses.len()));
    for pose in poses {
        let q = rotation_for_direction(&pose.direction);
        let t = -(q * pose.position);
        out.push_str(&format!(
            "{} {} {} {} {} {} {} {} 1 {}\n\n",
            pose.id, q.w, q.i, q.j, q.k, t.x, t.y, t.z, pose.name
        ));
    }
    out
}

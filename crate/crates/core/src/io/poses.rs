//! Pose JSON.
//!
//! ```json
//! {
//!   "version": 1,
//!   "cameras": [
//!     {"id": 1, "name": "a.jpg", "position": [0, 0, 0], "direction": [0, 0, 1]},
//!     {"id": 2, "name": "b.jpg", "quaternion": [1, 0, 0, 0], "translation": [0, 0, -1]}
//!   ]
//! }
//! ```
//!
//! A camera gives either `position` + `direction` or a world-to-camera
//! `quaternion` (`w, x, y, z`) + `translation`. Ids are optional but must be
//! given for all cameras or none.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraId, CameraPose, PoseSet};

pub const POSE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    version: u32,
    cameras: Vec<PoseRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<CameraId>,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quaternion: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translation: Option<[f64; 3]>,
}

impl PoseRecord {
    fn into_pose(self, index: usize) -> Result<CameraPose> {
        let where_ = || format!("camera #{index} ({:?})", self.name);
        let (position, direction) = match (
            self.position,
            self.direction,
            self.quaternion,
            self.translation,
        ) {
            (Some(p), Some(d), None, None) => (Vector3::from(p), Vector3::from(d)),
            (None, None, Some(q), Some(t)) => {
                let q = Quaternion::new(q[0], q[1], q[2], q[3]);
                if q.norm() <= 1e-12 || !q.norm().is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "{}: zero quaternion",
                        where_()
                    )));
                }
                let rot = UnitQuaternion::from_quaternion(q).inverse();
                (-(rot * Vector3::from(t)), rot * Vector3::z())
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "{}: give either position+direction or quaternion+translation",
                    where_()
                )))
            }
        };
        CameraPose::new(self.id.unwrap_or(0), self.name.clone(), position, direction)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", where_())))
    }
}

pub fn parse_pose_json(text: &str) -> Result<PoseSet> {
    let file: PoseFile = serde_json::from_str(text)?;
    if file.version != POSE_FORMAT_VERSION {
        return Err(Error::InvalidInput(format!(
            "unsupported pose file version {}",
            file.version
        )));
    }
    let with_ids = file.cameras.iter().filter(|c| c.id.is_some()).count();
    let numbered = match with_ids {
        0 => false,
        n if n == file.cameras.len() => true,
        _ => {
            return Err(Error::InvalidInput(
                "camera ids must be given for all cameras or none".into(),
            ))
        }
    };
    let poses = file
        .cameras
        .into_iter()
        .enumerate()
        .map(|(i, rec)| rec.into_pose(i))
        .collect::<Result<Vec<_>>>()?;
    if numbered {
        PoseSet::new(poses)
    } else {
        Ok(PoseSet::from_unnumbered(poses))
    }
}

pub fn write_pose_json(poses: &PoseSet) -> Result<String> {
    let file = PoseFile {
        version: POSE_FORMAT_VERSION,
        cameras: poses
            .iter()
            .map(|p| PoseRecord {
                id: Some(p.id),
                name: p.name.clone(),
                position: Some(p.position.into()),
                direction: Some(p.direction.into()),
                quaternion: None,
                translation: None,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let poses = PoseSet::from_unnumbered(vec![
            CameraPose::new(
                0,
                "a",
                Vector3::new(0.1, -2.5, 1e-7),
                Vector3::new(0.3, 0.4, 0.5),
            )
            .unwrap(),
            CameraPose::new(
                0,
                "b",
                Vector3::new(1.0 / 3.0, 7.0, 0.0),
                Vector3::new(0.0, 0.0, -1.0),
            )
            .unwrap(),
        ]);
        let text = write_pose_json(&poses).unwrap();
        let back = parse_pose_json(&text).unwrap();
        assert_eq!(back, poses);
        assert_eq!(write_pose_json(&back).unwrap(), text);
    }

    #[test]
    fn quaternion_form() {
        let text = r#"{"version":1,"cameras":[
            {"name":"a","quaternion":[0,0,1,0],"translation":[0,0,2]},
            {"name":"b","position":[0,0,0],"direction":[0,0,3]}]}"#;
        let poses = parse_pose_json(text).unwrap();
        let a = poses.get(1).unwrap();
        assert!((a.direction - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        assert!((a.position - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
        assert_eq!(poses.get(2).unwrap().direction, Vector3::z());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pose_json(r#"{"version":2,"cameras":[]}"#).is_err());
        assert!(
            parse_pose_json(r#"{"version":1,"cameras":[{"name":"a","position":[0,0,0]}]}"#)
                .is_err()
        );
        assert!(parse_pose_json(
            r#"{"version":1,"cameras":[{"name":"a","position":[0,0,0],"direction":[0,0,0]}]}"#
        )
        .is_err());
        let mixed = r#"{"version":1,"cameras":[
            {"id":1,"name":"a","position":[0,0,0],"direction":[0,0,1]},
            {"name":"b","position":[1,0,0],"direction":[0,0,1]}]}"#;
        assert!(parse_pose_json(mixed).is_err());
        let gap = r#"{"version":1,"cameras":[
            {"id":1,"name":"a","position":[0,0,0],"direction":[0,0,1]},
            {"id":3,"name":"b","position":[1,0,0],"direction":[0,0,1]}]}"#;
        assert!(parse_pose_json(gap).is_err());
    }
}

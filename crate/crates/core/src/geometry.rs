//! Camera poses and the 3+3 bit relative pose encoding.
//!
//! A pair of cameras `(i, j)` is summarised by six sign bits:
//!
//! - three *position* bits, the signs of `p_j - p_i` per world axis;
//! - three *orientation* bits, the signs of the x and y components of
//!   `d_i × d_j` followed by the sign of `d_i · d_j`.
//!
//! The sign function maps exact zero to 0, so boundary configurations always
//! land in the "non-positive" half-space.

use std::fmt;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CameraId = u32;

/// Norms below this are rejected as zero-length directions.
pub const MIN_DIRECTION_NORM: f64 = 1e-6;

/// Directions whose norm is this close to one are stored untouched.
const UNIT_NORM_SLACK: f64 = 1e-12;

/// A coarse camera: where it sits and where it looks.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraPose {
    /// 1-based index, contiguous within a [`PoseSet`].
    pub id: CameraId,
    /// Image file name.
    pub name: String,
    pub position: Vector3<f64>,
    /// Unit viewing direction.
    pub direction: Vector3<f64>,
}

impl CameraPose {
    /// Builds a pose, normalising the direction.
    pub fn new(
        id: CameraId,
        name: impl Into<String>,
        position: Vector3<f64>,
        direction: Vector3<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if position.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "camera {id} ({name}): non-finite position"
            )));
        }
        let direction = normalize_direction(direction)
            .map_err(|msg| Error::InvalidInput(format!("camera {id} ({name}): {msg}")))?;
        Ok(Self {
            id,
            name,
            position,
            direction,
        })
    }
}

fn normalize_direction(d: Vector3<f64>) -> std::result::Result<Vector3<f64>, &'static str> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err("non-finite direction");
    }
    let norm = d.norm();
    if norm < MIN_DIRECTION_NORM {
        return Err("zero-length direction");
    }
    if (norm - 1.0).abs() <= UNIT_NORM_SLACK {
        Ok(d)
    } else {
        Ok(d / norm)
    }
}

/// An ordered collection of poses with ids `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSet {
    poses: Vec<CameraPose>,
}

impl PoseSet {
    /// Accepts poses in any order; ids must be exactly `1..=N`.
    pub fn new(mut poses: Vec<CameraPose>) -> Result<Self> {
        poses.sort_by_key(|p| p.id);
        for (idx, pose) in poses.iter().enumerate() {
            let expected = idx as CameraId + 1;
            if pose.id != expected {
                let what = if idx > 0 && poses[idx - 1].id == pose.id {
                    format!("duplicate camera id {}", pose.id)
                } else {
                    format!("camera ids must be contiguous from 1, missing {expected}")
                };
                return Err(Error::InvalidInput(what));
            }
        }
        Ok(Self { poses })
    }

    /// Renumbers poses `1..=N` in the given order.
    pub fn from_unnumbered(poses: Vec<CameraPose>) -> Self {
        let poses = poses
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                p.id = i as CameraId + 1;
                p
            })
            .collect();
        Self { poses }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn get(&self, id: CameraId) -> Option<&CameraPose> {
        (id as usize).checked_sub(1).and_then(|i| self.poses.get(i))
    }

    pub fn require(&self, id: CameraId) -> Result<&CameraPose> {
        self.get(id).ok_or(Error::UnknownCamera(id))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, CameraPose> {
        self.poses.iter()
    }

    pub fn as_slice(&self) -> &[CameraPose] {
        &self.poses
    }

    pub fn into_vec(self) -> Vec<CameraPose> {
        self.poses
    }
}

impl<'a> IntoIterator for &'a PoseSet {
    type Item = &'a CameraPose;
    type IntoIter = std::slice::Iter<'a, CameraPose>;

    fn into_iter(self) -> Self::IntoIter {
        self.poses.iter()
    }
}

/// `1` if `x > 0`, `0` otherwise. Non-finite input is rejected.
pub fn sgn(x: f64) -> Result<u8> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("sgn of non-finite value {x}")));
    }
    Ok(sign_bit(x))
}

/// Unchecked [`sgn`]; NaN maps to 0.
#[inline]
pub fn sign_bit(x: f64) -> u8 {
    u8::from(x > 0.0)
}

#[inline]
fn pack3(a: u8, b: u8, c: u8) -> u8 {
    (a << 2) | (b << 1) | c
}

macro_rules! three_bit_code {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(u8);

        impl $name {
            /// Packs `{b0, b1, b2}` with `b0` as the most significant bit.
            pub fn from_bits(bits: [u8; 3]) -> Self {
                Self(pack3(bits[0] & 1, bits[1] & 1, bits[2] & 1))
            }

            pub fn from_value(value: u8) -> Result<Self> {
                if value < 8 {
                    Ok(Self(value))
                } else {
                    Err(Error::InvalidInput(format!("3-bit code out of range: {value}")))
                }
            }

            pub fn value(self) -> u8 {
                self.0
            }

            pub fn bits(self) -> [u8; 3] {
                [(self.0 >> 2) & 1, (self.0 >> 1) & 1, self.0 & 1]
            }

            pub fn all() -> impl Iterator<Item = Self> {
                (0..8).map(Self)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:03b}", self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let bytes = s.as_bytes();
                if bytes.len() != 3 || bytes.iter().any(|b| *b != b'0' && *b != b'1') {
                    return Err(Error::InvalidInput(format!(
                        "expected a 3-character 0/1 string, got {s:?}"
                    )));
                }
                Ok(Self::from_bits([bytes[0] - b'0', bytes[1] - b'0', bytes[2] - b'0']))
            }
        }
    };
}

three_bit_code!(
    /// Octant of `p_j - p_i`: bits `(x, y, z)`.
    PositionCode
);
three_bit_code!(
    /// Relative orientation: bits `(cross_x, cross_y, dot)`.
    OrientationCode
);

/// Concatenated 6-bit state, position bits high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateCode(u8);

impl StateCode {
    pub fn new(position: PositionCode, orientation: OrientationCode) -> Self {
        Self((position.value() << 3) | orientation.value())
    }

    pub fn from_value(value: u8) -> Result<Self> {
        if value < 64 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidInput(format!(
                "6-bit code out of range: {value}"
            )))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn split(self) -> (PositionCode, OrientationCode) {
        (PositionCode(self.0 >> 3), OrientationCode(self.0 & 0b111))
    }

    pub fn all() -> impl Iterator<Item = Self> {
        (0..64).map(Self)
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06b}", self.0)
    }
}

/// Packs a position and orientation code into one 6-bit state.
pub fn concat_encoding(position: PositionCode, orientation: OrientationCode) -> StateCode {
    StateCode::new(position, orientation)
}

/// Both halves of a pair's encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadrantEncoding {
    pub position: PositionCode,
    pub orientation: OrientationCode,
}

impl QuadrantEncoding {
    pub fn of(ci: &CameraPose, cj: &CameraPose) -> Self {
        Self {
            position: encode_position(ci, cj),
            orientation: encode_orientation(ci, cj),
        }
    }

    pub fn combined(self) -> StateCode {
        StateCode::new(self.position, self.orientation)
    }

    pub fn from_combined(code: StateCode) -> Self {
        let (position, orientation) = code.split();
        Self {
            position,
            orientation,
        }
    }
}

/// Where `cj` sits relative to `ci`, per world axis.
pub fn encode_position(ci: &CameraPose, cj: &CameraPose) -> PositionCode {
    position_code(&ci.position, &cj.position)
}

pub fn position_code(p_i: &Vector3<f64>, p_j: &Vector3<f64>) -> PositionCode {
    PositionCode(pack3(
        sign_bit(p_j.x - p_i.x),
        sign_bit(p_j.y - p_i.y),
        sign_bit(p_j.z - p_i.z),
    ))
}

/// Relative orientation of `cj` as seen from `ci`, from one cross product
/// and one inner product.
pub fn encode_orientation(ci: &CameraPose, cj: &CameraPose) -> OrientationCode {
    orientation_code(&ci.direction, &cj.direction)
}

pub fn orientation_code(d_i: &Vector3<f64>, d_j: &Vector3<f64>) -> OrientationCode {
    let cross_x = d_i.y * d_j.z - d_i.z * d_j.y;
    let cross_y = d_i.z * d_j.x - d_i.x * d_j.z;
    let dot = d_i.x * d_j.x + d_i.y * d_j.y + d_i.z * d_j.z;
    OrientationCode(pack3(sign_bit(cross_x), sign_bit(cross_y), sign_bit(dot)))
}

/// Skew-symmetric matrix `[d]ₓ` with `[d]ₓ v = d × v`.
fn skew(d: &Vector3<f64>) -> [[f64; 3]; 3] {
    [[0.0, -d.z, d.y], [d.z, 0.0, -d.x], [-d.y, d.x, 0.0]]
}

/// Same code as [`orientation_code`], written as `e_x [d_i]ₓ d_j`,
/// `e_y [d_i]ₓ d_j` and `d_i · d_j`.
pub fn orientation_code_matrix_form(d_i: &Vector3<f64>, d_j: &Vector3<f64>) -> OrientationCode {
    let m = skew(d_i);
    let row = |r: [f64; 3]| r[0] * d_j.x + r[1] * d_j.y + r[2] * d_j.z;
    let dot = d_i.x * d_j.x + d_i.y * d_j.y + d_i.z * d_j.z;
    OrientationCode(pack3(
        sign_bit(row(m[0])),
        sign_bit(row(m[1])),
        sign_bit(dot),
    ))
}

/// Components closer to zero than this are read as zero by the oracle.
const ORACLE_ZERO: f64 = 1e-12;

/// Explicit-transform route to the orientation code.
///
/// Rotates `d_i` onto `+z` by axis-angle alignment (after a half turn about
/// `x` when `d_i` is anti-parallel to `+z`), then rolls about `z` so that the
/// rotated cross product lines up with `[c_x, c_y, 0]`. The code is then read
/// off the rotated `d_j` in the canonical frame, where `ẑ × d_j' =
/// (-d_j'.y, d_j'.x, 0)`.
pub fn orientation_code_oracle(d_i: &Vector3<f64>, d_j: &Vector3<f64>) -> OrientationCode {
    let z = Vector3::z();
    let half_turn_x = Rotation3::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI);
    let pre = if (d_i + z).norm() <= 1e-9 {
        half_turn_x
    } else {
        Rotation3::identity()
    };
    let di = pre * d_i;
    let axis = di.cross(&z);
    let align = if axis.norm() <= 1e-15 {
        Rotation3::identity()
    } else {
        let angle = di.dot(&z).clamp(-1.0, 1.0).acos();
        Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
    };
    let to_canonical = align * pre;

    let cross = d_i.cross(d_j);
    let rotated_cross = to_canonical * cross;
    let target = Vector3::new(cross.x, cross.y, 0.0);
    let roll = if target.norm() > 0.0 && rotated_cross.xy().norm() > 0.0 {
        let angle = target.y.atan2(target.x) - rotated_cross.y.atan2(rotated_cross.x);
        Rotation3::from_axis_angle(&Vector3::z_axis(), angle)
    } else {
        Rotation3::identity()
    };

    let dj = roll * (to_canonical * d_j);
    let snap = |v: f64| if v.abs() <= ORACLE_ZERO { 0.0 } else { v };
    OrientationCode(pack3(
        sign_bit(snap(-dj.y)),
        sign_bit(snap(dj.x)),
        sign_bit(snap(dj.z)),
    ))
}

/// Human-facing octant labels `1..=8`.
///
/// Labels 1–4 are the upper (`+y`) octants ordered right-rear, right-front,
/// left-front, left-rear (front is `+z`, right is `+x`); labels 5–8 repeat the
/// order below. Position bits read as (right, up, front). Orientation bits
/// read as (down, right, front), since in the canonical frame
/// `cross = (-d_y, d_x, 0)`.
pub mod labels {
    use super::{OrientationCode, PositionCode};
    use crate::error::{Error, Result};

    fn label_of(right: bool, up: bool, front: bool) -> u8 {
        let base = match (right, front) {
            (true, false) => 1,
            (true, true) => 2,
            (false, true) => 3,
            (false, false) => 4,
        };
        if up {
            base
        } else {
            base + 4
        }
    }

    fn parts_of(label: u8) -> Result<(bool, bool, bool)> {
        if !(1..=8).contains(&label) {
            return Err(Error::InvalidInput(format!(
                "octant label out of range: {label}"
            )));
        }
        let up = label <= 4;
        let (right, front) = match (label - 1) % 4 {
            0 => (true, false),
            1 => (true, true),
            2 => (false, true),
            _ => (false, false),
        };
        Ok((right, up, front))
    }

    pub fn position_label(code: PositionCode) -> u8 {
        let [x, y, z] = code.bits();
        label_of(x == 1, y == 1, z == 1)
    }

    pub fn orientation_label(code: OrientationCode) -> u8 {
        let [down, right, front] = code.bits();
        label_of(right == 1, down == 0, front == 1)
    }

    pub fn position_from_label(label: u8) -> Result<PositionCode> {
        let (right, up, front) = parts_of(label)?;
        Ok(PositionCode::from_bits([
            right as u8,
            up as u8,
            front as u8,
        ]))
    }

    pub fn orientation_from_label(label: u8) -> Result<OrientationCode> {
        let (right, up, front) = parts_of(label)?;
        Ok(OrientationCode::from_bits([
            (!up) as u8,
            right as u8,
            front as u8,
        ]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(id: CameraId, p: [f64; 3], d: [f64; 3]) -> CameraPose {
        CameraPose::new(id, format!("{id}.jpg"), Vector3::from(p), Vector3::from(d)).unwrap()
    }

    #[test]
    fn sgn_examples() {
        assert_eq!(sgn(2.5).unwrap(), 1);
        assert_eq!(sgn(0.0).unwrap(), 0);
        assert_eq!(sgn(-0.0).unwrap(), 0);
        assert_eq!(sgn(-1e-12).unwrap(), 0);
        assert!(sgn(f64::NAN).is_err());
        assert!(sgn(f64::INFINITY).is_err());
    }

    #[test]
    fn position_examples() {
        let o = pose(1, [0.0; 3], [0.0, 0.0, 1.0]);
        let a = pose(2, [1.0, 2.0, 3.0], [0.0, 0.0, 1.0]);
        let b = pose(3, [-1.0, 2.0, -3.0], [0.0, 0.0, 1.0]);
        assert_eq!(encode_position(&o, &a).bits(), [1, 1, 1]);
        assert_eq!(encode_position(&o, &o).bits(), [0, 0, 0]);
        assert_eq!(encode_position(&o, &b).bits(), [0, 1, 0]);
    }

    #[test]
    fn orientation_examples() {
        let z = Vector3::z();
        assert_eq!(orientation_code(&z, &z).bits(), [0, 0, 1]);
        assert_eq!(orientation_code(&z, &Vector3::x()).bits(), [0, 1, 0]);
        assert_eq!(orientation_code(&z, &Vector3::y()).bits(), [0, 0, 0]);
        assert_eq!(orientation_code_oracle(&z, &Vector3::y()).bits(), [0, 0, 0]);
        assert_eq!(orientation_code_oracle(&z, &Vector3::x()).bits(), [0, 1, 0]);
    }

    #[test]
    fn oracle_identical_directions() {
        for d in [
            Vector3::new(0.3, -0.4, 0.5),
            Vector3::new(0.0, 0.0, -1.0),
            Vector3::new(-1.0, 2.0, 0.1),
            Vector3::z(),
        ] {
            let d = d.normalize();
            assert_eq!(orientation_code_oracle(&d, &d).bits(), [0, 0, 1], "{d:?}");
        }
    }

    #[test]
    fn concat_examples() {
        let p = PositionCode::from_bits([0, 1, 1]);
        let o = OrientationCode::from_bits([0, 0, 1]);
        assert_eq!(concat_encoding(p, o).value(), 25);
        assert_eq!(
            concat_encoding(PositionCode(0), OrientationCode(0)).value(),
            0
        );
        for v in 0..64 {
            let code = StateCode::from_value(v).unwrap();
            let (p, o) = code.split();
            assert_eq!(concat_encoding(p, o), code);
            assert_eq!(code.value(), (p.value() << 3) | o.value());
        }
        assert!(StateCode::from_value(64).is_err());
    }

    #[test]
    fn code_strings() {
        let p: PositionCode = "011".parse().unwrap();
        assert_eq!(p.value(), 3);
        assert_eq!(p.to_string(), "011");
        assert!("0112".parse::<PositionCode>().is_err());
        assert!("0a1".parse::<OrientationCode>().is_err());
    }

    #[test]
    fn labels_are_bijective() {
        let mut seen = [false; 9];
        for code in PositionCode::all() {
            let l = labels::position_label(code);
            assert!(!seen[l as usize]);
            seen[l as usize] = true;
            assert_eq!(labels::position_from_label(l).unwrap(), code);
        }
        for code in OrientationCode::all() {
            let l = labels::orientation_label(code);
            assert_eq!(labels::orientation_from_label(l).unwrap(), code);
        }
        assert!(labels::position_from_label(0).is_err());
        assert!(labels::position_from_label(9).is_err());
    }

    #[test]
    fn position_label_011_is_third_octant() {
        assert_eq!(
            labels::position_label(PositionCode::from_bits([0, 1, 1])),
            3
        );
    }

    #[test]
    fn direction_normalised_on_ingest() {
        let p = pose(1, [0.0; 3], [0.0, 3.0, 4.0]);
        assert!((p.direction.norm() - 1.0).abs() <= 1e-9);
        assert!(CameraPose::new(1, "a", Vector3::zeros(), Vector3::zeros()).is_err());
        assert!(CameraPose::new(1, "a", Vector3::zeros(), Vector3::new(1e-7, 0.0, 0.0)).is_err());
        assert!(CameraPose::new(1, "a", Vector3::new(f64::NAN, 0.0, 0.0), Vector3::z()).is_err());
    }

    #[test]
    fn pose_set_ids() {
        let a = pose(2, [0.0; 3], [0.0, 0.0, 1.0]);
        let b = pose(1, [1.0; 3], [0.0, 0.0, 1.0]);
        let set = PoseSet::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(set.get(1).unwrap().position, b.position);
        assert!(set.get(0).is_none());
        assert!(set.get(3).is_none());
        assert!(PoseSet::new(vec![a.clone(), a.clone()]).is_err());
        assert!(PoseSet::new(vec![a]).is_err());
    }
}

//! Match lists: one `nameA nameB` line per pair, for an external matcher.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{CameraId, PoseSet};
use crate::pairing::PairSet;

const CTX: &str = "match list";

fn checked_name(poses: &PoseSet, id: CameraId) -> Result<&str> {
    let name = poses.require(id)?.name.as_str();
    if name.is_empty() {
        return Err(Error::InvalidInput(format!("camera {id} has no name")));
    }
    if name.chars().any(char::is_whitespace) {
        return Err(Error::InvalidInput(format!(
            "camera name {name:?} contains whitespace"
        )));
    }
    Ok(name)
}

/// Lower id first on each line; lines sorted as strings.
pub fn emit_match_list(pairs: &PairSet, poses: &PoseSet) -> Result<String> {
    let mut lines = pairs
        .keys()
        .map(|&(a, b)| {
            Ok(format!(
                "{} {}\n",
                checked_name(poses, a)?,
                checked_name(poses, b)?
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    lines.sort_unstable();
    Ok(lines.concat())
}

/// Reads a match list back into pairs; every name must belong to one camera.
/// Consecutive ids are tagged as connection pairs.
pub fn parse_match_list(text: &str, poses: &PoseSet) -> Result<PairSet> {
    let mut by_name: HashMap<&str, CameraId> = HashMap::with_capacity(poses.len());
    for p in poses {
        if by_name.insert(p.name.as_str(), p.id).is_some() {
            return Err(Error::InvalidInput(format!(
                "camera name {:?} is not unique",
                p.name
            )));
        }
    }
    let mut ids = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                CTX,
                idx + 1,
                format!("expected 2 names, found {}", fields.len()),
            ));
        }
        let lookup = |n: &str| {
            by_name
                .get(n)
                .copied()
                .ok_or_else(|| Error::parse(CTX, idx + 1, format!("unknown camera name {n:?}")))
        };
        let (a, b) = (lookup(fields[0])?, lookup(fields[1])?);
        if a == b {
            return Err(Error::parse(CTX, idx + 1, "self pair"));
        }
        ids.push((a, b));
    }
    PairSet::from_pairs(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraPose;
    use crate::pairing::PairOrigin;
    use nalgebra::Vector3;

    fn poses(names: &[&str]) -> PoseSet {
        PoseSet::from_unnumbered(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    CameraPose::new(0, *n, Vector3::new(i as f64, 0.0, 0.0), Vector3::z()).unwrap()
                })
                .collect(),
        )
    }

    #[test]
    fn single_pair() {
        let mut pairs = PairSet::new();
        pairs.insert(2, 1, PairOrigin::NEIGHBOR).unwrap();
        assert_eq!(
            emit_match_list(&pairs, &poses(&["a.jpg", "b.jpg"])).unwrap(),
            "a.jpg b.jpg\n"
        );
        assert_eq!(
            emit_match_list(&PairSet::new(), &poses(&["a.jpg", "b.jpg"])).unwrap(),
            ""
        );
    }

    #[test]
    fn lower_id_first_and_sorted() {
        let ps = poses(&["z", "b", "a"]);
        let pairs = PairSet::from_pairs([(1, 2), (1, 3), (2, 3)]).unwrap();
        let text = emit_match_list(&pairs, &ps).unwrap();
        assert_eq!(text, "b a\nz a\nz b\n");
        let back = parse_match_list(&text, &ps).unwrap();
        assert_eq!(
            back.keys().copied().collect::<Vec<_>>(),
            vec![(1, 2), (1, 3), (2, 3)]
        );
        assert_eq!(text.lines().count(), pairs.len());
    }

    #[test]
    fn bad_names() {
        let pairs = PairSet::from_pairs([(1, 2)]).unwrap();
        assert!(emit_match_list(&pairs, &poses(&["", "b"])).is_err());
        assert!(emit_match_list(&pairs, &poses(&["a b", "c"])).is_err());
        assert!(
            emit_match_list(&PairSet::from_pairs([(1, 3)]).unwrap(), &poses(&["a", "b"])).is_err()
        );
        let err = parse_match_list("a b\na q\n", &poses(&["a", "b"])).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}

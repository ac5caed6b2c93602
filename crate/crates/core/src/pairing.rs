//! Concentric nearest neighbour pairing.
//!
//! For every camera `c_i` the other cameras are ranked by distance,
//! `s(i, j) = 1` being the closest (ties go to the lower id). Camera `c_j` is
//! paired with `c_i` when
//!
//! - `s(i, j) <= r` (neighbour ring), or
//! - `s(i, j) > r` and `(s(i, j) - r) mod (h + w) < w` (concentric rings),
//!
//! and every consecutive pair `(c_{i-1}, c_i)` is added unconditionally so the
//! resulting camera graph is always connected.

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CameraId, PoseSet};
use crate::kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairingParams {
    /// Nearest-neighbour count.
    pub r: usize,
    /// Gap between concentric picks.
    pub h: usize,
    /// Cameras picked from every `h + w`.
    pub w: usize,
}

impl Default for PairingParams {
    fn default() -> Self {
        Self { r: 5, h: 20, w: 1 }
    }
}

impl PairingParams {
    pub fn new(r: usize, h: usize, w: usize) -> Result<Self> {
        let params = Self { r, h, w };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::InvalidParams("r must be at least 1".into()));
        }
        Ok(())
    }

    /// Whether rank `s` (1-based) falls in the neighbour disc or on a ring.
    pub fn selects_rank(&self, s: usize) -> bool {
        s <= self.r || self.is_concentric_rank(s)
    }

    fn is_concentric_rank(&self, s: usize) -> bool {
        self.w > 0 && s > self.r && (s - self.r) % (self.h + self.w) < self.w
    }

    /// Largest rank `<= max_rank` the rule can select.
    pub fn deepest_rank(&self, max_rank: usize) -> usize {
        if max_rank <= self.r {
            return max_rank;
        }
        if self.w == 0 {
            return self.r;
        }
        let period = self.h + self.w;
        let offset = (max_rank - self.r) % period;
        let deepest = if offset < self.w {
            max_rank
        } else {
            max_rank - offset + self.w - 1
        };
        deepest.max(self.r)
    }
}

/// Which rule(s) produced a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PairOrigin(u8);

impl PairOrigin {
    pub const NEIGHBOR: Self = Self(1);
    pub const CONCENTRIC: Self = Self(2);
    pub const CONNECTION: Self = Self(4);

    pub fn contains(self, other: Self) -> bool {
        self.0 & other.0 == other.0 && other.0 != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn is_connection(self) -> bool {
        self.contains(Self::CONNECTION)
    }
}

impl fmt::Display for PairOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [
            (Self::NEIGHBOR, "neighbor"),
            (Self::CONCENTRIC, "concentric"),
            (Self::CONNECTION, "connection"),
        ];
        let tags: Vec<&str> = names
            .iter()
            .filter(|(flag, _)| self.contains(*flag))
            .map(|(_, name)| *name)
            .collect();
        f.write_str(&tags.join("+"))
    }
}

/// Deduplicated unordered pairs, stored as `(a, b)` with `a < b`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: BTreeMap<(CameraId, CameraId), PairOrigin>,
}

impl PairSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `{a, b}` in either order, merging origin tags.
    pub fn insert(&mut self, a: CameraId, b: CameraId, origin: PairOrigin) -> Result<()> {
        if a == b {
            return Err(Error::InvalidInput(format!("self pair ({a}, {a})")));
        }
        let key = (a.min(b), a.max(b));
        let entry = self.pairs.entry(key).or_default();
        *entry = entry.union(origin);
        Ok(())
    }

    /// Rebuilds a set from plain pairs. Consecutive ids `(i, i+1)` are tagged
    /// as connection pairs, matching what [`select_pairs`] emits.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (CameraId, CameraId)>) -> Result<Self> {
        let mut set = Self::new();
        for (a, b) in pairs {
            let origin = if a.abs_diff(b) == 1 {
                PairOrigin::CONNECTION
            } else {
                PairOrigin::default()
            };
            set.insert(a, b, origin)?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: CameraId, b: CameraId) -> bool {
        self.pairs.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn origin(&self, a: CameraId, b: CameraId) -> Option<PairOrigin> {
        self.pairs.get(&(a.min(b), a.max(b))).copied()
    }

    /// Pairs in ascending `(a, b)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((CameraId, CameraId), PairOrigin)> + '_ {
        self.pairs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn keys(&self) -> btree_map::Keys<'_, (CameraId, CameraId), PairOrigin> {
        self.pairs.keys()
    }

    /// Keeps pairs for which `keep` returns true.
    pub fn retain(&mut self, mut keep: impl FnMut((CameraId, CameraId), PairOrigin) -> bool) {
        self.pairs.retain(|k, v| keep(*k, *v));
    }

    /// Pairs carrying any tag other than connection-only.
    pub fn without_connection_only(&self) -> PairSet {
        let mut out = self.clone();
        out.retain(|_, origin| {
            origin.contains(PairOrigin::NEIGHBOR) || origin.contains(PairOrigin::CONCENTRIC)
        });
        out
    }

    pub fn max_id(&self) -> CameraId {
        self.pairs.keys().map(|&(_, b)| b).max().unwrap_or(0)
    }
}

/// Distance ranking of cameras backed by a k-d tree.
#[derive(Debug, Clone)]
pub struct RankIndex {
    tree: KdTree,
}

impl RankIndex {
    pub fn build(poses: &PoseSet) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "pairing needs at least 2 cameras, got {}",
                poses.len()
            )));
        }
        let points: Vec<[f64; 3]> = poses
            .iter()
            .map(|p| [p.position.x, p.position.y, p.position.z])
            .collect();
        Ok(Self {
            tree: KdTree::new(&points),
        })
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Other cameras ordered by distance to `id`, as `(rank, id, distance)`.
    pub fn ranked(&self, id: CameraId) -> impl Iterator<Item = (usize, CameraId, f64)> + '_ {
        let query = *self.tree.point(id as usize - 1);
        self.tree
            .nearest_iter(query)
            .map(|(idx, d)| (idx as CameraId + 1, d))
            .filter(move |(other, _)| *other != id)
            .enumerate()
            .map(|(k, (other, d))| (k + 1, other, d))
    }

    /// `s(i, j)`, the 1-based rank of `j` among cameras other than `i`.
    pub fn rank(&self, i: CameraId, j: CameraId) -> Option<usize> {
        self.ranked(i)
            .find(|(_, id, _)| *id == j)
            .map(|(s, _, _)| s)
    }
}

/// Builds the deduplicated pair set.
pub fn select_pairs(poses: &PoseSet, params: &PairingParams) -> Result<PairSet> {
    params.validate()?;
    let index = RankIndex::build(poses)?;
    let n = poses.len();
    let deepest = params.deepest_rank(n - 1);

    let per_camera: Vec<Vec<(CameraId, PairOrigin)>> = (1..=n as CameraId)
        .into_par_iter()
        .map(|i| {
            index
                .ranked(i)
                .take(deepest)
                .filter_map(|(s, j, _)| {
                    if s <= params.r {
                        Some((j, PairOrigin::NEIGHBOR))
                    } else if params.is_concentric_rank(s) {
                        Some((j, PairOrigin::CONCENTRIC))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();

    let mut set = PairSet::new();
    for (i, picks) in per_camera.into_iter().enumerate() {
        let i = i as CameraId + 1;
        for (j, origin) in picks {
            set.insert(i, j, origin)?;
        }
        if i >= 2 {
            set.insert(i - 1, i, PairOrigin::CONNECTION)?;
        }
    }
    Ok(set)
}

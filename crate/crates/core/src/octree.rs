//! Octree organisation and pruning of an initial point cloud.
//!
//! The detail of a leaf is its point count. Leaves holding fewer than `tau`
//! points are dropped, and an optional global budget then subsamples the
//! survivors with per-leaf quotas proportional to leaf size (largest
//! remainder rounding), so density is preserved across the cloud.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OctreeParams {
    pub max_depth: u32,
    pub leaf_capacity: usize,
    /// Minimum points a leaf needs to survive pruning.
    pub tau: usize,
    /// Global output budget.
    pub target_count: Option<usize>,
    pub seed: u64,
}

impl Default for OctreeParams {
    fn default() -> Self {
        Self {
            max_depth: 10,
            leaf_capacity: 32,
            tau: 1,
            target_count: None,
            seed: 0,
        }
    }
}

impl OctreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidParams("max_depth must be at least 1".into()));
        }
        if self.leaf_capacity < 1 {
            return Err(Error::InvalidParams(
                "leaf_capacity must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Axis-aligned cube.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub center: [f64; 3],
    pub half: f64,
}

impl Cube {
    pub fn contains(&self, p: &[f64; 3]) -> bool {
        (0..3).all(|a| (p[a] - self.center[a]).abs() <= self.half)
    }

    /// Child octant of `p`: bit 0 is x, bit 1 is y, bit 2 is z. Points on a
    /// split plane go to the lower child.
    pub fn octant(&self, p: &[f64; 3]) -> usize {
        (0..3).fold(0, |acc, a| acc | (usize::from(p[a] > self.center[a]) << a))
    }

    pub fn child(&self, octant: usize) -> Cube {
        let q = self.half / 2.0;
        let mut center = self.center;
        for (a, c) in center.iter_mut().enumerate() {
            *c += if octant >> a & 1 == 1 { q } else { -q };
        }
        Cube { center, half: q }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Leaf(Vec<usize>),
    Internal([Option<usize>; 8]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctreeNode {
    pub bounds: Cube,
    pub depth: u32,
    pub kind: NodeKind,
}

/// An octree over borrowed-by-index points. Leaves hold indices into the
/// input slice; empty octants are not materialised.
#[derive(Debug, Clone, PartialEq)]
pub struct Octree {
    nodes: Vec<OctreeNode>,
    point_count: usize,
}

impl Octree {
    pub fn build(points: &[[f64; 3]], params: &OctreeParams) -> Result<Self> {
        params.validate()?;
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "octree needs at least one point".into(),
            ));
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "point {i} has a non-finite coordinate"
            )));
        }

        let root = root_cube(points);
        let mut nodes = vec![OctreeNode {
            bounds: root,
            depth: 0,
            kind: NodeKind::Leaf((0..points.len()).collect()),
        }];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &mut nodes[id];
            let NodeKind::Leaf(members) = &mut node.kind else {
                continue;
            };
            if members.len() <= params.leaf_capacity || node.depth >= params.max_depth {
                continue;
            }
            let members = std::mem::take(members);
            let (bounds, depth) = (node.bounds, node.depth);
            let mut buckets: [Vec<usize>; 8] = Default::default();
            for i in members {
                buckets[bounds.octant(&points[i])].push(i);
            }
            let mut children = [None; 8];
            for (octant, bucket) in buckets.into_iter().enumerate() {
                if bucket.is_empty() {
                    continue;
                }
                children[octant] = Some(nodes.len());
                nodes.push(OctreeNode {
                    bounds: bounds.child(octant),
                    depth: depth + 1,
                    kind: NodeKind::Leaf(bucket),
                });
            }
            nodes[id].kind = NodeKind::Internal(children);
            // Reverse so octant 0 is subdivided first.
            stack.extend(children.iter().rev().flatten());
        }
        Ok(Self {
            nodes,
            point_count: points.len(),
        })
    }

    pub fn root(&self) -> &OctreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[OctreeNode] {
        &self.nodes
    }

    /// Number of input points the tree was built over.
    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Leaves in depth-first octant order.
    pub fn leaves(&self) -> Vec<&OctreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match &self.nodes[id].kind {
                NodeKind::Leaf(_) => out.push(&self.nodes[id]),
                NodeKind::Internal(children) => stack.extend(children.iter().rev().flatten()),
            }
        }
        out
    }

    fn leaf_members(&self) -> Vec<&[usize]> {
        self.leaves()
            .into_iter()
            .filter_map(|n| match &n.kind {
                NodeKind::Leaf(m) if !m.is_empty() => Some(m.as_slice()),
                _ => None,
            })
            .collect()
    }

    /// Indices still held by some leaf, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.leaf_members().concat();
        all.sort_unstable();
        all
    }

    /// The same tree with leaves below `tau` points emptied.
    pub fn pruned(&self, tau: usize) -> Octree {
        let mut out = self.clone();
        for node in &mut out.nodes {
            if let NodeKind::Leaf(m) = &mut node.kind {
                if m.len() < tau {
                    m.clear();
                }
            }
        }
        out
    }

    /// Drops leaves below `tau`, then subsamples to `target_count` if set.
    /// Returns surviving input indices in ascending order.
    pub fn prune(&self, params: &OctreeParams) -> Vec<usize> {
        let survivors = self.pruned(params.tau);
        let leaves = survivors.leaf_members();
        let total: usize = leaves.iter().map(|m| m.len()).sum();
        let Some(target) = params.target_count else {
            return survivors.indices();
        };
        if target >= total {
            if target > total {
                log::warn!("target of {target} points exceeds the {total} surviving points");
            }
            return survivors.indices();
        }

        let quotas =
            largest_remainder_quotas(&leaves.iter().map(|m| m.len()).collect::<Vec<_>>(), target);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut out = Vec::with_capacity(target);
        for (members, quota) in leaves.iter().zip(quotas) {
            if quota == members.len() {
                out.extend_from_slice(members);
            } else {
                out.extend(
                    index::sample(&mut rng, members.len(), quota)
                        .into_iter()
                        .map(|k| members[k]),
                );
            }
        }
        out.sort_unstable();
        out
    }
}

/// Splits `target` over buckets in proportion to `sizes`, exactly.
fn largest_remainder_quotas(sizes: &[usize], target: usize) -> Vec<usize> {
    let total: u128 = sizes.iter().map(|&s| s as u128).sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas = Vec::with_capacity(sizes.len());
    let mut remainders = Vec::with_capacity(sizes.len());
    for (i, &s) in sizes.iter().enumerate() {
        let scaled = s as u128 * target as u128;
        quotas.push((scaled / total) as usize);
        remainders.push((scaled % total, i));
    }
    let assigned: usize = quotas.iter().sum();
    // Largest remainder first; earlier leaves win ties.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take(target - assigned) {
        quotas[i] += 1;
    }
    quotas
}

/// Tight bounding cube, inflated by a relative margin of 1e-6.
fn root_cube(points: &[[f64; 3]]) -> Cube {
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            min[a] = min[a].min(p[a]);
            max[a] = max[a].max(p[a]);
        }
    }
    let center = [
        0.5 * (min[0] + max[0]),
        0.5 * (min[1] + max[1]),
        0.5 * (min[2] + max[2]),
    ];
    let extent = (0..3).map(|a| max[a] - min[a]).fold(0.0, f64::max);
    let half = if extent > 0.0 {
        0.5 * extent * (1.0 + 1e-6)
    } else {
        0.5
    };
    Cube { center, half }
}

//! Synthetic camera sets for tests and demos.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, PoseSet};
use crate::pairing::PairingParams;
use crate::quadrant_filter::sample_uniform_camera;

/// Distance between the two `TwoCluster` groups.
pub const CLUSTER_SEPARATION: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TrajectoryKind {
    /// Forward-facing cameras along `+x`, one unit apart.
    Line,
    /// Cameras on a horizontal circle, all facing its centre.
    Orbit,
    /// Downward-facing lattice at height 10.
    Grid,
    /// Two far-apart line segments.
    #[value(name = "two_cluster", alias = "two-cluster")]
    TwoCluster,
}

impl TrajectoryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Orbit => "orbit",
            Self::Grid => "grid",
            Self::TwoCluster => "two_cluster",
        }
    }
}

impl fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(Self::Line),
            "orbit" => Ok(Self::Orbit),
            "grid" => Ok(Self::Grid),
            "two_cluster" | "two-cluster" => Ok(Self::TwoCluster),
            _ => Err(Error::InvalidParams(format!(
                "unknown trajectory kind {s:?}"
            ))),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    Vector3::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    ) * sigma
}

/// Deterministic camera set. `noise` is the standard deviation of the
/// Gaussian jitter added to positions and, before renormalising, to
/// directions.
pub fn generate_trajectory(
    kind: TrajectoryKind,
    n: usize,
    noise: f64,
    seed: u64,
) -> Result<PoseSet> {
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "trajectory needs n >= 2, got {n}"
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "noise must be non-negative, got {noise}"
        )));
    }
    let mut base: Vec<(Vector3<f64>, Vector3<f64>)> = match kind {
        TrajectoryKind::Line => (0..n)
            .map(|i| (Vector3::new(i as f64, 0.0, 0.0), Vector3::x()))
            .collect(),
        TrajectoryKind::Orbit => {
            let radius = (n as f64 / TAU).max(1.0);
            (0..n)
                .map(|i| {
                    let theta = TAU * i as f64 / n as f64;
                    let p = Vector3::new(radius * theta.cos(), radius * theta.sin(), 0.0);
                    (p, -p / radius)
                })
                .collect()
        }
        TrajectoryKind::Grid => {
            let side = (n as f64).sqrt().ceil() as usize;
            (0..n)
                .map(|i| {
                    let p = Vector3::new((i % side) as f64, (i / side) as f64, 10.0);
                    (p, -Vector3::z())
                })
                .collect()
        }
        TrajectoryKind::TwoCluster => {
            let first = n / 2;
            (0..n)
                .map(|i| {
                    let (offset, k) = if i < first {
                        (0.0, i)
                    } else {
                        (CLUSTER_SEPARATION, i - first)
                    };
                    (Vector3::new(offset + k as f64, 0.0, 0.0), Vector3::x())
                })
                .collect()
        }
    };
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (p, d) in &mut base {
            *p += gaussian(&mut rng, noise);
            let jittered = *d + gaussian(&mut rng, noise);
            if jittered.norm() > 1e-3 {
                *d = jittered.normalize();
            }
        }
    }
    let poses = base
        .into_iter()
        .enumerate()
        .map(|(i, (p, d))| {
            CameraPose::new(i as u32 + 1, format!("{}_{:05}.png", kind, i + 1), p, d)
        })
        .collect::<Result<Vec<_>>>()?;
    PoseSet::new(poses)
}

/// Pairing parameters under which a `TwoCluster` set of `n >= 6` cameras
/// only pairs within clusters: two nearest neighbours and no concentric
/// rank below `n`.
pub fn two_cluster_params(n: usize) -> PairingParams {
    PairingParams {
        r: 2,
        h: n.saturating_sub(3).max(1),
        w: 1,
    }
}

/// Uniform positions in `[0, extent]³` and uniform directions.
pub fn uniform_random_poses(n: usize, extent: f64, seed: u64) -> Result<PoseSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses = (0..n)
        .map(|i| {
            let (p, d) = sample_uniform_camera(&mut rng);
            CameraPose::new(
                i as u32 + 1,
                format!("rand_{:05}.png", i + 1),
                p * extent,
                d,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    PoseSet::new(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{connectivity, Adjacency};
    use crate::pairing::select_pairs;

    #[test]
    fn line() {
        let poses = generate_trajectory(TrajectoryKind::Line, 10, 0.0, 0).unwrap();
        for (i, p) in poses.iter().enumerate() {
            assert_eq!(p.position, Vector3::new(i as f64, 0.0, 0.0));
            assert_eq!(p.direction, Vector3::x());
        }
    }

    #[test]
    fn orbit_faces_centroid() {
        let poses = generate_trajectory(TrajectoryKind::Orbit, 4, 0.0, 0).unwrap();
        let centroid = poses.iter().map(|p| p.position).sum::<Vector3<f64>>() / 4.0;
        for p in &poses {
            let to_c = (centroid - p.position).normalize();
            assert!((to_c - p.direction).norm() < 1e-9);
        }
    }

    #[test]
    fn grid_faces_down() {
        let poses = generate_trajectory(TrajectoryKind::Grid, 10, 0.0, 0).unwrap();
        assert_eq!(poses.len(), 10);
        assert!(poses
            .iter()
            .all(|p| p.direction == -Vector3::z() && p.position.z == 10.0));
    }

    #[test]
    fn two_cluster_without_connection_is_disconnected() {
        for n in [8, 9, 40] {
            let poses = generate_trajectory(TrajectoryKind::TwoCluster, n, 0.0, 0).unwrap();
            let pairs = select_pairs(&poses, &two_cluster_params(n))
                .unwrap()
                .without_connection_only();
            let adj = Adjacency::from_edges(
                n,
                pairs.keys().map(|&(a, b)| (a as usize - 1, b as usize - 1)),
            )
            .unwrap();
            assert!(connectivity(&adj).count >= 2, "n = {n}");
        }
    }

    #[test]
    fn noise_is_seeded() {
        let a = generate_trajectory(TrajectoryKind::Orbit, 12, 0.05, 3).unwrap();
        let b = generate_trajectory(TrajectoryKind::Orbit, 12, 0.05, 3).unwrap();
        let c = generate_trajectory(TrajectoryKind::Orbit, 12, 0.05, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_args() {
        assert!(generate_trajectory(TrajectoryKind::Line, 1, 0.0, 0).is_err());
        assert!(generate_trajectory(TrajectoryKind::Line, 5, -1.0, 0).is_err());
        assert!("spiral".parse::<TrajectoryKind>().is_err());
        assert_eq!(
            "two_cluster".parse::<TrajectoryKind>().unwrap(),
            TrajectoryKind::TwoCluster
        );
    }
}

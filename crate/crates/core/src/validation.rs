//! Self-checks behind `camgraph validate`.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{orientation_code, orientation_code_oracle, PoseSet};
use crate::graph::{connectivity, Adjacency};
use crate::io::trajectory::{
    generate_trajectory, two_cluster_params, uniform_random_poses, TrajectoryKind,
};
use crate::pairing::{select_pairs, PairSet, PairingParams};
use crate::quadrant_filter::{monte_carlo_filter_rate, FilterMode, StateTable};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub version: u32,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        Self {
            version: REPORT_VERSION,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationParams {
    pub samples: usize,
    pub oracle_pairs: usize,
    pub trials: usize,
    pub max_cameras: usize,
    pub seed: u64,
}

impl Default for ValidationParams {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            oracle_pairs: 100_000,
            trials: 1000,
            max_cameras: 300,
            seed: 0,
        }
    }
}

/// Tolerance on Monte Carlo filter rates.
pub const RATE_TOLERANCE: f64 = 0.01;

pub fn check_filter_rate(
    table: &StateTable,
    mode: FilterMode,
    samples: usize,
    seed: u64,
) -> Result<Check> {
    let expected = match mode {
        FilterMode::Strict => 13.0 / 16.0,
        FilterMode::Loose => 6.0 / 16.0,
    };
    let rate = monte_carlo_filter_rate(table, mode, samples, seed)?;
    Ok(Check {
        name: format!("filter_rate_{mode}"),
        passed: (rate - expected).abs() <= RATE_TOLERANCE,
        value: rate,
        expected,
        tolerance: RATE_TOLERANCE,
        detail: format!("{samples} uniform random pairs, seed {seed}"),
    })
}

fn unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Random unit-vector pair whose cross-product `x, y` and dot product all
/// exceed `margin` in magnitude.
pub fn sample_direction_pair(rng: &mut impl Rng, margin: f64) -> (Vector3<f64>, Vector3<f64>) {
    loop {
        let (a, b) = (unit(rng), unit(rng));
        let c = a.cross(&b);
        if c.x.abs() > margin && c.y.abs() > margin && a.dot(&b).abs() > margin {
            return (a, b);
        }
    }
}

pub fn check_oracle_equivalence(pairs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0usize;
    let mut first = None;
    for _ in 0..pairs {
        let (a, b) = sample_direction_pair(&mut rng, 1e-9);
        if orientation_code(&a, &b) != orientation_code_oracle(&a, &b) {
            mismatches += 1;
            first.get_or_insert((a, b));
        }
    }
    Check {
        name: "orientation_oracle".into(),
        passed: mismatches == 0,
        value: mismatches as f64,
        expected: 0.0,
        tolerance: 0.0,
        detail: match first {
            None => format!("{pairs} random direction pairs"),
            Some((a, b)) => format!("{mismatches} of {pairs} mismatched, first at {a:?} {b:?}"),
        },
    }
}

pub fn component_count(n: usize, pairs: &PairSet) -> usize {
    let edges = pairs.keys().map(|&(a, b)| (a as usize - 1, b as usize - 1));
    connectivity(&Adjacency::from_edges(n, edges).expect("pair ids lie in 1..=n")).count
}

/// Random `(r, h, w)` with `r in 1..=10`, `h in 1..=40`, `w in 1..=4`.
pub fn random_pairing_params(rng: &mut impl Rng) -> PairingParams {
    PairingParams {
        r: rng.random_range(1..=10),
        h: rng.random_range(1..=40),
        w: rng.random_range(1..=4),
    }
}

pub fn check_connectivity(trials: usize, max_cameras: usize, seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0usize;
    let mut detail = format!("{trials} random pose sets, N in [8, {max_cameras}]");
    for t in 0..trials {
        let n = rng.random_range(8..=max_cameras.max(8));
        let params = random_pairing_params(&mut rng);
        let poses = uniform_random_poses(n, 100.0, rng.random())?;
        let pairs = select_pairs(&poses, &params)?;
        if component_count(n, &pairs) != 1 {
            if failures == 0 {
                detail = format!("trial {t} (N = {n}, {params:?}) is disconnected");
            }
            failures += 1;
        }
    }
    Ok(Check {
        name: "cnnp_connectivity".into(),
        passed: failures == 0,
        value: failures as f64,
        expected: 0.0,
        tolerance: 0.0,
        detail,
    })
}

pub fn check_two_cluster(n: usize) -> Result<Check> {
    let poses = generate_trajectory(TrajectoryKind::TwoCluster, n, 0.0, 0)?;
    let pairs = select_pairs(&poses, &two_cluster_params(n))?.without_connection_only();
    let components = component_count(n, &pairs);
    Ok(Check {
        name: "two_cluster_disconnected".into(),
        passed: components >= 2,
        value: components as f64,
        expected: 2.0,
        tolerance: 0.0,
        detail: format!("two_cluster, n = {n}, no connection pairs"),
    })
}

/// The CNNP graph of a user pose set is connected.
pub fn check_pose_set(poses: &PoseSet, params: &PairingParams) -> Result<Check> {
    let pairs = select_pairs(poses, params)?;
    let components = component_count(poses.len(), &pairs);
    Ok(Check {
        name: "pose_set_connectivity".into(),
        passed: components == 1,
        value: components as f64,
        expected: 1.0,
        tolerance: 0.0,
        detail: format!("{} cameras, {} pairs", poses.len(), pairs.len()),
    })
}

pub fn run_validation(
    table: &StateTable,
    params: &ValidationParams,
    poses: Option<(&PoseSet, &PairingParams)>,
) -> Result<ValidationReport> {
    let mut checks = vec![
        check_filter_rate(table, FilterMode::Strict, params.samples, params.seed)?,
        check_filter_rate(table, FilterMode::Loose, params.samples, params.seed)?,
        check_oracle_equivalence(params.oracle_pairs, params.seed),
        check_connectivity(params.trials, params.max_cameras, params.seed)?,
        check_two_cluster(8)?,
    ];
    if let Some((poses, pairing)) = poses {
        checks.push(check_pose_set(poses, pairing)?);
    }
    Ok(ValidationReport::new(checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let params = ValidationParams {
            samples: 100_000,
            oracle_pairs: 2000,
            trials: 5,
            max_cameras: 40,
            seed: 1,
        };
        let report = run_validation(&StateTable::builtin(), &params, None).unwrap();
        assert!(report.passed, "{report:#?}");
        assert_eq!(report.checks.len(), 5);
    }

    #[test]
    fn margin_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let (a, b) = sample_direction_pair(&mut rng, 0.1);
            assert!(a.cross(&b).x.abs() > 0.1 && a.dot(&b).abs() > 0.1);
        }
    }
}

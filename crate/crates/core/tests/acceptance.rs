//! The ten acceptance criteria, one PASS/FAIL line each.

mod common;

use std::time::Instant;

use camgraph::geometry::{orientation_code, orientation_code_oracle};
use camgraph::graph::{betweenness, sampling_probabilities, Adjacency};
use camgraph::io::trajectory::{
    generate_trajectory, two_cluster_params, uniform_random_poses, TrajectoryKind,
};
use camgraph::octree::{Octree, OctreeParams};
use camgraph::pairing::{select_pairs, PairSet, PairingParams};
use camgraph::photometric::{consistency_loss, ConsistencyInputs, DepthMap, Image, Intrinsics};
use camgraph::quadrant_filter::{monte_carlo_filter_rate, FilterMode, StateTable};
use camgraph::validation::{random_pairing_params, sample_direction_pair};
use camgraph::{CameraGraph, GraphParams};
use common::*;
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn filter_rate(mode: FilterMode, expected: f64) -> Outcome {
    let start = Instant::now();
    let rate = monte_carlo_filter_rate(&StateTable::builtin(), mode, 1_000_000, 2024)
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    check(
        (rate - expected).abs() <= 0.01 && secs < 10.0,
        format!("rate {rate:.5} (target {expected:.4} ± 0.01), {secs:.2} s"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(3);
    let (mut oracle_mismatch, mut frame_mismatch) = (0, 0);
    for _ in 0..100_000 {
        let (a, b) = sample_direction_pair(&mut r, 1e-9);
        let fast = orientation_code(&a, &b);
        oracle_mismatch += usize::from(fast != orientation_code_oracle(&a, &b));
        frame_mismatch += usize::from(fast.bits() != quaternion_orientation_bits(&a, &b));
    }
    check(
        oracle_mismatch == 0 && frame_mismatch == 0,
        format!("{oracle_mismatch} rotation-oracle and {frame_mismatch} quaternion-frame mismatches in 100000 pairs"),
    )
}

/// Union-find component count, independent of the library's BFS.
fn components(n: usize, pairs: &PairSet) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in pairs.keys() {
        let (ra, rb) = (
            find(&mut parent, a as usize - 1),
            find(&mut parent, b as usize - 1),
        );
        parent[ra] = rb;
    }
    (0..n).filter(|&v| find(&mut parent, v) == v).count()
}

fn connectivity() -> Outcome {
    let mut r = rng(4);
    let mut disconnected = 0;
    for _ in 0..1000 {
        let n = r.random_range(8..=300);
        let params = random_pairing_params(&mut r);
        let poses = uniform_random_poses(n, 50.0, r.random()).map_err(|e| e.to_string())?;
        let pairs = select_pairs(&poses, &params).map_err(|e| e.to_string())?;
        disconnected += usize::from(components(n, &pairs) != 1);
    }
    let n = 8;
    let fixture =
        generate_trajectory(TrajectoryKind::TwoCluster, n, 0.0, 0).map_err(|e| e.to_string())?;
    let split = select_pairs(&fixture, &two_cluster_params(n)).map_err(|e| e.to_string())?;
    let with = components(n, &split);
    let without = components(n, &split.without_connection_only());
    check(
        disconnected == 0 && with == 1 && without >= 2,
        format!(
            "{disconnected}/1000 random sets disconnected; two_cluster: {with} component(s) with connection pairs, {without} without"
        ),
    )
}

fn pair_budget() -> Outcome {
    let params = PairingParams::default();
    let poses = uniform_random_poses(600, 100.0, 600).map_err(|e| e.to_string())?;
    let count = select_pairs(&poses, &params)
        .map_err(|e| e.to_string())?
        .len();
    let big = uniform_random_poses(2000, 100.0, 2000).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let big_count = select_pairs(&big, &params)
        .map_err(|e| e.to_string())?
        .len();
    let secs = start.elapsed().as_secs_f64();
    check(
        (14_000..=21_000).contains(&count) && secs < 12.0,
        format!(
            "N=600: {count} pairs (target 14000..=21000); N=2000: {big_count} pairs in {secs:.2} s"
        ),
    )
}

fn betweenness_oracle() -> Outcome {
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (n, edges) = random_connected_graph(&mut r, 12);
        let fast = betweenness(&Adjacency::from_edges(n, edges.iter().copied()).unwrap())
            .map_err(|e| e.to_string())?;
        let slow = brute_force_betweenness(n, &edges);
        worst = fast
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
    }
    let bc = |n: usize, e: &[(usize, usize)]| {
        betweenness(&Adjacency::from_edges(n, e.iter().copied()).unwrap()).unwrap()
    };
    let path_ok = bc(3, &[(0, 1), (1, 2)]) == [0.0, 1.0, 0.0];
    let star_ok = (2..=9).all(|leaves| {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        let w = bc(leaves + 1, &edges);
        w[0] == (leaves * (leaves - 1) / 2) as f64 && w[1..].iter().all(|&v| v == 0.0)
    });
    let cycle_ok = bc(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]) == [0.5; 4];
    check(
        worst <= 1e-9 && path_ok && star_ok && cycle_ok,
        format!("max deviation {worst:.1e} over 200 graphs; path {path_ok}, star {star_ok}, cycle {cycle_ok}"),
    )
}

fn sampling() -> Outcome {
    let poses =
        generate_trajectory(TrajectoryKind::Orbit, 200, 0.3, 7).map_err(|e| e.to_string())?;
    let pairs = select_pairs(&poses, &PairingParams::default()).map_err(|e| e.to_string())?;
    let graph =
        CameraGraph::build(&poses, &pairs, &GraphParams::default()).map_err(|e| e.to_string())?;
    let p = graph.sampling_probabilities();
    let in_range = p.iter().all(|v| (0.5..=1.0).contains(v));
    let w = graph.node_weights();
    let max = w.iter().copied().fold(0.0, f64::max);
    let top_exact = w
        .iter()
        .zip(p)
        .filter(|(wi, _)| **wi == max)
        .all(|(_, pi)| *pi == 1.0);
    let mut worst = 0.0f64;
    for scale in [1e-6, 0.37, 2.0, 1024.0, 3.3e5] {
        let scaled: Vec<f64> = w.iter().map(|v| v * scale).collect();
        let q = sampling_probabilities(&scaled, 0.5).map_err(|e| e.to_string())?;
        worst = p
            .iter()
            .zip(&q)
            .map(|(a, b)| (a - b).abs())
            .fold(worst, f64::max);
    }
    check(
        in_range && top_exact && worst <= 1e-12,
        format!("P in [0.5, 1]: {in_range}; max node at 1.0: {top_exact}; scaling deviation {worst:.1e}"),
    )
}

fn octree_budget() -> Outcome {
    let mut r = rng(8);
    let pts: Vec<[f64; 3]> = (0..300_000)
        .map(|_| [r.random(), r.random(), r.random()])
        .collect();
    let params = OctreeParams {
        target_count: Some(100_000),
        ..OctreeParams::default()
    };
    let tree = Octree::build(&pts, &params).map_err(|e| e.to_string())?;
    let kept = tree.prune(&params);
    let mut octants = [0usize; 8];
    for &i in &kept {
        let p = pts[i];
        octants[usize::from(p[0] >= 0.5)
            | usize::from(p[1] >= 0.5) << 1
            | usize::from(p[2] >= 0.5) << 2] += 1;
    }
    let mean = kept.len() as f64 / 8.0;
    let spread = octants
        .iter()
        .map(|&c| (c as f64 - mean).abs() / mean)
        .fold(0.0, f64::max);

    let identity_params = OctreeParams {
        tau: 0,
        ..OctreeParams::default()
    };
    let identity = Octree::build(&pts, &identity_params)
        .map_err(|e| e.to_string())?
        .prune(&identity_params);
    let identity_ok = identity == (0..pts.len()).collect::<Vec<_>>();

    let sparse: Vec<[f64; 3]> = pts
        .iter()
        .take(20_000)
        .map(|p| [p[0] * p[0] * p[0], p[1], p[2]])
        .collect();
    let sparse_params = OctreeParams {
        tau: 4,
        leaf_capacity: 8,
        ..OctreeParams::default()
    };
    let once = Octree::build(&sparse, &sparse_params)
        .map_err(|e| e.to_string())?
        .pruned(sparse_params.tau);
    let idempotent = once.pruned(sparse_params.tau).indices() == once.indices();
    let removed = sparse.len() - once.indices().len();
    check(
        kept.len().abs_diff(100_000) <= 1 && spread <= 0.03 && identity_ok && idempotent,
        format!(
            "{} points kept (target 100000 ± 1), octant spread {:.2}%; tau=0 identity {identity_ok}; idempotent {idempotent} ({removed} sparse points removed)",
            kept.len(),
            spread * 100.0
        ),
    )
}

fn consistency() -> Outcome {
    let k = Intrinsics {
        fx: 40.0,
        fy: 40.0,
        cx: 15.5,
        cy: 11.5,
    };
    let mut r = rng(9);
    let img = Image::from_fn(32, 24, 3, |_, _, _| r.random());
    let depth = DepthMap::constant(32, 24, 3.0);
    let identity = ConsistencyInputs {
        image_i: &img,
        image_j: &img,
        k_i: k,
        k_j: k,
        r_ji: Matrix3::identity(),
        t_ji: Vector3::zeros(),
        depth_i: &depth,
        lambda: 0.07,
    };
    let zero = consistency_loss(&identity).map_err(|e| e.to_string())?;

    let scene = PlaneScene::horizontal_shift(1.0);
    let (img_i, img_j) = (scene.image_i(3), scene.image_j(3));
    let plane = |scale: f64| {
        let depth = scene.depth_map(scale);
        consistency_loss(&ConsistencyInputs {
            image_i: &img_i,
            image_j: &img_j,
            k_i: scene.k,
            k_j: scene.k,
            r_ji: Matrix3::identity(),
            t_ji: scene.t_ji,
            depth_i: &depth,
            lambda: 0.07,
        })
        .map(|res| res.loss)
        .map_err(|e| e.to_string())
    };
    let (right, doubled) = (plane(1.0)?, plane(2.0)?);
    check(
        zero.loss == 0.0 && zero.valid_fraction == 1.0 && right < 1e-3 && doubled >= 10.0 * right,
        format!(
            "identity loss {}; plane loss {right:.2e}, doubled depth {doubled:.2e}",
            zero.loss
        ),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    common::cli::write_inputs(dir.path());
    let a = common::cli::run_all_stages(dir.path(), &dir.path().join("a"), None);
    let b = common::cli::run_all_stages(dir.path(), &dir.path().join("b"), None);
    let differing: Vec<String> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| std::fs::read(x).ok() != std::fs::read(y).ok())
        .map(|(x, _)| x.display().to_string())
        .collect();
    check(
        differing.is_empty(),
        format!(
            "{} output files compared, {} differ {differing:?}",
            a.len(),
            differing.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("strict filter rate", || {
            filter_rate(FilterMode::Strict, 13.0 / 16.0)
        }),
        ("loose filter rate", || {
            filter_rate(FilterMode::Loose, 6.0 / 16.0)
        }),
        ("orientation oracle equivalence", oracle_equivalence),
        ("pairing connectivity", connectivity),
        ("pair budget", pair_budget),
        ("betweenness oracle", betweenness_oracle),
        ("sampling probabilities", sampling),
        ("octree budget", octree_budget),
        ("consistency loss", consistency),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("PASS [{}] {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL [{}] {name}: {msg}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

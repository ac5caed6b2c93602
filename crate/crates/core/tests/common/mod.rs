#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use camgraph::geometry::{CameraPose, PoseSet};
use camgraph::photometric::{DepthMap, Image, Intrinsics};
use nalgebra::{Rotation3, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pose(id: u32, p: [f64; 3], d: [f64; 3]) -> CameraPose {
    CameraPose::new(
        id,
        format!("img_{id:04}.png"),
        Vector3::from(p),
        Vector3::from(d),
    )
    .unwrap()
}

/// Pairs by sorting every camera's neighbours outright.
pub fn naive_pairs(poses: &PoseSet, r: usize, h: usize, w: usize) -> BTreeSet<(u32, u32)> {
    let mut out = BTreeSet::new();
    for ci in poses {
        let mut others: Vec<(f64, u32)> = poses
            .iter()
            .filter(|c| c.id != ci.id)
            .map(|c| ((c.position - ci.position).norm(), c.id))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (k, &(_, j)) in others.iter().enumerate() {
            let s = k + 1;
            let picked = s <= r || (w > 0 && (s - r) % (h + w) < w);
            if picked {
                out.insert((ci.id.min(j), ci.id.max(j)));
            }
        }
    }
    for i in 2..=poses.len() as u32 {
        out.insert((i - 1, i));
    }
    out
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(
    rng: &mut impl Rng,
    max_nodes: usize,
) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(2..=max_nodes);
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        edges.insert((u, v));
    }
    let extra = rng.random_range(0..=n * (n - 1) / 2);
    let density: f64 = rng.random();
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && rng.random::<f64>() < density {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    (n, edges.into_iter().collect())
}

fn bfs_dist(n: usize, adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; n];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w] == usize::MAX {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

/// Betweenness by listing every shortest path between every unordered pair.
pub fn brute_force_betweenness(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let dist: Vec<Vec<usize>> = (0..n).map(|s| bfs_dist(n, &adj, s)).collect();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if last == t {
                    paths.push(path);
                    continue;
                }
                for &w in &adj[last] {
                    if dist[s][w] == dist[s][last] + 1 && dist[w][t] + 1 == dist[last][t] {
                        let mut next = path.clone();
                        next.push(w);
                        stack.push(next);
                    }
                }
            }
            let total = paths.len() as f64;
            let mut through = vec![0usize; n];
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    through[v] += 1;
                }
            }
            for v in 0..n {
                bc[v] += through[v] as f64 / total;
            }
        }
    }
    bc
}

/// Orientation bits `(sgn c_x, sgn c_y, sgn dot)` read off after an explicit
/// change of frame built from quaternions: `d_i` goes to `+z` and the
/// cross product's horizontal part to the canonical direction.
pub fn quaternion_orientation_bits(d_i: &Vector3<f64>, d_j: &Vector3<f64>) -> [u8; 3] {
    let z = Vector3::z();
    let align = UnitQuaternion::rotation_between(d_i, &z).unwrap_or_else(|| {
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI)
    });
    let c = d_i.cross(d_j);
    let target = Vector3::new(c.x, c.y, 0.0);
    let c_rot = align * c;
    let roll = if target.norm() > 1e-12 && c_rot.xy().norm() > 1e-12 {
        let from = c_rot.xy().normalize();
        let to = target.xy().normalize();
        let angle = (from.x * to.y - from.y * to.x).atan2(from.dot(&to));
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle)
    } else {
        UnitQuaternion::identity()
    };
    let v = (roll * align) * d_j;
    let bit = |x: f64| u8::from(x > 1e-12);
    [bit(-v.y), bit(v.x), bit(v.z)]
}

/// Unit vector uniformly on the sphere.
pub fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n: f64 = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let axis = Unit::new_normalize(random_unit(rng));
    Rotation3::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Smooth texture on the plane, values in `[0.05, 0.95]`.
pub fn plane_texture(x: f64, y: f64, c: usize) -> f64 {
    let phase = c as f64 * 0.7;
    0.5 + 0.25 * (1.3 * x + phase).sin() + 0.2 * (0.9 * y - phase).cos()
}

pub struct PlaneScene {
    pub k: Intrinsics,
    pub width: usize,
    pub height: usize,
    pub depth: f64,
    /// Camera j sits at `-t_ji` in camera i's frame (pure translation).
    pub t_ji: Vector3<f64>,
}

impl PlaneScene {
    /// Camera j shifted right so the plane moves `shift_px` to the left.
    pub fn horizontal_shift(shift_px: f64) -> Self {
        let k = Intrinsics {
            fx: 50.0,
            fy: 50.0,
            cx: 31.5,
            cy: 23.5,
        };
        let depth = 4.0;
        Self {
            k,
            width: 64,
            height: 48,
            depth,
            t_ji: Vector3::new(-shift_px * depth / k.fx, 0.0, 0.0),
        }
    }

    /// Renders what a camera offset by `-t` from camera i sees of the plane
    /// `Z = depth` (in camera i's frame); the texture is a function of the
    /// plane's metric coordinates.
    fn render(&self, t: Vector3<f64>, channels: usize) -> Image {
        Image::from_fn(self.width, self.height, channels, |u, v, c| {
            // Ray in the rendering camera, intersected with the plane.
            let ray = self.k.unproject(u as f64, v as f64);
            let z_plane = self.depth + t.z;
            let s = z_plane / ray.z;
            let hit_cam = ray * s;
            let hit_i = hit_cam - t;
            plane_texture(hit_i.x, hit_i.y, c) as f32
        })
    }

    pub fn image_i(&self, channels: usize) -> Image {
        self.render(Vector3::zeros(), channels)
    }

    pub fn image_j(&self, channels: usize) -> Image {
        self.render(self.t_ji, channels)
    }

    pub fn depth_map(&self, scale: f64) -> DepthMap {
        DepthMap::constant(self.width, self.height, (self.depth * scale) as f32)
    }
}

pub mod cli {
    use std::path::{Path, PathBuf};
    use std::process::{Command, Output};

    use camgraph::io::ply::{write_ply, Encoding, PointCloud};
    use camgraph::io::raster::{save_depth, save_image};
    use rand::Rng;

    use super::{rng, PlaneScene};

    pub const BIN: &str = env!("CARGO_BIN_EXE_camgraph");

    pub fn camgraph(args: &[&str], threads: Option<usize>) -> Output {
        let mut cmd = Command::new(BIN);
        cmd.args(args).env_remove(camgraph::parallel::THREADS_ENV);
        if let Some(n) = threads {
            cmd.env(camgraph::parallel::THREADS_ENV, n.to_string());
        }
        cmd.output().expect("binary runs")
    }

    pub fn ok(args: &[&str], threads: Option<usize>) {
        let out = camgraph(args, threads);
        assert!(
            out.status.success(),
            "camgraph {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }

    /// Shared inputs: a point cloud, two images with depth and cameras.
    pub fn write_inputs(dir: &Path) {
        let mut r = rng(21);
        let pts: Vec<[f64; 3]> = (0..5000)
            .map(|_| {
                [
                    r.random_range(0.0..10.0),
                    r.random_range(0.0..10.0),
                    r.random_range(0.0..2.0),
                ]
            })
            .collect();
        let colors: Vec<[u8; 3]> = (0..pts.len())
            .map(|_| [r.random(), r.random(), r.random()])
            .collect();
        let cloud = PointCloud::from_positions(pts).with_colors(colors).unwrap();
        std::fs::write(
            dir.join("points.ply"),
            write_ply(&cloud, Encoding::BinaryLittleEndian),
        )
        .unwrap();
        std::fs::write(
            dir.join("points_ascii.ply"),
            write_ply(&cloud, Encoding::Ascii),
        )
        .unwrap();

        let scene = PlaneScene::horizontal_shift(1.0);
        save_image(&scene.image_i(3), dir.join("i.png")).unwrap();
        save_image(&scene.image_j(3), dir.join("j.pfm")).unwrap();
        save_depth(&scene.depth_map(1.0), dir.join("depth.pfm")).unwrap();
        let k = serde_json::to_value(scene.k).unwrap();
        let cams = serde_json::json!({
            "k_i": k,
            "k_j": k,
            "r_ji": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            "t_ji": [scene.t_ji.x, scene.t_ji.y, scene.t_ji.z],
        });
        std::fs::write(dir.join("cameras.json"), cams.to_string()).unwrap();
    }

    /// Runs every stage into `out`, reading inputs from `inputs`; returns
    /// the written files in a fixed order.
    pub fn run_all_stages(inputs: &Path, out: &Path, threads: Option<usize>) -> Vec<PathBuf> {
        std::fs::create_dir_all(out).unwrap();
        let i = |n: &str| inputs.join(n).display().to_string();
        let o = |n: &str| out.join(n).display().to_string();
        ok(
            &[
                "gen",
                "--kind",
                "orbit",
                "--n",
                "120",
                "--noise",
                "0.2",
                "--seed",
                "7",
                "-o",
                &o("poses.json"),
            ],
            threads,
        );
        ok(
            &[
                "gen",
                "--kind",
                "grid",
                "--n",
                "64",
                "--noise",
                "0.1",
                "--seed",
                "7",
                "--format",
                "colmap",
                "-o",
                &o("images.txt"),
            ],
            threads,
        );
        ok(
            &[
                "pairs",
                "--poses",
                &o("poses.json"),
                "--r",
                "5",
                "--h",
                "20",
                "--w",
                "1",
                "-o",
                &o("pairs.txt"),
            ],
            threads,
        );
        ok(
            &[
                "pairs",
                "--poses",
                &o("images.txt"),
                "-o",
                &o("grid_pairs.txt"),
            ],
            threads,
        );
        ok(
            &[
                "filter",
                "--poses",
                &o("poses.json"),
                "--matches",
                &o("pairs.txt"),
                "--mode",
                "strict",
                "--report",
                &o("filter_report.json"),
                "-o",
                &o("matches.txt"),
            ],
            threads,
        );
        ok(
            &[
                "graph",
                "--poses",
                &o("poses.json"),
                "--matches",
                &o("matches.txt"),
                "--k",
                "0.5",
                "--min-prob",
                "0.5",
                "--seed",
                "7",
                "-o",
                &o("weights.json"),
            ],
            threads,
        );
        ok(
            &[
                "octree",
                "-i",
                &i("points.ply"),
                "--tau",
                "2",
                "--target-points",
                "1500",
                "--max-depth",
                "6",
                "--seed",
                "7",
                "-o",
                &o("pruned.ply"),
            ],
            threads,
        );
        ok(
            &[
                "octree",
                "-i",
                &i("points_ascii.ply"),
                "--tau",
                "3",
                "-o",
                &o("pruned_ascii.ply"),
            ],
            threads,
        );
        ok(
            &[
                "consistency",
                "--image-i",
                &i("i.png"),
                "--image-j",
                &i("j.pfm"),
                "--depth-i",
                &i("depth.pfm"),
                "--cameras",
                &i("cameras.json"),
                "--lambda",
                "0.07",
                "-o",
                &o("consistency.json"),
            ],
            threads,
        );
        ok(
            &[
                "validate",
                "--samples",
                "100000",
                "--oracle-pairs",
                "5000",
                "--trials",
                "10",
                "--max-cameras",
                "60",
                "--seed",
                "7",
                "--poses",
                &o("poses.json"),
                "-o",
                &o("validation.json"),
            ],
            threads,
        );
        ok(
            &[
                "pipeline",
                "--poses",
                &o("poses.json"),
                "--mode",
                "loose",
                "--points",
                &i("points.ply"),
                "--target-points",
                "1000",
                "--seed",
                "7",
                "--out-dir",
                &o("pipeline"),
            ],
            threads,
        );
        [
            "poses.json",
            "images.txt",
            "pairs.txt",
            "grid_pairs.txt",
            "matches.txt",
            "filter_report.json",
            "weights.json",
            "pruned.ply",
            "pruned_ascii.ply",
            "consistency.json",
            "validation.json",
            "pipeline/pairs.txt",
            "pipeline/matches.txt",
            "pipeline/filter_report.json",
            "pipeline/weights.json",
            "pipeline/points_pruned.ply",
        ]
        .iter()
        .map(|n| out.join(n))
        .collect()
    }
}

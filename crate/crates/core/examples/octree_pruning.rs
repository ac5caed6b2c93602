use camgraph::io::ply::{read_ply, write_ply, Encoding, PointCloud};
use camgraph::{Octree, OctreeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> camgraph::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    // Dense blob plus sparse outliers.
    let mut pts: Vec<[f64; 3]> = (0..20_000)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-0.2..0.2),
            ]
        })
        .collect();
    pts.extend((0..300).map(|_| {
        [
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
            rng.random_range(-50.0..50.0),
        ]
    }));

    let params = OctreeParams {
        tau: 4,
        max_depth: 6,
        leaf_capacity: 1,
        target_count: Some(5_000),
        seed: 9,
    };
    let tree = Octree::build(&pts, &params)?;
    println!(
        "{} nodes, {} leaves",
        tree.nodes().len(),
        tree.leaves().len()
    );
    let survivors = tree.pruned(params.tau).indices().len();
    let kept = tree.prune(&params);
    println!(
        "{} points -> {} after tau={} -> {} after sampling",
        pts.len(),
        survivors,
        params.tau,
        kept.len()
    );

    let cloud = PointCloud::from_positions(pts).select(&kept);
    let bytes = write_ply(&cloud, Encoding::BinaryLittleEndian);
    assert_eq!(read_ply(&bytes)?, cloud);
    println!("binary PLY: {} bytes", bytes.len());
    Ok(())
}

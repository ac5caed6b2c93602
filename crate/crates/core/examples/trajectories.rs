use camgraph::io::trajectory::{generate_trajectory, TrajectoryKind};
use camgraph::pairing::{select_pairs, PairingParams};
use camgraph::validation::component_count;

fn main() -> camgraph::Result<()> {
    let params = PairingParams::default();
    for kind in [
        TrajectoryKind::Line,
        TrajectoryKind::Orbit,
        TrajectoryKind::Grid,
        TrajectoryKind::TwoCluster,
    ] {
        let poses = generate_trajectory(kind, 200, 0.02, 5)?;
        let pairs = select_pairs(&poses, &params)?;
        let bare = pairs.without_connection_only();
        println!(
            "{:<12} {:>5} pairs, {} component(s), {} without connection pairs",
            kind.as_str(),
            pairs.len(),
            component_count(poses.len(), &pairs),
            component_count(poses.len(), &bare)
        );
    }
    Ok(())
}

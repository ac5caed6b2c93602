//! Selects matching pairs along an orbit and prints how many come from each rule.
use camgraph::io::matches::emit_match_list;
use camgraph::io::trajectory::{generate_trajectory, TrajectoryKind};
use camgraph::pairing::{select_pairs, PairingParams};

fn main() -> camgraph::Result<()> {
    let poses = generate_trajectory(TrajectoryKind::Orbit, 120, 0.05, 7)?;
    let params = PairingParams::default();
    let pairs = select_pairs(&poses, &params)?;

    let connection = pairs.iter().filter(|(_, o)| o.is_connection()).count();
    println!(
        "{} cameras, r={} h={} w={} -> {} pairs ({} are connection pairs)",
        poses.len(),
        params.r,
        params.h,
        params.w,
        pairs.len(),
        connection
    );
    let ranked = pairs.without_connection_only().len();
    println!("{ranked} pairs come from the ranking rules");

    let text = emit_match_list(&pairs, &poses)?;
    for line in text.lines().take(5) {
        println!("  {line}");
    }
    Ok(())
}

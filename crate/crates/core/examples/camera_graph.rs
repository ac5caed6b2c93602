//! Builds the weighted camera graph for two clusters joined by a single
//! connection pair and shows that the bridge cameras get the highest
//! sampling probability.
use camgraph::io::trajectory::{generate_trajectory, two_cluster_params, TrajectoryKind};
use camgraph::io::weights::{ParamsEcho, WeightsExport};
use camgraph::pairing::select_pairs;
use camgraph::{CameraGraph, GraphParams};

fn main() -> camgraph::Result<()> {
    let n = 40;
    let poses = generate_trajectory(TrajectoryKind::TwoCluster, n, 0.0, 0)?;
    let pairing = two_cluster_params(n);
    let pairs = select_pairs(&poses, &pairing)?;
    let params = GraphParams {
        normalize_positions: true,
        ..GraphParams::default()
    };
    let graph = CameraGraph::build(&poses, &pairs, &params)?;

    println!(
        "{} nodes, {} edges, {} component(s)",
        graph.node_count(),
        graph.edge_count(),
        graph.components().count
    );
    let mut ranked: Vec<_> = (1..=graph.node_count() as u32)
        .map(|id| (id, graph.sampling_probability(id).unwrap()))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (id, p) in ranked.iter().take(4) {
        let target = graph.target_camera(*id)?;
        println!(
            "  {:<22} P={p:.3}  strongest neighbour {}",
            graph.name(*id).unwrap(),
            graph.name(target).unwrap()
        );
    }

    let export = WeightsExport::from_graph(
        &graph,
        ParamsEcho {
            r: Some(pairing.r),
            h: Some(pairing.h),
            w: Some(pairing.w),
            mode: None,
            k: params.edge.k,
            p_min: params.min_probability,
            seed: None,
        },
    );
    let json = export.to_json()?;
    println!("weights export: {} bytes", json.len());
    Ok(())
}
